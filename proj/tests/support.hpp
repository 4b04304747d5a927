#ifndef UTTPROBE_TESTS_SUPPORT_HPP
#define UTTPROBE_TESTS_SUPPORT_HPP

// Fixtures and reference implementations used only by the tests. The oracles
// are deliberately naive and share no code with the library.

#include <algorithm>
#include <filesystem>
#include <random>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "uttprobe/conllu.hpp"
#include "uttprobe/io.hpp"

namespace testing_support {

namespace fs = std::filesystem;
using uttprobe::SurfaceToken;
using uttprobe::TurnTree;

inline fs::path data_path(const std::string& rel) { return fs::path(UTTPROBE_DATA_DIR) / rel; }

inline TurnTree sample_turn() {
  auto d = uttprobe::parse_conllu(uttprobe::read_file(data_path("fixtures/sample_turn.conllu")));
  return d.at(0).turns.at(0);
}

struct Row {
  std::string form;
  int head;
  std::string deprel;
};

inline TurnTree make_tree(const std::vector<Row>& rows, std::string dialogue = "t", int turn = 0) {
  TurnTree t;
  t.dialogue_id = std::move(dialogue);
  t.turn_index = turn;
  for (const auto& r : rows)
    t.tokens.push_back({static_cast<int>(t.tokens.size()) + 1, r.form, r.head, r.deprel, std::nullopt});
  return t;
}

class TempDir {
 public:
  TempDir() {
    static std::mt19937_64 rng{std::random_device{}()};
    path_ = fs::temp_directory_path() / ("uttprobe-test-" + std::to_string(rng()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

// ---------------------------------------------------------------- oracles

/// j is in subtree(i) iff climbing heads from j reaches i.
inline bool reaches(const TurnTree& t, int j, int i) {
  const int n = static_cast<int>(t.tokens.size());
  for (int v = j, steps = 0; v != 0 && steps <= n; ++steps) {
    if (v == i) return true;
    v = t.tokens[static_cast<std::size_t>(v - 1)].head;
  }
  return false;
}

inline std::vector<int> naive_subtree(const TurnTree& t, int i) {
  std::vector<int> out;
  for (int j = 1; j <= static_cast<int>(t.tokens.size()); ++j)
    if (reaches(t, j, i)) out.push_back(j);
  return out;
}

struct NaiveFlags {
  bool discourse = false, reparandum = false, restart = false;
};

/// Region membership decided token by token from the definitions.
inline std::vector<NaiveFlags> naive_flags(const TurnTree& t) {
  const int n = static_cast<int>(t.tokens.size());
  auto rel = [&](int id) -> const std::string& { return t.tokens[static_cast<std::size_t>(id - 1)].deprel; };
  std::vector<NaiveFlags> out(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    auto& f = out[static_cast<std::size_t>(j - 1)];
    for (int a = 1; a <= n; ++a) {
      if (!reaches(t, j, a)) continue;
      if (rel(a) == "discourse") f.discourse = true;
      if (rel(a) == "reparandum") f.reparandum = true;
    }
    for (int r = 1; r <= n; ++r) {
      if (rel(r) != "parataxis:restart") continue;
      const int h = t.tokens[static_cast<std::size_t>(r - 1)].head;
      if (h == 0 || !reaches(t, j, h)) continue;
      bool excluded = false;
      for (int q = 1; q <= n && !excluded; ++q)
        if (q != h && rel(q) == "parataxis:restart" && reaches(t, q, h) && reaches(t, j, q)) excluded = true;
      if (!excluded) f.restart = true;
    }
  }
  return out;
}

/// Plain O(nm) LCS length.
template <class T>
std::size_t lcs_length(const std::vector<T>& a, const std::vector<T>& b) {
  std::vector<std::vector<std::size_t>> dp(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = a.size(); i-- > 0;)
    for (std::size_t j = b.size(); j-- > 0;)
      dp[i][j] = a[i] == b[j] ? dp[i + 1][j + 1] + 1 : std::max(dp[i + 1][j], dp[i][j + 1]);
  return dp[0][0];
}

struct NaiveCounts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline NaiveCounts naive_counts(const std::vector<bool>& status, const std::vector<bool>& kept) {
  NaiveCounts c;
  for (std::size_t i = 0; i < status.size(); ++i) {
    if (status[i] && kept[i]) ++c.tp;
    if (status[i] && !kept[i]) ++c.fn;
    if (!status[i] && kept[i]) ++c.fp;
    if (!status[i] && !kept[i]) ++c.tn;
  }
  return c;
}

/// Random valid tree: node order shuffled, each node after the first attaches
/// to an earlier one in that order.
inline TurnTree random_tree(std::mt19937_64& rng, int n, const std::vector<std::string>& deprels) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  TurnTree t;
  t.dialogue_id = "rand";
  for (int i = 0; i < n; ++i) t.tokens.push_back({i + 1, "w" + std::to_string(i + 1), 0, "dep", std::nullopt});
  for (int k = 1; k < n; ++k) {
    int parent = order[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(k))];
    auto& tok = t.tokens[static_cast<std::size_t>(order[static_cast<std::size_t>(k)] - 1)];
    tok.head = parent;
    tok.deprel = deprels[rng() % deprels.size()];
  }
  t.tokens[static_cast<std::size_t>(order[0] - 1)].deprel = "root";
  return t;
}

}  // namespace testing_support

#endif  // UTTPROBE_TESTS_SUPPORT_HPP
