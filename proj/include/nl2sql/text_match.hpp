#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nl2sql {

// Classic sequence-matcher similarity: recursively locate the longest
// contiguous matching block, match the flanks the same way, and report
// 2*M / (|a| + |b|) where M is the total matched length. Equivalent to
// the well-known difflib ratio with no junk heuristic. Ties for the
// longest block prefer the earliest position in `a`, then in `b`.
//
// The matcher itself is case-sensitive; callers that need case-folded
// scoring (keyword-vs-cell matching does) lower-case both sides first.
class SequenceRatio {
 public:
  static double ratio(std::string_view a, std::string_view b) {
    if (a.empty() && b.empty()) return 1.0;
    size_t m = SequenceRatio(a, b).total_matched();
    return 2.0 * static_cast<double>(m) / static_cast<double>(a.size() + b.size());
  }

 private:
  SequenceRatio(std::string_view a, std::string_view b) : a_(a), b_(b) {
    for (size_t j = 0; j < b_.size(); ++j) b2j_[b_[j]].push_back(j);
  }

  struct Block {
    size_t i, j, size;
  };

  // Longest matching block within a_[alo,ahi) x b_[blo,bhi).
  Block longest_match(size_t alo, size_t ahi, size_t blo, size_t bhi) const {
    Block best{alo, blo, 0};
    // j2len[j] = length of the match ending at a_[i], b_[j].
    std::unordered_map<size_t, size_t> j2len;
    for (size_t i = alo; i < ahi; ++i) {
      std::unordered_map<size_t, size_t> row;
      auto it = b2j_.find(a_[i]);
      if (it != b2j_.end()) {
        for (size_t j : it->second) {
          if (j < blo) continue;
          if (j >= bhi) break;
          size_t k = 1;
          if (j > blo) {
            auto prev = j2len.find(j - 1);
            if (prev != j2len.end()) k = prev->second + 1;
          }
          row[j] = k;
          if (k > best.size) best = Block{i - k + 1, j - k + 1, k};
        }
      }
      j2len = std::move(row);
    }
    return best;
  }

  size_t matched_in(size_t alo, size_t ahi, size_t blo, size_t bhi) const {
    if (alo >= ahi || blo >= bhi) return 0;
    Block blk = longest_match(alo, ahi, blo, bhi);
    if (blk.size == 0) return 0;
    return blk.size + matched_in(alo, blk.i, blo, blk.j) +
           matched_in(blk.i + blk.size, ahi, blk.j + blk.size, bhi);
  }

  size_t total_matched() const { return matched_in(0, a_.size(), 0, b_.size()); }

  std::string_view a_;
  std::string_view b_;
  std::unordered_map<char, std::vector<size_t>> b2j_;
};

inline double sequence_ratio(std::string_view a, std::string_view b) {
  return SequenceRatio::ratio(a, b);
}

}  // namespace nl2sql
