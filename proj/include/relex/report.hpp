#ifndef RELEX_REPORT_HPP_
#define RELEX_REPORT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace relex {

/// Ordered per-phase query counts of one extraction run.
class PhaseQueries {
 public:
  void add(const std::string &phase, std::uint64_t n) {
    for (auto &entry : entries_) {
      if (entry.first == phase) {
        entry.second += n;
        return;
      }
    }
    entries_.emplace_back(phase, n);
  }

  std::uint64_t get(const std::string &phase) const {
    for (const auto &entry : entries_) {
      if (entry.first == phase) {
        return entry.second;
      }
    }
    return 0;
  }

  std::uint64_t total() const {
    std::uint64_t sum = 0;
    for (const auto &entry : entries_) {
      sum += entry.second;
    }
    return sum;
  }

  const std::vector<std::pair<std::string, std::uint64_t>> &entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::uint64_t>> entries_;
};

}  // namespace relex

#endif  // RELEX_REPORT_HPP_
