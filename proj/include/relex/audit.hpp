#ifndef RELEX_AUDIT_HPP_
#define RELEX_AUDIT_HPP_

#include <atomic>
#include <cstdint>

namespace relex::audit {

// Counts reads of ground-truth network parameters that happen outside a
// query oracle evaluation. Extraction code must leave it unchanged.
inline std::atomic<std::uint64_t> g_parameter_reads{0};
inline thread_local int g_oracle_depth = 0;

inline void note_parameter_read() {
  if (g_oracle_depth == 0) {
    g_parameter_reads.fetch_add(1, std::memory_order_relaxed);
  }
}

inline std::uint64_t parameter_reads() {
  return g_parameter_reads.load(std::memory_order_relaxed);
}

/// Marks the current thread as evaluating through a query oracle.
class OracleScope {
 public:
  OracleScope() { ++g_oracle_depth; }
  ~OracleScope() { --g_oracle_depth; }
  OracleScope(const OracleScope &) = delete;
  OracleScope &operator=(const OracleScope &) = delete;
};

}  // namespace relex::audit

#endif  // RELEX_AUDIT_HPP_
