#ifndef RELEX_SERIALIZE_HPP_
#define RELEX_SERIALIZE_HPP_

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <variant>

#include "relex/network.hpp"
#include "relex/report.hpp"
#include "relex/verify.hpp"

namespace relex {

/**
 * Network interchange document: one `key = values...` line per field,
 * numbers in %.17g, `#` starts a comment, unknown keys are ignored.
 *
 * Keys: depth, d, d1, d2 (depth 3), W, b, u, V and c (depth 3), optional
 * skip_w and skip_b, optional seed and delta, and query counts as
 * `queries` plus `queries.<phase>`. Depth-2 neurons are the rows of W with
 * offsets b and signs u. Matrices are row-major.
 */
struct NetworkDocument {
  std::variant<TwoLayerNetd, ThreeLayerNetd> net;
  std::optional<std::uint64_t> seed;
  std::optional<double> delta;
  PhaseQueries queries;

  int depth() const { return net.index() == 0 ? 2 : 3; }
  Index dim() const;
  Evaluable evaluable() const;
};

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void write_network(std::ostream &os, const NetworkDocument &doc);
std::string to_text(const NetworkDocument &doc);

/// Throws FormatError on a malformed or inconsistent document.
NetworkDocument read_network(std::istream &is);
NetworkDocument from_text(const std::string &text);

void save_network(const std::string &path, const NetworkDocument &doc);
NetworkDocument load_network(const std::string &path);

}  // namespace relex

#endif  // RELEX_SERIALIZE_HPP_
