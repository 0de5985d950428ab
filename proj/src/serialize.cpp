#include "relex/serialize.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace relex {

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename Derived>
void put(std::ostream &os, const std::string &key, const Eigen::DenseBase<Derived> &m) {
  os << key << " =";
  // Row-major order.
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      os << ' ' << number(static_cast<double>(m(r, c)));
    }
  }
  os << '\n';
}

using Fields = std::map<std::string, std::vector<std::string>>;

Fields parse_fields(std::istream &is) {
  Fields fields;
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) {
        throw FormatError("line " + std::to_string(line_no) + ": expected `key = values`");
      }
      continue;
    }
    std::istringstream key_stream(line.substr(0, eq));
    std::string key;
    key_stream >> key;
    if (key.empty()) {
      throw FormatError("line " + std::to_string(line_no) + ": empty key");
    }
    std::istringstream values(line.substr(eq + 1));
    std::vector<std::string> tokens;
    for (std::string tok; values >> tok;) {
      tokens.push_back(tok);
    }
    fields[key] = std::move(tokens);
  }
  return fields;
}

double to_double(const std::string &key, const std::string &tok) {
  errno = 0;
  char *end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE) {
    throw FormatError(key + ": not a number: " + tok);
  }
  return v;
}

std::uint64_t to_count(const std::string &key, const std::string &tok) {
  errno = 0;
  char *end = nullptr;
  const unsigned long long v = std::strtoull(tok.c_str(), &end, 10);
  if (end == tok.c_str() || *end != '\0' || errno == ERANGE || tok.front() == '-') {
    throw FormatError(key + ": not a non-negative integer: " + tok);
  }
  return v;
}

class Reader {
 public:
  explicit Reader(Fields fields) : fields_(std::move(fields)) {}

  bool has(const std::string &key) const { return fields_.count(key) != 0; }

  const std::vector<std::string> &raw(const std::string &key) const {
    auto it = fields_.find(key);
    if (it == fields_.end()) {
      throw FormatError("missing field: " + key);
    }
    return it->second;
  }

  std::uint64_t count(const std::string &key) const {
    const auto &v = raw(key);
    if (v.size() != 1) {
      throw FormatError(key + ": expected one value");
    }
    return to_count(key, v.front());
  }

  double scalar(const std::string &key) const {
    const auto &v = raw(key);
    if (v.size() != 1) {
      throw FormatError(key + ": expected one value");
    }
    return to_double(key, v.front());
  }

  MatrixXd matrix(const std::string &key, Index rows, Index cols) const {
    const auto &v = raw(key);
    if (static_cast<Index>(v.size()) != rows * cols) {
      throw FormatError(key + ": expected " + std::to_string(rows * cols) + " values, got " +
                        std::to_string(v.size()));
    }
    MatrixXd m(rows, cols);
    for (Index r = 0; r < rows; ++r) {
      for (Index c = 0; c < cols; ++c) {
        m(r, c) = to_double(key, v[static_cast<std::size_t>(r * cols + c)]);
      }
    }
    return m;
  }

  VectorXd vector(const std::string &key, Index n) const { return matrix(key, n, 1); }

  const Fields &fields() const { return fields_; }

 private:
  Fields fields_;
};

}  // namespace

Index NetworkDocument::dim() const {
  return std::visit([](const auto &n) { return n.dim(); }, net);
}

Evaluable NetworkDocument::evaluable() const {
  return std::visit([](const auto &n) -> Evaluable {
    return [n](const VectorXd &x) { return n(x); };
  }, net);
}

void write_network(std::ostream &os, const NetworkDocument &doc) {
  std::optional<AffineMapd> skip;
  if (const auto *two = std::get_if<TwoLayerNetd>(&doc.net)) {
    const auto &neurons = two->neurons();
    const Index d = two->dim();
    const Index d1 = static_cast<Index>(neurons.size());
    MatrixXd W(d1, d);
    VectorXd b(d1);
    VectorXd u(d1);
    for (Index j = 0; j < d1; ++j) {
      W.row(j) = neurons[j].w.transpose();
      b(j) = neurons[j].b;
      u(j) = neurons[j].u;
    }
    os << "depth = 2\nd = " << d << "\nd1 = " << d1 << '\n';
    put(os, "W", W);
    put(os, "b", b.transpose());
    put(os, "u", u.transpose());
    skip = two->skip();
  } else {
    const auto &three = std::get<ThreeLayerNetd>(doc.net);
    os << "depth = 3\nd = " << three.dim() << "\nd1 = " << three.width1()
       << "\nd2 = " << three.width2() << '\n';
    put(os, "W", three.W());
    put(os, "b", three.b().transpose());
    put(os, "V", three.V());
    put(os, "c", three.c().transpose());
    put(os, "u", three.u().transpose());
    skip = three.skip();
  }
  if (skip) {
    put(os, "skip_w", skip->w.transpose());
    os << "skip_b = " << number(skip->b) << '\n';
  }
  if (doc.seed) {
    os << "seed = " << *doc.seed << '\n';
  }
  if (doc.delta) {
    os << "delta = " << number(*doc.delta) << '\n';
  }
  if (!doc.queries.entries().empty()) {
    os << "queries = " << doc.queries.total() << '\n';
    for (const auto &[phase, n] : doc.queries.entries()) {
      os << "queries." << phase << " = " << n << '\n';
    }
  }
}

std::string to_text(const NetworkDocument &doc) {
  std::ostringstream os;
  write_network(os, doc);
  return os.str();
}

NetworkDocument read_network(std::istream &is) {
  const Reader in(parse_fields(is));
  const std::uint64_t depth = in.count("depth");
  const auto d = static_cast<Index>(in.count("d"));
  const auto d1 = static_cast<Index>(in.count("d1"));
  if (d < 1) {
    throw FormatError("d must be >= 1");
  }

  std::optional<AffineMapd> skip;
  const Index skip_dim = depth == 2 ? d : d1;
  if (in.has("skip_w") || in.has("skip_b")) {
    skip = AffineMapd(in.vector("skip_w", skip_dim), in.scalar("skip_b"));
  }

  NetworkDocument doc;
  try {
    if (depth == 2) {
      const MatrixXd W = in.matrix("W", d1, d);
      const VectorXd b = in.vector("b", d1);
      const VectorXd u = in.vector("u", d1);
      std::vector<Neurond> neurons;
      for (Index j = 0; j < d1; ++j) {
        if (u(j) != 1.0 && u(j) != -1.0) {
          throw FormatError("u: entries must be +1 or -1");
        }
        neurons.push_back({W.row(j).transpose(), b(j), u(j) > 0 ? 1 : -1});
      }
      doc.net = TwoLayerNetd(d, std::move(neurons), skip);
    } else if (depth == 3) {
      const auto d2 = static_cast<Index>(in.count("d2"));
      doc.net = ThreeLayerNetd(in.matrix("W", d1, d), in.vector("b", d1),
                               in.matrix("V", d2, d1), in.vector("c", d2),
                               in.vector("u", d2), skip);
    } else {
      throw FormatError("depth must be 2 or 3");
    }
  } catch (const std::invalid_argument &e) {
    throw FormatError(e.what());
  }

  if (in.has("seed")) {
    doc.seed = in.count("seed");
  }
  if (in.has("delta")) {
    doc.delta = in.scalar("delta");
  }
  const std::string prefix = "queries.";
  for (const auto &[key, values] : in.fields()) {
    if (key.rfind(prefix, 0) == 0) {
      doc.queries.add(key.substr(prefix.size()), in.count(key));
    }
  }
  return doc;
}

NetworkDocument from_text(const std::string &text) {
  std::istringstream is(text);
  return read_network(is);
}

void save_network(const std::string &path, const NetworkDocument &doc) {
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path);
  }
  write_network(os, doc);
  if (!os) {
    throw std::runtime_error("write failed: " + path);
  }
}

NetworkDocument load_network(const std::string &path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open: " + path);
  }
  return read_network(is);
}

}  // namespace relex
