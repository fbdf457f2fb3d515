#include "ablmesh/exchange.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace ablmesh {

namespace {

constexpr const char* kMagic = "ablmesh-exchange";
constexpr int kVersion = 1;

bool parse_kind(const std::string& s, ElementKind& k) {
  if (s == "triangle") k = ElementKind::triangle;
  else if (s == "prism") k = ElementKind::prism;
  else if (s == "tetrahedron") k = ElementKind::tetrahedron;
  else return false;
  return true;
}

bool parse_target(const std::string& s, FieldTarget& t) {
  if (s == "node") t = FieldTarget::node;
  else if (s == "triangle") t = FieldTarget::triangle;
  else if (s == "prism") t = FieldTarget::prism;
  else if (s == "tetrahedron") t = FieldTarget::tetrahedron;
  else return false;
  return true;
}

class LineReader {
 public:
  LineReader(std::istream& is, std::string name) : is_(is), name_(std::move(name)) {}

  /// Next non-empty, non-comment line split into tokens; false at EOF.
  bool next(std::vector<std::string>& tok) {
    std::string line;
    while (std::getline(is_, line)) {
      ++line_;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      tok.clear();
      std::istringstream ss(line);
      std::string t;
      while (ss >> t) tok.push_back(t);
      if (tok.empty()) continue;
      raw_ = line;
      return true;
    }
    return false;
  }

  void expect(std::vector<std::string>& tok, const char* what) {
    if (!next(tok)) fail(std::string("unexpected end of file, expected ") + what);
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(name_, line_, msg); }

  long long to_int(const std::string& s) const {
    long long v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("invalid integer '" + s + "'");
    return v;
  }

  double to_real(const std::string& s) const {
    double v = 0.0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) fail("invalid number '" + s + "'");
    return v;
  }

  int line() const { return line_; }
  const std::string& name() const { return name_; }
  const std::string& raw() const { return raw_; }

 private:
  std::istream& is_;
  std::string name_;
  std::string raw_;
  int line_ = 0;
};

template <std::size_t K>
void read_connectivity(LineReader& in, std::size_t count, std::vector<std::array<int, K>>& out,
                       const char* kind) {
  std::vector<std::string> tok;
  out.resize(count);
  for (std::size_t e = 0; e < count; ++e) {
    in.expect(tok, kind);
    if (tok.size() != K + 1) in.fail(std::string("expected index and ") + std::to_string(K) + " node ids for " + kind);
    if (in.to_int(tok[0]) != static_cast<long long>(e)) in.fail("element index out of sequence");
    for (std::size_t k = 0; k < K; ++k) out[e][k] = static_cast<int>(in.to_int(tok[k + 1]));
  }
}

}  // namespace

const char* to_string(ElementKind k) {
  switch (k) {
    case ElementKind::triangle: return "triangle";
    case ElementKind::prism: return "prism";
    case ElementKind::tetrahedron: return "tetrahedron";
  }
  return "?";
}

const char* to_string(FieldTarget t) {
  switch (t) {
    case FieldTarget::node: return "node";
    case FieldTarget::triangle: return "triangle";
    case FieldTarget::prism: return "prism";
    case FieldTarget::tetrahedron: return "tetrahedron";
  }
  return "?";
}

std::size_t ExchangeDocument::target_size(FieldTarget t) const {
  switch (t) {
    case FieldTarget::node: return nodes.size();
    case FieldTarget::triangle: return triangles.size();
    case FieldTarget::prism: return prisms.size();
    case FieldTarget::tetrahedron: return tetrahedra.size();
  }
  return 0;
}

std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  if (ec != std::errc()) throw Error("format_double: conversion failed");
  return std::string(buf, p);
}

void write_exchange(const ExchangeDocument& doc, std::ostream& os) {
  os << kMagic << ' ' << kVersion << '\n';
  os << "kinds";
  if (!doc.triangles.empty()) os << " triangle";
  if (!doc.prisms.empty()) os << " prism";
  if (!doc.tetrahedra.empty()) os << " tetrahedron";
  os << '\n';
  os << "counts nodes " << doc.nodes.size() << " triangle " << doc.triangles.size() << " prism "
     << doc.prisms.size() << " tetrahedron " << doc.tetrahedra.size() << '\n';
  for (const auto& [k, v] : doc.meta) os << "meta " << k << ' ' << v << '\n';

  os << "nodes " << doc.nodes.size() << '\n';
  for (std::size_t i = 0; i < doc.nodes.size(); ++i) {
    const Vec3& p = doc.nodes[i];
    os << i << ' ' << format_double(p.x) << ' ' << format_double(p.y) << ' ' << format_double(p.z)
       << '\n';
  }
  auto block = [&os](const char* kind, const auto& elems) {
    if (elems.empty()) return;
    os << "elements " << kind << ' ' << elems.size() << '\n';
    for (std::size_t e = 0; e < elems.size(); ++e) {
      os << e;
      for (int v : elems[e]) os << ' ' << v;
      os << '\n';
    }
  };
  block("triangle", doc.triangles);
  block("prism", doc.prisms);
  block("tetrahedron", doc.tetrahedra);
  for (const auto& [name, f] : doc.int_fields) {
    os << "field " << name << ' ' << to_string(f.target) << " int " << f.values.size() << '\n';
    for (std::size_t i = 0; i < f.values.size(); ++i) os << i << ' ' << f.values[i] << '\n';
  }
  for (const auto& [name, f] : doc.real_fields) {
    os << "field " << name << ' ' << to_string(f.target) << " real " << f.values.size() << '\n';
    for (std::size_t i = 0; i < f.values.size(); ++i) os << i << ' ' << format_double(f.values[i]) << '\n';
  }
  os << "end\n";
}

void write_exchange(const ExchangeDocument& doc, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw InputError("cannot open '" + path.string() + "' for writing");
  write_exchange(doc, os);
  os.flush();
  if (!os) throw InputError("write failed: '" + path.string() + "'");
}

ExchangeDocument read_exchange(std::istream& is, const std::string& name) {
  LineReader in(is, name);
  ExchangeDocument doc;
  std::vector<std::string> tok;
  in.expect(tok, "header");
  if (tok.size() != 2 || tok[0] != kMagic) in.fail("not an ablmesh exchange file");
  if (in.to_int(tok[1]) != kVersion) in.fail("unsupported format version " + tok[1]);

  in.expect(tok, "kinds line");
  if (tok[0] != "kinds") in.fail("expected 'kinds'");
  for (std::size_t i = 1; i < tok.size(); ++i) {
    ElementKind k;
    if (!parse_kind(tok[i], k)) throw UnsupportedKindError(name, in.line(), "unsupported element kind '" + tok[i] + "'");
  }
  in.expect(tok, "counts line");
  if (tok.size() != 9 || tok[0] != "counts" || tok[1] != "nodes" || tok[3] != "triangle" ||
      tok[5] != "prism" || tok[7] != "tetrahedron")
    in.fail("malformed counts line");
  const long long n_nodes = in.to_int(tok[2]);
  const long long n_tri = in.to_int(tok[4]);
  const long long n_pri = in.to_int(tok[6]);
  const long long n_tet = in.to_int(tok[8]);
  if (n_nodes < 0 || n_tri < 0 || n_pri < 0 || n_tet < 0) in.fail("negative count");

  bool saw_end = false;
  while (in.next(tok)) {
    const std::string& key = tok[0];
    if (key == "end") {
      saw_end = true;
      break;
    }
    if (key == "meta") {
      if (tok.size() < 2) in.fail("meta needs a key");
      const std::string& raw = in.raw();
      const auto kpos = raw.find(tok[1], raw.find("meta") + 4);
      std::string value = raw.substr(kpos + tok[1].size());
      const auto first = value.find_first_not_of(" \t");
      value = first == std::string::npos ? std::string() : value.substr(first);
      doc.meta[tok[1]] = value;
    } else if (key == "nodes") {
      if (tok.size() != 2) in.fail("malformed nodes header");
      const long long n = in.to_int(tok[1]);
      if (n != n_nodes) in.fail("node count disagrees with counts line");
      doc.nodes.resize(static_cast<std::size_t>(n));
      for (long long i = 0; i < n; ++i) {
        in.expect(tok, "node");
        if (tok.size() != 4) in.fail("expected 'index x y z'");
        if (in.to_int(tok[0]) != i) in.fail("node index out of sequence");
        doc.nodes[i] = {in.to_real(tok[1]), in.to_real(tok[2]), in.to_real(tok[3])};
      }
    } else if (key == "elements") {
      if (tok.size() != 3) in.fail("malformed elements header");
      ElementKind k;
      if (!parse_kind(tok[1], k))
        throw UnsupportedKindError(name, in.line(), "unsupported element kind '" + tok[1] + "'");
      const auto n = static_cast<std::size_t>(in.to_int(tok[2]));
      switch (k) {
        case ElementKind::triangle:
          if (static_cast<long long>(n) != n_tri) in.fail("triangle count disagrees with counts line");
          read_connectivity(in, n, doc.triangles, "triangle");
          break;
        case ElementKind::prism:
          if (static_cast<long long>(n) != n_pri) in.fail("prism count disagrees with counts line");
          read_connectivity(in, n, doc.prisms, "prism");
          break;
        case ElementKind::tetrahedron:
          if (static_cast<long long>(n) != n_tet) in.fail("tetrahedron count disagrees with counts line");
          read_connectivity(in, n, doc.tetrahedra, "tetrahedron");
          break;
      }
    } else if (key == "field") {
      if (tok.size() != 5) in.fail("malformed field header");
      FieldTarget target;
      if (!parse_target(tok[2], target)) in.fail("unknown field target '" + tok[2] + "'");
      const long long n = in.to_int(tok[4]);
      if (n < 0) in.fail("negative field size");
      const std::string fname = tok[1];
      if (tok[3] == "int") {
        auto& f = doc.int_fields[fname];
        f.target = target;
        f.values.resize(static_cast<std::size_t>(n));
        for (long long i = 0; i < n; ++i) {
          in.expect(tok, "field value");
          if (tok.size() != 2 || in.to_int(tok[0]) != i) in.fail("expected 'index value'");
          f.values[i] = in.to_int(tok[1]);
        }
      } else if (tok[3] == "real") {
        auto& f = doc.real_fields[fname];
        f.target = target;
        f.values.resize(static_cast<std::size_t>(n));
        for (long long i = 0; i < n; ++i) {
          in.expect(tok, "field value");
          if (tok.size() != 2 || in.to_int(tok[0]) != i) in.fail("expected 'index value'");
          f.values[i] = in.to_real(tok[1]);
        }
      } else {
        in.fail("field type must be 'int' or 'real'");
      }
    } else {
      in.fail("unknown section '" + key + "'");
    }
  }
  if (!saw_end) in.fail("missing 'end' (truncated file?)");
  if (doc.nodes.size() != static_cast<std::size_t>(n_nodes)) in.fail("missing nodes section");
  if (doc.triangles.size() != static_cast<std::size_t>(n_tri) ||
      doc.prisms.size() != static_cast<std::size_t>(n_pri) ||
      doc.tetrahedra.size() != static_cast<std::size_t>(n_tet))
    in.fail("missing element section");

  auto check_ids = [&](const auto& elems, const char* kind) {
    for (std::size_t e = 0; e < elems.size(); ++e)
      for (int v : elems[e])
        if (v < 0 || v >= static_cast<int>(doc.nodes.size()))
          throw InputError(name + ": " + kind + " " + std::to_string(e) + " references missing node " +
                           std::to_string(v));
  };
  check_ids(doc.triangles, "triangle");
  check_ids(doc.prisms, "prism");
  check_ids(doc.tetrahedra, "tetrahedron");
  for (const auto& [fname, f] : doc.int_fields)
    if (f.values.size() != doc.target_size(f.target))
      throw InputError(name + ": field '" + fname + "' size does not match its target");
  for (const auto& [fname, f] : doc.real_fields)
    if (f.values.size() != doc.target_size(f.target))
      throw InputError(name + ": field '" + fname + "' size does not match its target");
  return doc;
}

ExchangeDocument read_exchange(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw InputError("cannot open '" + path.string() + "'");
  return read_exchange(is, path.string());
}

}  // namespace ablmesh
