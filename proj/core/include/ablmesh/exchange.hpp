#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "ablmesh/error.hpp"
#include "ablmesh/geometry.hpp"

namespace ablmesh {

/// Element kind names used by the exchange format.
enum class ElementKind { triangle, prism, tetrahedron };

const char* to_string(ElementKind k);

/// Entity a field block attaches to.
enum class FieldTarget { node, triangle, prism, tetrahedron };

const char* to_string(FieldTarget t);

/// Element kind in a file that the reader does not understand.
class UnsupportedKindError : public ParseError {
 public:
  using ParseError::ParseError;
};

template <class T>
struct FieldBlock {
  FieldTarget target = FieldTarget::node;
  std::vector<T> values;
};

/// In-memory form of the ASCII exchange format (see docs/exchange-format.md).
struct ExchangeDocument {
  std::vector<Vec3> nodes;
  std::vector<std::array<int, 3>> triangles;
  std::vector<std::array<int, 6>> prisms;
  std::vector<std::array<int, 4>> tetrahedra;
  std::map<std::string, FieldBlock<long long>> int_fields;
  std::map<std::string, FieldBlock<double>> real_fields;
  /// Free-form key/value metadata (no spaces in keys; values to end of line).
  std::map<std::string, std::string> meta;

  std::size_t target_size(FieldTarget t) const;
};

void write_exchange(const ExchangeDocument& doc, std::ostream& os);
void write_exchange(const ExchangeDocument& doc, const std::filesystem::path& path);

/// Parses and checks index ranges and field sizes. `name` prefixes errors.
ExchangeDocument read_exchange(std::istream& is, const std::string& name = "<stream>");
ExchangeDocument read_exchange(const std::filesystem::path& path);

/// Shortest round-trip text is not required; always 17 significant digits.
std::string format_double(double v);

}  // namespace ablmesh
