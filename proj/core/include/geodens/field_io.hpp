#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "geodens/field.hpp"

namespace geodens {

/// Malformed header, truncated payload, or checksum mismatch.
class FieldFormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Git blob object id (SHA-1 over "blob <size>\0" followed by the bytes), hex.
std::string git_blob_sha1(std::string_view bytes);
std::string git_blob_sha1_file(const std::filesystem::path& path);

struct FieldFile {
  int dim = 1;
  int n = 0;
  std::string kind;
  int components = 1;
  std::vector<double> values;
  /// Payload checksum recorded in the header, if any.
  std::optional<std::string> checksum;
};

/// Header line, newline, then little-endian float64 values, components
/// concatenated. The header records the git blob id of the payload.
std::string encode_field(const ScalarField& f);
std::string encode_field(const VectorField& v);
FieldFile decode_field(std::string_view bytes);

void write_field(const std::filesystem::path& path, const ScalarField& f);
void write_field(const std::filesystem::path& path, const VectorField& v);
FieldFile read_field_file(const std::filesystem::path& path);

/// Typed readers; throw FieldFormatError on a kind mismatch.
ScalarField read_scalar_field(const std::filesystem::path& path);
VectorField read_vector_field(const std::filesystem::path& path);

}  // namespace geodens
