#include "geodens/field_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

namespace geodens {

namespace {

void append_le(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint64_t>(value);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xffu));
}

double read_le(const char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[b])) << (8 * b);
  return std::bit_cast<double>(bits);
}

std::string encode(const Grid& grid, const char* kind, const std::vector<std::span<const double>>& parts) {
  std::string payload;
  payload.reserve(parts.size() * grid.size() * 8);
  for (const auto& part : parts) {
    for (double v : part) append_le(payload, v);
  }
  nlohmann::ordered_json header;
  header["dim"] = grid.dim();
  header["n"] = grid.n();
  header["kind"] = kind;
  header["components"] = parts.size();
  header["byte_order"] = "little";
  header["checksum"] = git_blob_sha1(payload);
  return header.dump() + "\n" + payload;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void dump(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string git_blob_sha1(std::string_view bytes) {
  const std::string prefix = "blob " + std::to_string(bytes.size()) + std::string(1, '\0');
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), prefix.data(), prefix.size()) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &length) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    const unsigned char c = digest[i];
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 0xf]);
  }
  return out;
}

std::string git_blob_sha1_file(const std::filesystem::path& path) { return git_blob_sha1(slurp(path)); }

std::string encode_field(const ScalarField& f) { return encode(f.grid(), "scalar", {f.values()}); }

std::string encode_field(const VectorField& v) {
  std::vector<std::span<const double>> parts;
  for (int j = 0; j < v.dim(); ++j) parts.push_back(v.component(j));
  return encode(v.grid(), "vector", parts);
}

FieldFile decode_field(std::string_view bytes) {
  const auto eol = bytes.find('\n');
  if (eol == std::string_view::npos) throw FieldFormatError("field file: missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, eol));
  } catch (const nlohmann::json::exception& e) {
    throw FieldFormatError(std::string("field file: malformed header: ") + e.what());
  }
  FieldFile f;
  try {
    f.dim = header.at("dim").get<int>();
    f.n = header.at("n").get<int>();
    f.kind = header.at("kind").get<std::string>();
    f.components = header.at("components").get<int>();
    if (header.at("byte_order").get<std::string>() != "little") {
      throw FieldFormatError("field file: unsupported byte order");
    }
    if (header.contains("checksum")) f.checksum = header.at("checksum").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw FieldFormatError(std::string("field file: bad header field: ") + e.what());
  }
  try {
    (void)Grid(f.dim, f.n);
  } catch (const std::invalid_argument& e) {
    throw FieldFormatError(std::string("field file: ") + e.what());
  }
  if (f.kind != "scalar" && f.kind != "vector") throw FieldFormatError("field file: unknown kind " + f.kind);
  if (f.kind == "scalar" ? f.components != 1 : f.components != f.dim) {
    throw FieldFormatError("field file: component count does not match kind");
  }
  std::size_t count = static_cast<std::size_t>(f.components);
  for (int d = 0; d < f.dim; ++d) count *= static_cast<std::size_t>(f.n);
  const std::string_view payload = bytes.substr(eol + 1);
  if (payload.size() != 8 * count) {
    std::ostringstream os;
    os << "field file: payload has " << payload.size() << " bytes, expected " << 8 * count;
    throw FieldFormatError(os.str());
  }
  if (f.checksum && *f.checksum != git_blob_sha1(payload)) {
    throw FieldFormatError("field file: checksum mismatch");
  }
  f.values.resize(count);
  for (std::size_t i = 0; i < count; ++i) f.values[i] = read_le(payload.data() + 8 * i);
  return f;
}

void write_field(const std::filesystem::path& path, const ScalarField& f) { dump(path, encode_field(f)); }

void write_field(const std::filesystem::path& path, const VectorField& v) { dump(path, encode_field(v)); }

FieldFile read_field_file(const std::filesystem::path& path) {
  try {
    return decode_field(slurp(path));
  } catch (const FieldFormatError& e) {
    throw FieldFormatError(path.string() + ": " + e.what());
  }
}

ScalarField read_scalar_field(const std::filesystem::path& path) {
  FieldFile f = read_field_file(path);
  if (f.kind != "scalar") throw FieldFormatError(path.string() + ": expected a scalar field");
  return ScalarField(Grid(f.dim, f.n), std::move(f.values));
}

VectorField read_vector_field(const std::filesystem::path& path) {
  FieldFile f = read_field_file(path);
  if (f.kind != "vector") throw FieldFormatError(path.string() + ": expected a vector field");
  const Grid grid(f.dim, f.n);
  std::vector<std::vector<double>> parts;
  for (int j = 0; j < f.components; ++j) {
    const auto first = f.values.begin() + static_cast<std::ptrdiff_t>(j * grid.size());
    parts.emplace_back(first, first + static_cast<std::ptrdiff_t>(grid.size()));
  }
  return VectorField(grid, std::move(parts));
}

}  // namespace geodens
