#include "spdope/field_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <json.hpp>
#include <optional>

namespace spdope {

namespace {

constexpr const char* kOrder = "row-major-x-fastest";
constexpr const char* kDtype = "f64-le";

std::uint64_t byteswap64(std::uint64_t v) {
  v = ((v & 0x00000000FFFFFFFFull) << 32) | ((v & 0xFFFFFFFF00000000ull) >> 32);
  v = ((v & 0x0000FFFF0000FFFFull) << 16) | ((v & 0xFFFF0000FFFF0000ull) >> 16);
  v = ((v & 0x00FF00FF00FF00FFull) << 8) | ((v & 0xFF00FF00FF00FF00ull) >> 8);
  return v;
}

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
  char bytes[8];
  std::memcpy(bytes, &bits, 8);
  out.append(bytes, 8);
}

double get_le(const char* p) {
  std::uint64_t bits;
  std::memcpy(&bits, p, 8);
  if constexpr (std::endian::native == std::endian::big) bits = byteswap64(bits);
  return std::bit_cast<double>(bits);
}

void write_impl(const std::filesystem::path& path, const Grid3& g, const char* kind,
                std::span<const double> payload) {
  nlohmann::ordered_json header;
  header["kind"] = kind;
  header["N"] = g.points_per_axis();
  header["L"] = g.box_length();
  header["order"] = kOrder;
  header["dtype"] = kDtype;
  std::string blob = header.dump();
  blob.push_back('\n');
  blob.reserve(blob.size() + payload.size() * 8);
  for (double v : payload) put_le(blob, v);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FieldIoError(FieldIoError::Code::io, "cannot open " + path.string() + " for writing");
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw FieldIoError(FieldIoError::Code::io, "write failed: " + path.string());
}

struct RawField {
  std::string kind;
  Grid3 grid;
  std::vector<double> payload;
};

RawField read_raw(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FieldIoError(FieldIoError::Code::io, "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto nl = bytes.find('\n');
  if (nl == std::string::npos) throw FieldIoError(FieldIoError::Code::bad_header, "missing header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(0, nl));
  } catch (const nlohmann::json::exception& e) {
    throw FieldIoError(FieldIoError::Code::bad_header, std::string("header is not JSON: ") + e.what());
  }
  if (!header.is_object() || !header.contains("kind") || !header.contains("N") || !header.contains("L") ||
      header.value("order", "") != kOrder || header.value("dtype", "") != kDtype) {
    throw FieldIoError(FieldIoError::Code::bad_header, "header lacks the field snapshot keys");
  }
  std::string kind = header["kind"].get<std::string>();
  if (kind != "real" && kind != "complex") {
    throw FieldIoError(FieldIoError::Code::bad_header, "unknown kind '" + kind + "'");
  }
  const auto n = header["N"].get<std::size_t>();
  const double box = header["L"].get<double>();
  std::optional<Grid3> grid;
  try {
    grid.emplace(box, n);
  } catch (const std::invalid_argument& e) {
    throw FieldIoError(FieldIoError::Code::bad_header, e.what());
  }
  const std::size_t count = grid->size() * (kind == "complex" ? 2 : 1);
  const std::size_t have = bytes.size() - nl - 1;
  if (have != count * 8) {
    throw FieldIoError(FieldIoError::Code::payload_length,
                       "payload has " + std::to_string(have) + " bytes, expected " + std::to_string(count * 8));
  }
  std::vector<double> payload(count);
  const char* p = bytes.data() + nl + 1;
  for (std::size_t i = 0; i < count; ++i) {
    payload[i] = get_le(p + 8 * i);
    if (!std::isfinite(payload[i])) {
      throw FieldIoError(FieldIoError::Code::non_finite, "non-finite value at payload index " + std::to_string(i));
    }
  }
  return {std::move(kind), *grid, std::move(payload)};
}

RealField as_real(RawField raw) { return RealField(raw.grid, std::move(raw.payload)); }

ComplexField as_complex(const RawField& raw) {
  std::vector<cplx> values(raw.grid.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = {raw.payload[2 * i], raw.payload[2 * i + 1]};
  return ComplexField(raw.grid, std::move(values));
}

}  // namespace

const char* to_string(FieldIoError::Code code) {
  switch (code) {
    case FieldIoError::Code::io: return "io";
    case FieldIoError::Code::bad_header: return "bad_header";
    case FieldIoError::Code::kind_mismatch: return "kind_mismatch";
    case FieldIoError::Code::payload_length: return "payload_length";
    case FieldIoError::Code::non_finite: return "non_finite";
  }
  return "unknown";
}

void write_field(const std::filesystem::path& path, const RealField& f) {
  write_impl(path, f.grid(), "real", f.values());
}

void write_field(const std::filesystem::path& path, const ComplexField& f) {
  std::span<const double> flat(reinterpret_cast<const double*>(f.values().data()), 2 * f.size());
  write_impl(path, f.grid(), "complex", flat);
}

RealField read_real_field(const std::filesystem::path& path) {
  auto raw = read_raw(path);
  if (raw.kind != "real") throw FieldIoError(FieldIoError::Code::kind_mismatch, "expected a real field, file holds " + raw.kind);
  return as_real(std::move(raw));
}

ComplexField read_complex_field(const std::filesystem::path& path) {
  auto raw = read_raw(path);
  if (raw.kind != "complex") {
    throw FieldIoError(FieldIoError::Code::kind_mismatch, "expected a complex field, file holds " + raw.kind);
  }
  return as_complex(raw);
}

std::variant<RealField, ComplexField> read_field(const std::filesystem::path& path) {
  auto raw = read_raw(path);
  if (raw.kind == "real") return as_real(std::move(raw));
  return as_complex(raw);
}

}  // namespace spdope
