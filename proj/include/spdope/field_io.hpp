#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <variant>

#include "spdope/field.hpp"

namespace spdope {

/// Snapshot files: one JSON header line
///   {"kind":"complex"|"real","N":..,"L":..,"order":"row-major-x-fastest","dtype":"f64-le"}
/// followed by the raw little-endian doubles (re, im interleaved for complex).
class FieldIoError : public std::runtime_error {
 public:
  enum class Code { io, bad_header, kind_mismatch, payload_length, non_finite };
  FieldIoError(Code code, const std::string& what) : std::runtime_error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

const char* to_string(FieldIoError::Code code);

void write_field(const std::filesystem::path& path, const RealField& f);
void write_field(const std::filesystem::path& path, const ComplexField& f);

RealField read_real_field(const std::filesystem::path& path);
ComplexField read_complex_field(const std::filesystem::path& path);
std::variant<RealField, ComplexField> read_field(const std::filesystem::path& path);

}  // namespace spdope
