#pragma once

#include <filesystem>
#include <optional>
#include <variant>

#include "qcpde/grid.hpp"

namespace qcpde::io {

// BFLD v1, little-endian:
//   "BFLD" | u32 version = 1 | u32 n | f64 L | u8 dtype | payload
// dtype 0 is f64 real, 1 is c128 complex (re, im interleaved); the payload is
// row-major in the Grid's flat index order.

enum class DType : unsigned char { Real = 0, Complex = 1 };

void write_bfld(const std::filesystem::path& path, const RealField& f);
void write_bfld(const std::filesystem::path& path, const ComplexField& f);

using AnyField = std::variant<RealField, ComplexField>;

/// Throws ConfigError on a malformed or truncated file, or a bad header.
AnyField read_bfld(const std::filesystem::path& path);
ComplexField read_complex(const std::filesystem::path& path);  // promotes real files
RealField read_real(const std::filesystem::path& path);        // rejects complex files

/// Lines "x,y,re,im", one per node in flat index order, after a header line.
void write_csv(const std::filesystem::path& path, const ComplexField& f);
void write_csv(const std::filesystem::path& path, const RealField& f);

/// Smallest node radius containing every nonzero sample, 0 for a zero field
/// (support declarations are not stored in BFLD files).
std::optional<double> infer_support(const ComplexField& f);
std::optional<double> infer_support(const RealField& f);

}  // namespace qcpde::io
