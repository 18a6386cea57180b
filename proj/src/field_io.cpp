#include "qcpde/field_io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>

#include "qcpde/errors.hpp"

namespace qcpde::io {
namespace {

constexpr std::array<char, 4> kMagic{'B', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> bytes;
    std::memcpy(bytes.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    out.write(reinterpret_cast<const char*>(bytes.data()), sizeof(T));
}

template <class T>
T get_le(std::istream& in, const std::filesystem::path& path) {
    std::array<unsigned char, sizeof(T)> bytes;
    if (!in.read(reinterpret_cast<char*>(bytes.data()), sizeof(T))) {
        throw ConfigError("truncated BFLD file: " + path.string());
    }
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
    T value;
    std::memcpy(&value, bytes.data(), sizeof(T));
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    return out;
}

void write_header(std::ostream& out, const Grid& g, DType t) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, kVersion);
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(g.n()));
    put_le<double>(out, g.half_extent());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(t));
}

}  // namespace

void write_bfld(const std::filesystem::path& path, const RealField& f) {
    auto out = open_out(path);
    write_header(out, f.grid(), DType::Real);
    for (double v : f.values()) put_le<double>(out, v);
    if (!out) throw ConfigError("write failed: " + path.string());
}

void write_bfld(const std::filesystem::path& path, const ComplexField& f) {
    auto out = open_out(path);
    write_header(out, f.grid(), DType::Complex);
    for (cplx v : f.values()) {
        put_le<double>(out, v.real());
        put_le<double>(out, v.imag());
    }
    if (!out) throw ConfigError("write failed: " + path.string());
}

AnyField read_bfld(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open field file: " + path.string());
    std::array<char, 4> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
        throw ConfigError("not a BFLD file: " + path.string());
    }
    if (get_le<std::uint32_t>(in, path) != kVersion) {
        throw ConfigError("unsupported BFLD version: " + path.string());
    }
    const auto n = get_le<std::uint32_t>(in, path);
    const auto L = get_le<double>(in, path);
    const auto dtype = get_le<std::uint8_t>(in, path);
    const Grid grid = Grid::make(static_cast<int>(n), L);

    if (dtype == static_cast<std::uint8_t>(DType::Real)) {
        std::vector<double> data(grid.size());
        for (auto& v : data) v = get_le<double>(in, path);
        return RealField(grid, std::move(data));
    }
    if (dtype == static_cast<std::uint8_t>(DType::Complex)) {
        std::vector<cplx> data(grid.size());
        for (auto& v : data) {
            const double re = get_le<double>(in, path);
            const double im = get_le<double>(in, path);
            v = {re, im};
        }
        return ComplexField(grid, std::move(data));
    }
    throw ConfigError("unknown BFLD dtype in " + path.string());
}

ComplexField read_complex(const std::filesystem::path& path) {
    auto any = read_bfld(path);
    if (auto* c = std::get_if<ComplexField>(&any)) return std::move(*c);
    return to_complex(std::get<RealField>(any));
}

RealField read_real(const std::filesystem::path& path) {
    auto any = read_bfld(path);
    if (auto* r = std::get_if<RealField>(&any)) return std::move(*r);
    throw ConfigError("expected a real field in " + path.string());
}

namespace {

template <class T>
void csv_impl(const std::filesystem::path& path, const Field<T>& f) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw ConfigError("cannot open for writing: " + path.string());
    out << "x,y,re,im\n" << std::setprecision(17);
    for (std::size_t i = 0; i < f.size(); ++i) {
        const cplx z = f.grid().node(i);
        const cplx v = f[i];
        out << z.real() << ',' << z.imag() << ',' << v.real() << ',' << v.imag() << '\n';
    }
}

template <class T>
std::optional<double> support_impl(const Field<T>& f) {
    double r = -1.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        if (f[i] != T{}) r = std::max(r, std::abs(f.grid().node(i)));
    }
    if (r < 0.0) return 0.0;
    return r;
}

}  // namespace

void write_csv(const std::filesystem::path& path, const ComplexField& f) { csv_impl(path, f); }
void write_csv(const std::filesystem::path& path, const RealField& f) { csv_impl(path, f); }

std::optional<double> infer_support(const ComplexField& f) { return support_impl(f); }
std::optional<double> infer_support(const RealField& f) { return support_impl(f); }

}  // namespace qcpde::io
