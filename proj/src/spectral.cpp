#include "qcpde/spectral.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace qcpde::spectral {
namespace {

struct PlanPair {
    fftw_plan fwd = nullptr;
    fftw_plan inv = nullptr;
};

std::mutex& plan_mutex() {
    static std::mutex m;
    return m;
}

const PlanPair& plans_for(int n) {
    static std::map<int, PlanPair> cache;
    std::lock_guard lock(plan_mutex());
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const auto total = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    auto* scratch = fftw_alloc_complex(total);
    PlanPair p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.fwd = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_FORWARD, flags);
    p.inv = fftw_plan_dft_2d(n, n, scratch, scratch, FFTW_BACKWARD, flags);
    fftw_free(scratch);
    return cache.emplace(n, p).first->second;
}

void execute(fftw_plan plan, std::span<cplx> data) {
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, ptr, ptr);
}

}  // namespace

void forward(int n, std::span<cplx> data) { execute(plans_for(n).fwd, data); }
void inverse(int n, std::span<cplx> data) { execute(plans_for(n).inv, data); }

const Wavenumbers& wavenumbers(const Grid& grid) {
    static std::mutex m;
    static std::map<std::pair<int, double>, std::unique_ptr<Wavenumbers>> cache;
    std::lock_guard lock(m);
    auto key = std::make_pair(grid.n(), grid.half_extent());
    auto it = cache.find(key);
    if (it != cache.end()) return *it->second;

    const int n = grid.n();
    auto w = std::make_unique<Wavenumbers>();
    w->full.resize(n);
    w->deriv.resize(n);
    const double base = std::numbers::pi / grid.half_extent();  // 2 pi / (2L)
    for (int m = 0; m < n; ++m) {
        const int signed_m = m < n / 2 ? m : m - n;
        w->full[m] = base * signed_m;
        w->deriv[m] = (m == n / 2) ? 0.0 : base * signed_m;
    }
    return *cache.emplace(key, std::move(w)).first->second;
}

}  // namespace qcpde::spectral
