#pragma once

#include <map>
#include <mutex>
#include <numbers>
#include <vector>

#include <fftw3.h>

#include "nlslab/errors.hpp"
#include "nlslab/grid.hpp"

namespace nlslab {

namespace detail {

/// Process-wide cache of DST-I plans keyed by size. FFTW plan creation is not
/// thread-safe, so creation is serialized; execution on distinct buffers is
/// concurrent-safe. Plans use FFTW_ESTIMATE for run-to-run determinism and
/// FFTW_UNALIGNED so they apply to any caller buffer.
class DstPlans {
public:
    static DstPlans& instance() {
        static DstPlans p;
        return p;
    }

    void execute(std::vector<double>& data) {
        fftw_plan plan;
        {
            std::lock_guard<std::mutex> lock(mu_);
            auto it = plans_.find(data.size());
            if (it == plans_.end()) {
                std::vector<double> dummy(data.size());
                plan = fftw_plan_r2r_1d(static_cast<int>(data.size()), dummy.data(),
                                        dummy.data(), FFTW_RODFT00,
                                        FFTW_ESTIMATE | FFTW_UNALIGNED);
                plans_.emplace(data.size(), plan);
            } else {
                plan = it->second;
            }
        }
        fftw_execute_r2r(plan, data.data(), data.data());
    }

private:
    DstPlans() = default;
    std::mutex mu_;
    std::map<std::size_t, fftw_plan> plans_;
};

} // namespace detail

/// Unnormalized DST-I: y_k = 2 Σ_j x_j sin(π(j+1)(k+1)/(n+1)).
/// Applying it twice multiplies by 2(n+1).
inline std::vector<double> dst_i(std::vector<double> x) {
    detail::DstPlans::instance().execute(x);
    return x;
}

/// Sine-series coefficients of the substituted variable v = r·u.
struct SineSpectrum {
    std::vector<double> re, im;
    double r_max = 0.0;
    int n() const { return static_cast<int>(re.size()); }
};

/// Laplacian eigenvalue of sine mode k (0-based): ((k+1)π/r_max)².
inline double mode_eigenvalue(int k, double r_max) {
    const double kk = (k + 1) * std::numbers::pi / r_max;
    return kk * kk;
}

/// Forward transform: u ↦ coefficients of v = r·u in the Dirichlet sine basis.
/// Exact diagonalization of the radial Laplacian for N = 3 only.
inline SineSpectrum radial_transform(const ComplexField& u) {
    if (u.params().N != 3)
        throw UnsupportedDimension("spectral path is the N = 3 substitution v = r·u; got N = " +
                                   std::to_string(u.params().N));
    const int n = u.size();
    SineSpectrum s;
    s.r_max = u.grid().r_max;
    s.re.resize(n);
    s.im.resize(n);
    for (int j = 0; j < n; ++j) {
        const complexd v = u.grid().r(j) * u[j];
        s.re[j] = v.real();
        s.im[j] = v.imag();
    }
    s.re = dst_i(std::move(s.re));
    s.im = dst_i(std::move(s.im));
    return s;
}

/// Inverse of radial_transform; round trip is the identity to roundoff.
inline ComplexField radial_inverse(const SineSpectrum& s, const RadialGrid& grid,
                                   const NlsParams& params) {
    if (params.N != 3)
        throw UnsupportedDimension("spectral path is the N = 3 substitution v = r·u; got N = " +
                                   std::to_string(params.N));
    if (s.n() != grid.n)
        throw std::invalid_argument("radial_inverse: spectrum size does not match grid");
    std::vector<double> re = dst_i(s.re);
    std::vector<double> im = dst_i(s.im);
    const double scale = 1.0 / (2.0 * (grid.n + 1));
    std::vector<complexd> v(grid.n);
    for (int j = 0; j < grid.n; ++j)
        v[j] = complexd{re[j] * scale, im[j] * scale} / grid.r(j);
    return ComplexField(grid, params, std::move(v));
}

} // namespace nlslab
