#pragma once

#include <limits>
#include <stdexcept>
#include <string>

namespace nlslab {

/// Dimension + nonlinearity exponent for i u_t + Δu + |u|^{p−1}u = 0.
/// The criticality index s_c is always recomputed from (N, p), never stored.
struct NlsParams {
    int N = 3;      ///< spatial dimension (radial symmetry assumed)
    double p = 3.0; ///< nonlinearity exponent, p > 1

    /// Scaling-critical Sobolev index s_c = N/2 − 2/(p−1).
    double s_c() const { return 0.5 * N - 2.0 / (p - 1.0); }

    /// Mass-critical exponent 1 + 4/N.
    double mass_critical_p() const { return 1.0 + 4.0 / N; }

    /// Energy-critical exponent 1 + 4/(N−2) (infinite for N ≤ 2).
    double energy_critical_p() const {
        if (N <= 2) return std::numeric_limits<double>::infinity();
        return 1.0 + 4.0 / (N - 2);
    }

    bool mass_supercritical() const { return p > mass_critical_p(); }
    bool energy_subcritical() const { return p < energy_critical_p(); }

    /// Intercritical window 0 < s_c < 1.
    bool intercritical() const { return mass_supercritical() && energy_subcritical(); }

    /// Validate basic shape; when `require_intercritical` also demand
    /// 0 < s_c < 1 (the regime every quantitative result here lives in).
    void validate(bool require_intercritical = true) const {
        if (N < 1) throw std::invalid_argument("NlsParams: dimension must be >= 1, got " + std::to_string(N));
        if (!(p > 1.0)) throw std::invalid_argument("NlsParams: exponent must be > 1, got " + std::to_string(p));
        if (require_intercritical && !intercritical())
            throw std::invalid_argument(
                "NlsParams: (N, p) = (" + std::to_string(N) + ", " + std::to_string(p) +
                ") is outside the mass-supercritical energy-subcritical window");
    }
};

} // namespace nlslab
