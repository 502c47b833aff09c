#pragma once

#include <cstddef>
#include <vector>

#include "nlslab/grid.hpp"

namespace nlslab {

/// Quadrature rule used by every functional; one flag so that all conserved
/// quantities are computed consistently within a run.
enum class QuadRule { Trapezoid, Simpson };

namespace detail {

/// Composite Simpson over m = count+1 uniform intervals with explicit zero
/// endpoints; when the interval count is odd the last three intervals use
/// the 3/8 rule so the composite order is uniform.
inline double simpson_interior(double dr, const std::vector<double>& f) {
    const int n = static_cast<int>(f.size());
    const int m = n + 1; // number of intervals with the two zero endpoints
    auto node = [&](int i) -> double {
        if (i == 0 || i == m) return 0.0;
        return f[i - 1];
    };
    double total = 0.0;
    int last = m;
    if (m % 2 != 0) {
        if (m < 3) { // single interval: trapezoid fallback (both ends zero anyway)
            return dr * (node(0) + node(1)) * 0.5;
        }
        last = m - 3;
        total += dr * 3.0 / 8.0 *
                 (node(last) + 3.0 * node(last + 1) + 3.0 * node(last + 2) + node(m));
    }
    double s_odd = 0.0, s_even = 0.0;
    for (int i = 1; i < last; ++i) {
        if (i % 2 == 1) s_odd += node(i);
        else s_even += node(i);
    }
    total += dr / 3.0 * (node(0) + node(last) + 4.0 * s_odd + 2.0 * s_even);
    return total;
}

} // namespace detail

/// Integrate interior samples f_j over [0, r_max] assuming the integrand
/// vanishes at both endpoints (true for every r^{N−1}-weighted functional
/// here: the weight kills r = 0 and fields are Dirichlet at r_max).
inline double integrate_interior(const RadialGrid& g, const std::vector<double>& f,
                                 QuadRule rule = QuadRule::Trapezoid) {
    if (rule == QuadRule::Simpson) return detail::simpson_interior(g.dr(), f);
    double s = 0.0;
    for (double v : f) s += v;
    return s * g.dr();
}

/// Integrate a callable of the node index (convenience overload).
template <typename F>
inline double integrate_nodes(const RadialGrid& g, F&& fn,
                              QuadRule rule = QuadRule::Trapezoid) {
    std::vector<double> f(static_cast<std::size_t>(g.n));
    for (int j = 0; j < g.n; ++j) f[j] = fn(j);
    return integrate_interior(g, f, rule);
}

/// Trapezoid sum over an arbitrary uniform 1-D sample set (no implied zero
/// endpoints); used for line integrals in moving frames.
inline double trapezoid(double dx, const std::vector<double>& f) {
    if (f.size() < 2) return 0.0;
    double s = 0.5 * (f.front() + f.back());
    for (std::size_t i = 1; i + 1 < f.size(); ++i) s += f[i];
    return s * dx;
}

} // namespace nlslab
