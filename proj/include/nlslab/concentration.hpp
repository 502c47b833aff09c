#pragma once

#include <atomic>
#include <cmath>
#include <future>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "nlslab/errors.hpp"
#include "nlslab/functionals.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/ground_state.hpp"
#include "nlslab/transform.hpp"

namespace nlslab {

namespace detail {

/// e^{−1/t} for t > 0, 0 otherwise: the classic C^∞ mollifier ingredient.
inline double bump_exp(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }

/// C^∞ bridge from 1 (at x ≤ 0) down to 0 (at x ≥ 1).
inline double smooth_step_down(double x) {
    const double a = bump_exp(1.0 - x);
    const double b = bump_exp(x);
    return a / (a + b);
}

inline double sinc(double x) {
    return std::abs(x) < 1e-8 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}

} // namespace detail

/// The canonical smooth cutoff pair and the window constants.
///
/// φ is the outer spatial cutoff: identically 1 inside the unit ball and 0
/// outside radius 2. χ is the narrow frequency mollifier: identically 1
/// inside radius 1/8π and 0 outside 1/2π. With 0 ≤ χ ≤ 1 forced, the integral
/// of χ cannot exceed 1/6π² < 1, so "transform equal to 1 at zero frequency"
/// is realized by normalization: the low-pass multiplier applied in the
/// decomposition is m(ξ) = χ̂(ξ)/χ̂(0).
class Cutoffs {
  public:
    double c1 = 10.0;  ///< scales the cutoff radius R and (squared) the tight window
    double c2 = 1.0;   ///< scales the frequency radius ρ and the wide window

    Cutoffs() { build_quadrature(); }
    Cutoffs(double c1_, double c2_) : c1(c1_), c2(c2_) {
        if (!(c1 > 0.0) || !(c2 > 0.0))
            throw std::invalid_argument("Cutoffs: window constants must be positive");
        build_quadrature();
    }

    /// Outer cutoff: 1 for s ≤ 1, 0 for s ≥ 2, C^∞ bridge in between.
    static double phi(double s) {
        if (s <= 1.0) return 1.0;
        if (s >= 2.0) return 0.0;
        return detail::smooth_step_down(s - 1.0);
    }

    /// Frequency-shape bump: 1 for s ≤ 1/8π, 0 for s ≥ 1/2π.
    static double chi(double s) {
        const double a = chi_inner(), b = chi_outer();
        if (s <= a) return 1.0;
        if (s >= b) return 0.0;
        return detail::smooth_step_down((s - a) / (b - a));
    }

    static double chi_inner() { return 1.0 / (8.0 * std::numbers::pi); }
    static double chi_outer() { return 1.0 / (2.0 * std::numbers::pi); }

    /// Normalized 3-D radial Fourier transform of χ: m(0) = 1 exactly, and
    /// |m| ≤ 1 because χ ≥ 0.
    double multiplier(double s) const {
        if (s == 0.0) return 1.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < quad_r_.size(); ++i)
            acc += quad_w_[i] * detail::sinc(s * quad_r_[i]);
        return acc / quad_norm_;
    }

    /// Largest c such that |1 − m(s)| = c·min(s, 1) on a sample grid; the
    /// mollifier contract asserts this stays ≤ 2.
    double multiplier_bound_constant(double s_max = 50.0, int n = 2000) const {
        double worst = 0.0;
        for (int i = 1; i <= n; ++i) {
            const double s = s_max * i / n;
            const double dev = std::abs(1.0 - multiplier(s));
            worst = std::max(worst, dev / std::min(s, 1.0));
        }
        return worst;
    }

  private:
    void build_quadrature() {
        const int n = 2000;
        const double b = chi_outer();
        const double h = b / n;
        quad_r_.resize(n);
        quad_w_.resize(n);
        quad_norm_ = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = (i + 0.5) * h;
            quad_r_[i] = r;
            quad_w_[i] = r * r * chi(r) * h;
            quad_norm_ += quad_w_[i];
        }
    }

    std::vector<double> quad_r_, quad_w_;
    double quad_norm_ = 0.0;
};

/// The two concentration scales attached to a field.
struct WindowScales {
    double R = 0.0;    ///< spatial cutoff radius, c1·mass^{3/4}·‖∇u‖^{−1/2}
    double rho = 0.0;  ///< frequency split radius, c2·‖∇u‖²
};

/// Compute the window scales from the current gradient and the initial mass.
inline WindowScales windows(const ComplexField& u, double u0_mass,
                            const Cutoffs& cutoffs) {
    const double g = grad_sq(u);
    if (!(g > 0.0)) throw ZeroField("windows: field has no gradient content");
    if (!(u0_mass > 0.0))
        throw std::invalid_argument("windows: initial mass must be positive");
    WindowScales w;
    w.R = cutoffs.c1 * std::pow(u0_mass, 0.75) * std::pow(g, -0.25);
    w.rho = cutoffs.c2 * g;
    return w;
}

/// The three-way split u = u1L + u1H + u2.
struct Decomposition {
    ComplexField u1L;  ///< inner, low-frequency part
    ComplexField u1H;  ///< inner, high-frequency remainder
    ComplexField u2;   ///< exterior part, (1 − φ(·/R))·u
    double R = 0.0;
    double rho = 0.0;
};

/// Split u spatially at radius R with φ and then in frequency at ρ with the
/// normalized mollifier transform. The three parts sum back to u to roundoff
/// by construction.
inline Decomposition decompose(const ComplexField& u, double R, double rho,
                               const Cutoffs& cutoffs) {
    if (u.params().N != 3)
        throw UnsupportedDimension("decompose: spectral path requires N = 3");
    if (!(R > 0.0) || !(rho > 0.0))
        throw std::invalid_argument("decompose: window scales must be positive");

    const auto& grid = u.grid();
    std::vector<complexd> inner(u.values()), outer(u.values());
    for (int j = 0; j < u.size(); ++j) {
        const double p = Cutoffs::phi(grid.r(j) / R);
        inner[j] *= p;
        outer[j] *= 1.0 - p;
    }
    const ComplexField u1 = u.with_values(std::move(inner));

    auto spectrum = radial_transform(u1);
    const int n = spectrum.n();
    for (int k = 0; k < n; ++k) {
        const double xi = (k + 1) * std::numbers::pi / spectrum.r_max;
        const double m = cutoffs.multiplier(xi / rho);
        spectrum.re[k] *= m;
        spectrum.im[k] *= m;
    }
    ComplexField u1L = radial_inverse(spectrum, grid, u.params());

    std::vector<complexd> high(u1.values());
    for (int j = 0; j < u.size(); ++j) high[j] -= u1L[j];

    Decomposition d{std::move(u1L), u.with_values(std::move(high)),
                    u.with_values(std::move(outer)), R, rho};
    return d;
}

/// ∫_{r_lo < r ≤ r_hi} |u|^q dV on grid nodes (windows resolved at grid
/// resolution; partial cells are not subdivided).
inline double windowed_lp_pow(const ComplexField& u, double q, double r_lo,
                              double r_hi) {
    const auto& grid = u.grid();
    const double area = sphere_area(u.params().N);
    double acc = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double r = grid.r(j);
        if (r <= r_lo || r > r_hi) continue;
        acc += std::pow(std::abs(u[j]), q) * std::pow(r, u.params().N - 1);
    }
    return area * acc * grid.dr();
}

/// One evaluated inequality: ok ⇔ lhs ≤ rhs.
struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool ok = true;
};

/// Evaluate the three decomposition estimates with an explicit constant c:
///   exterior   ‖u2‖₄⁴  ≤ (c/R²)·‖u‖₂³·‖∇u‖₂      (Strauss-type control)
///   interior   ‖u1H‖₄⁴ ≤ c·ρ^{−1}·‖∇u‖₂⁴          (high-frequency control)
///   conclusion ‖∇u‖₂²  ≤ c·‖u1L‖₄⁴                 (low piece carries the blow-up)
/// Violations are reported, never thrown: the constants are calibration
/// choices, and the conclusion only activates near blow-up.
inline std::map<std::string, BoundCheck> check_bounds(const ComplexField& u,
                                                      const Decomposition& parts,
                                                      const GroundState& gs,
                                                      double c = 4.0) {
    if (u.params().N != 3 || u.params().p != 3.0 || gs.params.N != 3 ||
        gs.params.p != 3.0)
        throw TechnicalRestriction("check_bounds: requires the 3-D cubic case");

    const double m0 = mass(u);
    const double g = grad_sq(u);
    const double gnorm = std::sqrt(g);

    std::map<std::string, BoundCheck> out;
    auto record = [&](const std::string& key, double lhs, double rhs) {
        out[key] = BoundCheck{lhs, rhs, lhs <= rhs};
    };

    const double u2_l4 = lp_pow(parts.u2, 4.0);
    record("u2_quarter", u2_l4,
           c / (parts.R * parts.R) * std::pow(m0, 1.5) * gnorm);
    const double u1H_l4 = lp_pow(parts.u1H, 4.0);
    record("u1H_quarter", u1H_l4, c / parts.rho * g * g);
    const double u1L_l4 = lp_pow(parts.u1L, 4.0);
    record("u1L_lower", g, c * u1L_l4);
    return out;
}

/// Per-snapshot concentration diagnostics.
struct ConcentrationReport {
    double R = 0.0;
    double rho = 0.0;
    double l3_u1L = 0.0;          ///< ‖u1L‖₃
    double l3_u1 = 0.0;           ///< ‖φ(·/R)u‖₃
    double l3_tight_window = 0.0; ///< ‖u‖_{L³(|x| ≤ c1²‖∇u‖⁻²)}
    double l3_wide_window = 0.0;  ///< ‖u‖_{L³(|x| ≤ c2·mass^{3/4}‖∇u‖^{−1/2})}
    double l3_global = 0.0;       ///< ‖u‖₃ over the whole grid
    std::map<std::string, BoundCheck> bound_checks;
};

namespace detail {

inline ConcentrationReport snapshot_report(const ComplexField& u, double u0_mass,
                                           const GroundState& gs,
                                           const Cutoffs& cutoffs) {
    const auto w = windows(u, u0_mass, cutoffs);
    const auto parts = decompose(u, w.R, w.rho, cutoffs);

    ConcentrationReport rep;
    rep.R = w.R;
    rep.rho = w.rho;
    rep.l3_u1L = lp_norm(parts.u1L, 3.0);
    {
        std::vector<complexd> inner(parts.u1L.values());
        for (int j = 0; j < u.size(); ++j) inner[j] += parts.u1H[j];
        rep.l3_u1 = lp_norm(u.with_values(std::move(inner)), 3.0);
    }
    const double g = grad_sq(u);
    const double tight_radius = cutoffs.c1 * cutoffs.c1 / g;
    const double wide_radius =
        cutoffs.c2 * std::pow(u0_mass, 0.75) * std::pow(g, -0.25);
    rep.l3_tight_window = std::cbrt(windowed_lp_pow(u, 3.0, 0.0, tight_radius));
    rep.l3_wide_window = std::cbrt(windowed_lp_pow(u, 3.0, 0.0, wide_radius));
    rep.l3_global = lp_norm(u, 3.0);
    rep.bound_checks = check_bounds(u, parts, gs);
    return rep;
}

} // namespace detail

/// Evaluate the concentration diagnostics along a snapshot series. The
/// initial mass is taken from the first snapshot (mass is conserved along a
/// run). Snapshots are independent, so they can be processed in parallel.
inline std::vector<ConcentrationReport> concentration_report(
    const std::vector<ComplexField>& snapshots, const GroundState& gs,
    const Cutoffs& cutoffs, int n_threads = 1) {
    if (snapshots.empty()) return {};
    const double u0_mass = mass(snapshots.front());

    std::vector<ConcentrationReport> reports(snapshots.size());
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < snapshots.size(); ++i)
            reports[i] = detail::snapshot_report(snapshots[i], u0_mass, gs, cutoffs);
        return reports;
    }

    std::vector<std::future<void>> workers;
    std::atomic<std::size_t> next{0};
    for (int t = 0; t < n_threads; ++t) {
        workers.push_back(std::async(std::launch::async, [&] {
            for (std::size_t i = next.fetch_add(1); i < snapshots.size();
                 i = next.fetch_add(1))
                reports[i] =
                    detail::snapshot_report(snapshots[i], u0_mass, gs, cutoffs);
        }));
    }
    for (auto& w : workers) w.get();
    return reports;
}

/// Which concentration scenario a snapshot series exhibits empirically.
struct ScenarioJudgement {
    bool wide_grows = false;          ///< wide-window norm at least doubles
    bool tight_bounded_below = false; ///< tight-window norm never halves
    double wide_growth_ratio = 0.0;   ///< last/first wide-window norm
    double tight_min_ratio = 0.0;     ///< min/first tight-window norm
};

inline ScenarioJudgement judge_scenario(const std::vector<ConcentrationReport>& reports) {
    if (reports.size() < 2)
        throw InsufficientSamples("judge_scenario: need at least 2 snapshots");
    ScenarioJudgement j;
    const double wide0 = reports.front().l3_wide_window;
    const double tight0 = reports.front().l3_tight_window;
    j.wide_growth_ratio = wide0 > 0.0 ? reports.back().l3_wide_window / wide0 : 0.0;
    double tight_min = reports.front().l3_tight_window;
    for (const auto& r : reports) tight_min = std::min(tight_min, r.l3_tight_window);
    j.tight_min_ratio = tight0 > 0.0 ? tight_min / tight0 : 0.0;
    j.wide_grows = j.wide_growth_ratio >= 2.0;
    j.tight_bounded_below = j.tight_min_ratio >= 0.5;
    return j;
}

} // namespace nlslab
