#pragma once

#include <cmath>
#include <optional>
#include <string>

#include "nlslab/errors.hpp"
#include "nlslab/functionals.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/ground_state.hpp"

namespace nlslab {

enum class Verdict { Global, FiniteTimeBlowup, BlowupBarrierOnly, Indeterminate };
enum class Route { MassEnergyBelow, NegativeEnergy, LocalizedVirial, ThresholdFail };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Global: return "Global";
        case Verdict::FiniteTimeBlowup: return "FiniteTimeBlowup";
        case Verdict::BlowupBarrierOnly: return "BlowupBarrierOnly";
        default: return "Indeterminate";
    }
}
inline const char* to_string(Route r) {
    switch (r) {
        case Route::MassEnergyBelow: return "MassEnergyBelow";
        case Route::NegativeEnergy: return "NegativeEnergy";
        case Route::LocalizedVirial: return "LocalizedVirial";
        default: return "ThresholdFail";
    }
}

/// Outcome of the dichotomy analysis for one initial datum.
struct ClassificationReport {
    double s_c = 0.0;
    double lambda0 = 0.0;           ///< E^{s_c} M^{1−s_c}; −1 sentinel when E < 0
    double grad_mass_product = 0.0; ///< ‖∇u₀‖^{s_c} ‖u₀‖^{1−s_c}
    double x1 = 0.0;                ///< location of the barrier maximum of f
    double f_at_x1 = 0.0;           ///< barrier height f(x₁) = (s_c/N) x₁²
    Verdict verdict = Verdict::Indeterminate;
    Route route = Route::ThresholdFail;
    std::optional<double> delta;        ///< threshold margin used by the localized route
    std::optional<double> delta_tilde;  ///< refined barrier lift (x₂/x₁ − 1)
    std::optional<double> epsilon;      ///< absorption parameter chosen in the window
    std::optional<double> m_threshold;  ///< localization radius certified sufficient

    // Context for report consumers.
    double energy = 0.0;
    double mass = 0.0;
    double grad_norm = 0.0;
    double f_gap = 0.0;  ///< f(x₁) − E, the quantitative trapping margin (≥ 0 when trapped)
    double sigma_pn = 0.0;
    double lambda_threshold = 0.0;
    bool radial = false;
    bool finite_variance = false;
};

/// Barrier function f(x) = x²/2 − (c_gn/(p+1)) ‖u₀‖^{2−(N−2)(p−1)/2} x^{N(p−1)/2}.
inline double barrier_f(double x, double l2_norm, const GroundState& gs) {
    const double N = gs.params.N, p = gs.params.p;
    const double mass_pow = std::pow(l2_norm, 2.0 - (N - 2.0) * (p - 1.0) / 2.0);
    return 0.5 * x * x - gs.c_gn / (p + 1.0) * mass_pow * std::pow(x, 0.5 * N * (p - 1.0));
}

/// Fill the two scale-invariant quantities (Λ₀ and the gradient-mass product)
/// plus the barrier geometry; E < 0 short-circuits Λ₀ to the −1 sentinel.
inline ClassificationReport scaling_invariants(const ComplexField& u0, const GroundState& gs,
                                               QuadRule rule = QuadRule::Simpson) {
    ClassificationReport rep;
    const double sc = gs.params.s_c();
    rep.s_c = sc;
    rep.sigma_pn = gs.sigma_pn;
    rep.lambda_threshold = gs.lambda_threshold;
    rep.mass = mass(u0, rule);
    rep.energy = energy(u0, rule);
    const double g2 = grad_sq(u0, rule);
    rep.grad_norm = std::sqrt(g2);
    const double l2 = std::sqrt(rep.mass);
    rep.grad_mass_product = std::pow(rep.grad_norm, sc) * std::pow(l2, 1.0 - sc);
    if (rep.energy < 0.0) {
        rep.lambda0 = -1.0; // sentinel: Λ₀ undefined for negative energy
        rep.route = Route::NegativeEnergy;
    } else {
        rep.lambda0 = std::pow(rep.energy, sc) * std::pow(rep.mass, 1.0 - sc);
    }
    rep.x1 = std::pow(gs.sigma_pn, 1.0 / sc) * std::pow(l2, -(1.0 - sc) / sc);
    rep.f_at_x1 = sc / gs.params.N * rep.x1 * rep.x1;
    rep.f_gap = rep.f_at_x1 - rep.energy;
    return rep;
}

/// Result of the localized (infinite-variance radial) analysis.
struct LocalizedRoute {
    double delta = 0.0;
    double delta_tilde = 0.0;
    double epsilon = 0.0;
    double m_threshold = 0.0;
    Verdict verdict = Verdict::Indeterminate;
};

namespace detail {

/// Largest tail coefficient sup_t (c̃ t − (ε/2) t^{4/(p−1)}) from the Young
/// split of the gradient-power tail term.
inline double young_constant(double c_tilde, double eps, double p) {
    if (c_tilde <= 0.0) return 0.0;
    const double r = 4.0 / (p - 1.0); // conjugate powers r and 4/(5−p)
    const double t_star = std::pow(2.0 * c_tilde / (eps * r), (p - 1.0) / (5.0 - p));
    return c_tilde * t_star - 0.5 * eps * std::pow(t_star, r);
}

} // namespace detail

/// Refined trapping for radial data without a variance assumption: from the
/// margin δ below the threshold, lift the gradient barrier to (1+δ̃)x₁,
/// choose ε inside its admissible window and certify a localization radius m
/// at which the two tail terms stay under half the negative margin.
inline LocalizedRoute localized_virial_route(const ComplexField& u0, const GroundState& gs,
                                             double delta, double c1 = 4.0, double c2 = 4.0,
                                             QuadRule rule = QuadRule::Simpson) {
    const double N = gs.params.N, p = gs.params.p;
    if (N < 2)
        throw TechnicalRestriction("localized route requires dimension N >= 2");
    const double p_hi = std::min(gs.params.energy_critical_p(), 5.0);
    if (!(p > gs.params.mass_critical_p()) || !(p < p_hi))
        throw TechnicalRestriction("localized route requires 1 + 4/N < p < min{1 + 4/(N-2), 5}");
    if (!(delta > 0.0))
        throw TechnicalRestriction("localized route needs a strict threshold margin delta > 0");

    auto rep = scaling_invariants(u0, gs, rule);
    const double l2 = std::sqrt(rep.mass);

    // x₂ > x₁ with f(x₂) = (1−δ)f(x₁): the refined barrier.
    const double target = (1.0 - delta) * rep.f_at_x1;
    double lo = rep.x1, hi = 2.0 * rep.x1;
    while (barrier_f(hi, l2, gs) > target) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-15 * rep.x1; ++i) {
        const double mid = 0.5 * (lo + hi);
        (barrier_f(mid, l2, gs) > target ? lo : hi) = mid;
    }
    const double x2 = 0.5 * (lo + hi);

    LocalizedRoute out;
    out.delta = delta;
    out.delta_tilde = x2 / rep.x1 - 1.0;

    const double coeff = 2.0 * N * (p - 1.0) - 8.0; // gradient coefficient in the identity
    const double eps_max = coeff * (1.0 - (1.0 - delta) / ((1.0 + out.delta_tilde) *
                                                           (1.0 + out.delta_tilde)));
    out.epsilon = 0.5 * eps_max;

    // Negative margin available at the worst trapped configuration after
    // ceding ε of the gradient coefficient.
    const double worst =
        4.0 * N * (p - 1.0) * (1.0 - delta) * rep.f_at_x1 -
        (coeff - out.epsilon) * x2 * x2;
    if (!(worst < 0.0))
        throw TechnicalRestriction("refined trapping produced no negative margin");
    const double margin = -worst;

    // Grow m until the Young constant plus the exterior-mass term sit under
    // half the margin for all trapped states.
    const double gamma = (N - 1.0) * (p - 1.0) / 2.0;
    const double mass_pow = std::pow(l2, (p + 3.0) / 2.0);
    double m = std::max(1.0, u0.grid().r_max / 8.0);
    for (int i = 0; i < 200; ++i) {
        const double c_tilde = c1 * std::pow(m, -gamma) * mass_pow;
        const double tails = detail::young_constant(c_tilde, out.epsilon, p) +
                             c2 * std::pow(m, -2.0) * rep.mass;
        if (tails <= 0.5 * margin) break;
        m *= 2.0;
    }
    out.m_threshold = m;
    out.verdict = Verdict::FiniteTimeBlowup;
    return out;
}

/// Upper bound for the second derivative of the localized variance:
/// 4N(p−1)E − (2N(p−1)−8)‖∇u‖² + c₁ m^{−γ} ‖u‖^{(p+3)/2} ‖∇u‖^{(p−1)/2}
///   + c₂ m^{−2} ∫_{|x|>m} |u|².
inline double localized_virial_rhs(const ComplexField& u, double m, double c1 = 4.0,
                                   double c2 = 4.0, QuadRule rule = QuadRule::Trapezoid) {
    const double N = u.params().N, p = u.params().p;
    const double E = energy(u, rule);
    const double g2 = grad_sq(u, rule);
    const double M = mass(u, rule);
    double outside = 0.0;
    for (int j = 0; j < u.size(); ++j) {
        const double r = u.grid().r(j);
        if (r > m) outside += std::norm(u[j]) * std::pow(r, N - 1);
    }
    outside *= sphere_area(static_cast<int>(N)) * u.grid().dr();
    const double gamma = (N - 1.0) * (p - 1.0) / 2.0;
    return 4.0 * N * (p - 1.0) * E - (2.0 * N * (p - 1.0) - 8.0) * g2 +
           c1 * std::pow(m, -gamma) * std::pow(std::sqrt(M), (p + 3.0) / 2.0) *
               std::pow(g2, (p - 1.0) / 4.0) +
           c2 * std::pow(m, -2.0) * outside;
}

/// C² localization weight: r² inside the unit ball, constant beyond r = 2,
/// second derivative everywhere ≤ 2 (the only structural requirement).
inline double virial_weight(double r) {
    if (r <= 1.0) return r * r;
    if (r >= 2.0) return 1.9;
    const double s = r - 1.0;
    // φ''(s) = 2 − 36s + 66s² − 32s³ joins φ'' = 2 at s=0 and 0 at s=1
    // with ∫φ'' = −2, bringing φ' from 2 down to 0.
    const double s2 = s * s, s3 = s2 * s, s4 = s2 * s2, s5 = s4 * s;
    return 1.0 + 2.0 * s + s2 - 6.0 * s3 + 5.5 * s4 - 1.6 * s5;
}

/// Full dichotomy. Flags describe qualitative properties of the datum the
/// discrete samples cannot express (decay class and symmetry).
inline ClassificationReport classify(const ComplexField& u0, const GroundState& gs,
                                     bool finite_variance = false, bool radial = true,
                                     double tie_tol = 1e-9, QuadRule rule = QuadRule::Simpson) {
    ClassificationReport rep = scaling_invariants(u0, gs, rule);
    rep.finite_variance = finite_variance;
    rep.radial = radial;

    if (rep.energy < 0.0) {
        rep.route = Route::NegativeEnergy;
        rep.verdict = (finite_variance || radial) ? Verdict::FiniteTimeBlowup
                                                  : Verdict::BlowupBarrierOnly;
        return rep;
    }

    const double thr = gs.lambda_threshold, sig = gs.sigma_pn;
    if (rep.lambda0 >= thr * (1.0 - tie_tol)) {
        // At or above the mass-energy threshold: no conclusion available.
        rep.route = Route::ThresholdFail;
        rep.verdict = Verdict::Indeterminate;
        return rep;
    }

    if (std::abs(rep.grad_mass_product - sig) <= tie_tol * sig) {
        rep.route = Route::MassEnergyBelow;
        rep.verdict = Verdict::Indeterminate; // exact boundary: strict inequalities required
        return rep;
    }

    if (rep.grad_mass_product < sig) {
        rep.route = Route::MassEnergyBelow;
        rep.verdict = Verdict::Global;
        return rep;
    }

    // Above the gradient threshold, trapped in the blow-up branch.
    if (finite_variance) {
        rep.route = Route::MassEnergyBelow;
        rep.verdict = Verdict::FiniteTimeBlowup;
        return rep;
    }
    if (radial) {
        const double delta = 1.0 - std::pow(rep.lambda0 / thr, 1.0 / rep.s_c);
        try {
            auto loc = localized_virial_route(u0, gs, delta, 4.0, 4.0, rule);
            rep.route = Route::LocalizedVirial;
            rep.verdict = loc.verdict;
            rep.delta = loc.delta;
            rep.delta_tilde = loc.delta_tilde;
            rep.epsilon = loc.epsilon;
            rep.m_threshold = loc.m_threshold;
            return rep;
        } catch (const TechnicalRestriction&) {
            // fall through: barrier persists but no finite-time conclusion
        }
    }
    rep.route = Route::MassEnergyBelow;
    rep.verdict = Verdict::BlowupBarrierOnly;
    return rep;
}

} // namespace nlslab
