#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "nlslab/errors.hpp"
#include "nlslab/functionals.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/quadrature.hpp"
#include "nlslab/transform.hpp"

namespace nlslab {

enum class StopReason { HorizonReached, BlowupDetected, ResolutionExhausted };

inline const char* to_string(StopReason s) {
    switch (s) {
        case StopReason::HorizonReached: return "HorizonReached";
        case StopReason::BlowupDetected: return "BlowupDetected";
        default: return "ResolutionExhausted";
    }
}

/// Knobs for one evolution run; all positive.
struct StepControls {
    double dt0 = 1e-4;            ///< base step at the initial amplitude
    double cfl_like = 1.0;        ///< slack factor in the amplitude-adaptive step
    double grad_growth_cap = 10.0;///< stop when ‖∇u‖ reaches this multiple of start
    double t_max = 1.0;           ///< time horizon
    double resolution_guard = 4.0;///< min focal width in units of dr before stopping
    int sample_every = 10;        ///< steps between recorded samples
    int snapshot_every = 0;       ///< samples between retained fields (0 = none)
    QuadRule rule = QuadRule::Trapezoid;
    double overflow_guard = 1e8;  ///< hard amplitude ceiling (throws)
};

/// Time series of every monitored functional along one run.
struct EvolutionTrace {
    NlsParams params;
    std::vector<double> times;
    std::vector<FunctionalSet> functionals;
    std::vector<double> grad_norm;  ///< ‖∇u‖₂
    std::vector<double> r0;         ///< √(V[u]/M[u]) — concentration radius
    std::vector<double> lambda;     ///< (r0²/‖∇u‖²)^{1/3} — focusing factor
    std::vector<double> dt_history; ///< step in force at each sample
    StopReason stop_reason = StopReason::HorizonReached;
    std::vector<ComplexField> snapshots;
    std::vector<double> snapshot_times;
    std::optional<ComplexField> final_field;
};

namespace detail {

inline void require_finite_amplitude(const ComplexField& u, double guard) {
    const double m = u.linf();
    if (!std::isfinite(m) || m > guard)
        throw Overflow("amplitude " + std::to_string(m) + " exceeded the guard " +
                       std::to_string(guard));
}

/// Half-step of the exact nonlinear phase rotation u → u e^{i|u|^{p−1}τ}.
inline void phase_rotate(std::vector<complexd>& v, double p, double tau) {
    for (auto& z : v) {
        const double a = std::abs(z);
        if (a > 0.0) z *= std::polar(1.0, std::pow(a, p - 1.0) * tau);
    }
}

/// N = 3 spectral linear propagator: diagonal phases on the sine modes of r·u.
inline ComplexField linear_spectral(const ComplexField& u, double dt) {
    auto s = radial_transform(u);
    const int n = s.n();
    for (int k = 0; k < n; ++k) {
        const double mu = mode_eigenvalue(k, s.r_max) * dt;
        const double c = std::cos(mu), sn = std::sin(mu);
        const double re = s.re[k], im = s.im[k];
        // multiply by e^{−iμ}: (re + i·im)(c − i·sn)
        s.re[k] = re * c + im * sn;
        s.im[k] = im * c - re * sn;
    }
    return radial_inverse(s, u.grid(), u.params());
}

/// General-N linear propagator: Crank–Nicolson with the even-regularity
/// ghost at r = 0 and Dirichlet at r_max, via a complex Thomas solve.
inline ComplexField linear_cn(const ComplexField& u, double dt) {
    const int n = u.size();
    const double dr = u.grid().dr();
    const int N = u.params().N;
    const complexd itheta{0.0, 0.5 * dt};

    // Tridiagonal coefficients of L: sub[j]·u_{j-1} + diag[j]·u_j + sup[j]·u_{j+1}.
    std::vector<double> sub(n), diag(n), sup(n);
    for (int j = 0; j < n; ++j) {
        const double r = u.grid().r(j);
        sub[j] = 1.0 / (dr * dr) - (N - 1) / (2.0 * r * dr);
        diag[j] = -2.0 / (dr * dr);
        sup[j] = 1.0 / (dr * dr) + (N - 1) / (2.0 * r * dr);
    }
    // Fold the ghost u(0) = (4u_1 − u_2)/3 into the first row: the radial
    // Laplacian there becomes (2N/3)(u_2 − u_1)/dr² (exact on even quadratics).
    sub[0] = 0.0;
    diag[0] = -2.0 * N / (3.0 * dr * dr);
    sup[0] = 2.0 * N / (3.0 * dr * dr);

    // rhs = (I + iθL)u ; solve (I − iθL)u⁺ = rhs.
    std::vector<complexd> rhs(n), a(n), b(n), c(n);
    const auto& v = u.values();
    for (int j = 0; j < n; ++j) {
        complexd acc = v[j] + itheta * (diag[j] * v[j]);
        if (j > 0) acc += itheta * (sub[j] * v[j - 1]);
        if (j + 1 < n) acc += itheta * (sup[j] * v[j + 1]);
        rhs[j] = acc;
        a[j] = -itheta * sub[j];
        b[j] = 1.0 - itheta * diag[j];
        c[j] = -itheta * sup[j];
    }
    // Thomas elimination.
    for (int j = 1; j < n; ++j) {
        const complexd w = a[j] / b[j - 1];
        b[j] -= w * c[j - 1];
        rhs[j] -= w * rhs[j - 1];
    }
    std::vector<complexd> out(n);
    out[n - 1] = rhs[n - 1] / b[n - 1];
    for (int j = n - 2; j >= 0; --j) out[j] = (rhs[j] - c[j] * out[j + 1]) / b[j];
    return u.with_values(std::move(out));
}

} // namespace detail

/// One Strang-split step: half nonlinear phase, full linear, half nonlinear.
/// The nonlinear substep is exact (|u| is invariant), so the spectral path
/// conserves mass to roundoff. Negative dt runs the exact inverse step.
inline ComplexField step(const ComplexField& u, double dt, double overflow_guard = 1e8) {
    detail::require_finite_amplitude(u, overflow_guard);
    auto vals = u.values();
    detail::phase_rotate(vals, u.params().p, 0.5 * dt);
    ComplexField half = u.with_values(std::move(vals));
    ComplexField lin = (u.params().N == 3) ? detail::linear_spectral(half, dt)
                                           : detail::linear_cn(half, dt);
    auto vals2 = lin.values();
    detail::phase_rotate(vals2, u.params().p, 0.5 * dt);
    ComplexField out = lin.with_values(std::move(vals2));
    detail::require_finite_amplitude(out, overflow_guard);
    return out;
}

/// Evolve with amplitude-adaptive steps dt = dt0 / max(1, ‖u‖∞²/(cfl·‖u₀‖∞²)),
/// recording all functionals every sample interval and stopping on horizon,
/// gradient growth, or loss of resolution.
template <typename SampleHook = std::nullptr_t>
inline EvolutionTrace evolve(const ComplexField& u0, const StepControls& controls,
                             SampleHook&& hook = nullptr) {
    EvolutionTrace trace;
    trace.params = u0.params();
    ComplexField u = u0;
    const double linf0 = std::max(u0.linf(), 1e-300);
    const double grad0 = std::sqrt(grad_sq(u0, controls.rule));
    const double p = u0.params().p;
    const double dr = u0.grid().dr();

    double t = 0.0;
    int sample_count = 0;
    auto record = [&](double dt_now) {
        FunctionalSet f = compute_functionals(u, controls.rule, /*spectral_gradient=*/true);
        trace.times.push_back(t);
        trace.grad_norm.push_back(std::sqrt(f.grad_sq));
        trace.r0.push_back(f.mass > 0.0 ? std::sqrt(f.virial / f.mass) : 0.0);
        const double r0 = trace.r0.back();
        trace.lambda.push_back(f.grad_sq > 0.0 ? std::cbrt(r0 * r0 / f.grad_sq) : 0.0);
        trace.dt_history.push_back(dt_now);
        trace.functionals.push_back(std::move(f));
        if (controls.snapshot_every > 0 && sample_count % controls.snapshot_every == 0) {
            trace.snapshots.push_back(u);
            trace.snapshot_times.push_back(t);
        }
        if constexpr (!std::is_same_v<std::decay_t<SampleHook>, std::nullptr_t>)
            hook(t, u, trace);
        ++sample_count;
    };

    const double horizon_eps = 1e-12 * std::max(1.0, controls.t_max);
    double dt = controls.dt0;
    record(dt);
    while (true) {
        if (t >= controls.t_max - horizon_eps) {
            trace.stop_reason = StopReason::HorizonReached;
            break;
        }
        const double linf = u.linf();
        dt = controls.dt0 /
             std::max(1.0, linf * linf / (controls.cfl_like * linf0 * linf0));
        if (t + controls.sample_every * dt > controls.t_max)
            dt = std::max((controls.t_max - t) / controls.sample_every, 1e-300);
        for (int k = 0; k < controls.sample_every; ++k) {
            u = step(u, dt, controls.overflow_guard);
            t += dt;
        }
        record(dt);
        if (trace.grad_norm.back() >= controls.grad_growth_cap * grad0 && grad0 > 0.0) {
            trace.stop_reason = StopReason::BlowupDetected;
            break;
        }
        const double width = std::pow(std::max(u.linf(), 1e-300), -0.5 * (p - 1.0));
        if (width < controls.resolution_guard * dr) {
            trace.stop_reason = StopReason::ResolutionExhausted;
            break;
        }
    }
    trace.final_field = u;
    return trace;
}

/// Pointwise audit of the variance identity along a uniformly sampled trace:
/// d²V/dt² must match 4N(p−1)E − (2N(p−1)−8)‖∇u‖², and dV/dt must match the
/// recorded momentum integral.
struct VirialConsistency {
    double max_abs_fd2 = 0.0;       ///< largest |d²V/dt²| seen (centered FD)
    double max_abs_rhs = 0.0;       ///< largest |identity RHS| seen
    double max_abs_residual = 0.0;  ///< largest |FD − RHS|
    double max_relative_residual = 0.0; ///< residual / max|RHS| (scale-guarded)
    double first_deriv_max_abs_err = 0.0; ///< centered dV/dt vs virial_rate
};

inline VirialConsistency virial_consistency(const EvolutionTrace& trace) {
    const int N = trace.params.N;
    const double p = trace.params.p;
    const std::size_t n = trace.times.size();
    if (n < 5) throw InsufficientSamples("need at least 5 samples, have " + std::to_string(n));
    const double h = trace.times[1] - trace.times[0];
    for (std::size_t i = 1; i + 1 < n; ++i)
        if (std::abs((trace.times[i + 1] - trace.times[i]) - h) > 1e-3 * h)
            throw InsufficientSamples("samples are not uniformly spaced");

    VirialConsistency out;
    const double E = trace.functionals[0].energy;
    double scale = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double fd2 = (trace.functionals[i + 1].virial - 2.0 * trace.functionals[i].virial +
                            trace.functionals[i - 1].virial) / (h * h);
        const double rhs = 4.0 * N * (p - 1.0) * E -
                           (2.0 * N * (p - 1.0) - 8.0) * trace.functionals[i].grad_sq;
        out.max_abs_fd2 = std::max(out.max_abs_fd2, std::abs(fd2));
        out.max_abs_rhs = std::max(out.max_abs_rhs, std::abs(rhs));
        out.max_abs_residual = std::max(out.max_abs_residual, std::abs(fd2 - rhs));
        scale = std::max(scale, std::abs(rhs));
        const double fd1 = (trace.functionals[i + 1].virial - trace.functionals[i - 1].virial) /
                           (2.0 * h);
        out.first_deriv_max_abs_err =
            std::max(out.first_deriv_max_abs_err,
                     std::abs(fd1 - trace.functionals[i].virial_rate));
    }
    // Guard the scale with the gradient term so stationary traces (RHS ≈ 0)
    // report a meaningful relative number instead of 0/0.
    scale = std::max(scale, 1e-12 * (1.0 + trace.functionals[0].grad_sq));
    out.max_relative_residual = out.max_abs_residual / scale;
    return out;
}

/// Power-law fit of the gradient growth: optimize T_est and fit
/// log‖∇u‖ = a + b·log(T_est − t) over the growth window (‖∇u‖ ≥ 2×start).
struct RateFit {
    double T_est = 0.0;
    double exponent = 0.0;   ///< fitted b (blow-up rates are negative)
    double stderr_exponent = 0.0;
    bool lower_bound_ok = false; ///< exponent ≤ −1/4 within fit slack
    int window_size = 0;
};

inline RateFit blowup_rate_fit(const EvolutionTrace& trace) {
    std::vector<double> ts, gs;
    const double g0 = trace.grad_norm.empty() ? 0.0 : trace.grad_norm.front();
    for (std::size_t i = 0; i < trace.times.size(); ++i)
        if (trace.grad_norm[i] >= 2.0 * g0 && trace.grad_norm[i] > 0.0) {
            ts.push_back(trace.times[i]);
            gs.push_back(trace.grad_norm[i]);
        }
    if (ts.size() < 10)
        throw FitIllConditioned("growth window holds " + std::to_string(ts.size()) +
                                " samples; need 10");

    const double t_end = ts.back();
    const double span = t_end - ts.front();
    if (!(span > 0.0)) throw FitIllConditioned("degenerate time window");

    struct Fit { double a, b, ssr, sxx; };
    auto fit_at = [&](double T) -> Fit {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const auto m = static_cast<double>(ts.size());
        std::vector<double> xs(ts.size()), ys(ts.size());
        for (std::size_t i = 0; i < ts.size(); ++i) {
            xs[i] = std::log(T - ts[i]);
            ys[i] = std::log(gs[i]);
            sx += xs[i]; sy += ys[i]; sxx += xs[i] * xs[i]; sxy += xs[i] * ys[i];
        }
        const double denom = m * sxx - sx * sx;
        if (std::abs(denom) < 1e-30) throw FitIllConditioned("collinear fit abscissae");
        const double b = (m * sxy - sx * sy) / denom;
        const double a = (sy - b * sx) / m;
        double ssr = 0.0;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            const double r = ys[i] - a - b * xs[i];
            ssr += r * r;
        }
        return {a, b, ssr, sxx - sx * sx / m};
    };

    // Golden-section search of the SSR over T in (t_end, t_end + 2·span].
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = t_end + 1e-9 * span, hi = t_end + 2.0 * span;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = fit_at(x1).ssr, f2 = fit_at(x2).ssr;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * span; ++i) {
        if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = fit_at(x1).ssr;
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = fit_at(x2).ssr;
        }
    }
    const double T = 0.5 * (lo + hi);
    const Fit f = fit_at(T);

    RateFit out;
    out.T_est = T;
    out.exponent = f.b;
    out.window_size = static_cast<int>(ts.size());
    const auto m = static_cast<double>(ts.size());
    out.stderr_exponent = (m > 2 && f.sxx > 0.0) ? std::sqrt(f.ssr / (m - 2.0) / f.sxx) : 0.0;
    const double slack = std::max(0.02, 2.0 * out.stderr_exponent);
    out.lower_bound_ok = (f.b <= -0.25 + slack);
    return out;
}

} // namespace nlslab
