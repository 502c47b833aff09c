#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "nlslab/functionals.hpp"
#include "nlslab/grid.hpp"
#include "nlslab/transform.hpp"

using namespace nlslab;
using Catch::Approx;

namespace {
const double pi = std::numbers::pi;

ComplexField gaussian_field(double r_max = 10.0, int n = 1999, double amp = 1.0,
                            double chirp = 0.0) {
    RadialGrid g{r_max, n};
    NlsParams pr{3, 3.0};
    return ComplexField::make(g, pr, [=](double r) {
        return amp * std::exp(complexd{-r * r, chirp * r * r});
    });
}
} // namespace

TEST_CASE("zero field has vanishing functionals") {
    auto u = ComplexField::zero(RadialGrid{8.0, 255}, NlsParams{3, 3.0});
    CHECK(mass(u) == 0.0);
    CHECK(energy(u) == 0.0);
    CHECK(virial_moment(u) == 0.0);
    CHECK(virial_rate(u) == 0.0);
    CHECK(u.linf() == 0.0);
}

TEST_CASE("Gaussian functionals match closed forms") {
    auto u = gaussian_field();
    // e^{-r^2} in 3-D: closed-form integrals of the Gaussian family.
    const double mass_exact = std::pow(pi / 2.0, 1.5);            // 1.96870124321530
    const double grad_exact = 3.0 * std::pow(pi / 2.0, 1.5);      // 5.90610372964591
    const double l4_exact = std::pow(pi / 4.0, 1.5);              // 0.696040999603963
    const double energy_exact = 0.5 * grad_exact - 0.25 * l4_exact; // 2.77904161492196
    const double virial_exact = 3.0 * pi / 8.0 * std::sqrt(pi / 2.0); // 1.47652593241148

    CHECK(mass(u) == Approx(mass_exact).epsilon(1e-10));
    CHECK(lp_pow(u, 4.0) == Approx(l4_exact).epsilon(1e-10));
    // Gradient via finite differences carries O(dr^2) discretization error.
    CHECK(grad_sq(u) == Approx(grad_exact).epsilon(1e-4));
    CHECK(energy(u) == Approx(energy_exact).epsilon(1e-4));
    double tail = -1.0;
    CHECK(virial_moment(u, QuadRule::Trapezoid, &tail) == Approx(virial_exact).epsilon(1e-10));
    CHECK(tail < virial_tail_warn_threshold);
}

TEST_CASE("virial moment of a narrow bump localizes at its center") {
    RadialGrid g{10.0, 3999};
    NlsParams pr{3, 3.0};
    const double r0 = 5.0, w = 0.05;
    auto u = ComplexField::make(g, pr, [=](double r) {
        double d = (r - r0) / w;
        return complexd{std::exp(-d * d), 0.0};
    });
    const double ratio = virial_moment(u) / mass(u);
    CHECK(ratio == Approx(r0 * r0).margin(0.01));
}

TEST_CASE("virial moment flags unresolved tails") {
    RadialGrid g{10.0, 999};
    NlsParams pr{3, 3.0};
    auto slow = ComplexField::make(g, pr, [](double r) { return complexd{std::exp(-r / 8.0), 0.0}; });
    double tail = 0.0;
    virial_moment(slow, QuadRule::Trapezoid, &tail);
    CHECK(tail > virial_tail_warn_threshold);
}

TEST_CASE("virial rate vanishes for constant-phase fields") {
    auto u = gaussian_field();
    CHECK(std::abs(virial_rate(u)) < 1e-12);
    // A global constant phase does not move the moment either.
    auto v = u.with_values([&] {
        auto w = u.values();
        for (auto& z : w) z *= std::polar(1.0, 0.7);
        return w;
    }());
    CHECK(std::abs(virial_rate(v)) < 1e-12);
}

TEST_CASE("virial rate of a chirped Gaussian matches the closed form") {
    const double lam = 0.7;
    auto u = gaussian_field(10.0, 1999, 1.0, lam);
    // 16π Im ∫ r³ ū ∂_r u dr with u = e^{-r²+iλr²} gives 32πλ ∫ r⁴ e^{-2r²} dr
    // = 3πλ√(π/2); at λ = 0.7 this is 8.26854522150427.
    const double exact = 3.0 * pi * lam * std::sqrt(pi / 2.0);
    CHECK(virial_rate(u) == Approx(exact).epsilon(1e-4));
}

TEST_CASE("functional set recombines consistently") {
    auto u = gaussian_field(10.0, 999, 1.3, 0.4);
    auto f = compute_functionals(u);
    CHECK(f.mass >= 0.0);
    CHECK(f.grad_sq >= 0.0);
    CHECK(f.virial >= 0.0);
    const double pp1 = std::pow(f.lp_norms.at(4.0), 4.0);
    CHECK(f.energy == Approx(0.5 * f.grad_sq - pp1 / 4.0).epsilon(1e-13));
    CHECK(f.linf == Approx(1.3).epsilon(1e-3));
}

TEST_CASE("quadrature converges at least at second order") {
    // Mass of e^{-r}: the r²e^{-2r} integrand's even extension has a
    // nonvanishing third derivative at the origin, so the Euler–Maclaurin
    // error is a measurable clean power of dr (observed ≈ 4 ≥ 1.9).
    auto mass_at = [](int n) {
        RadialGrid g{15.0, n};
        NlsParams pr{3, 3.0};
        return mass(ComplexField::make(g, pr, [](double r) {
            return complexd{std::exp(-r), 0.0};
        }));
    };
    const double d1 = std::abs(mass_at(127) - mass_at(255));
    const double d2 = std::abs(mass_at(255) - mass_at(511));
    CHECK(std::log2(d1 / d2) >= 1.9);

    // Energy of a Gaussian: the finite-difference gradient supplies a
    // genuine O(dr²) term, so the observed order sits near 2.
    auto energy_at = [](int n) { return energy(gaussian_field(3.0, n)); };
    const double e1 = std::abs(energy_at(127) - energy_at(255));
    const double e2 = std::abs(energy_at(255) - energy_at(511));
    CHECK(std::log2(e1 / e2) >= 1.9);
}

TEST_CASE("Simpson upgrade beats trapezoid away from superconvergence") {
    RadialGrid g{8.0, 255};
    NlsParams pr{3, 3.0};
    auto u = ComplexField::make(g, pr, [](double r) { return complexd{std::exp(-r / 2.0), 0.0}; });
    auto u_ref = ComplexField::make(RadialGrid{8.0, 8191}, pr,
                                    [](double r) { return complexd{std::exp(-r / 2.0), 0.0}; });
    const double ref = mass(u_ref, QuadRule::Simpson);
    const double err_trap = std::abs(mass(u, QuadRule::Trapezoid) - ref);
    const double err_simp = std::abs(mass(u, QuadRule::Simpson) - ref);
    CHECK(err_simp < err_trap);
}

TEST_CASE("sine transform round-trips and is unitary up to the DST factor") {
    RadialGrid g{10.0, 511};
    NlsParams pr{3, 3.0};
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<complexd> vals(g.n);
    for (auto& z : vals) z = complexd{dist(rng), dist(rng)};
    ComplexField u(g, pr, vals);

    SECTION("round trip is the identity") {
        auto back = radial_inverse(radial_transform(u), g, pr);
        double err = 0.0;
        for (int j = 0; j < g.n; ++j) err = std::max(err, std::abs(back[j] - u[j]));
        CHECK(err < 1e-12);
    }

    SECTION("a pure sine mode produces a single coefficient") {
        const int k = 17; // 0-based mode index
        auto mode = ComplexField::make(g, pr, [&](double r) {
            return complexd{std::sin((k + 1) * pi * r / g.r_max) / r, 0.0};
        });
        auto s = radial_transform(mode);
        CHECK(s.re[k] == Approx(double(g.n + 1)).epsilon(1e-12));
        double off = 0.0;
        for (int j = 0; j < g.n; ++j)
            if (j != k) off = std::max(off, std::abs(s.re[j]) + std::abs(s.im[j]));
        CHECK(off < 1e-9 * (g.n + 1));
    }

    SECTION("Plancherel identity") {
        auto s = radial_transform(u);
        double lhs = 0.0;
        for (int k = 0; k < g.n; ++k) lhs += s.re[k] * s.re[k] + s.im[k] * s.im[k];
        lhs *= g.dr() / (2.0 * (g.n + 1));
        double rhs = 0.0;
        for (int j = 0; j < g.n; ++j) rhs += std::norm(g.r(j) * u[j]);
        rhs *= g.dr();
        CHECK(lhs == Approx(rhs).epsilon(1e-10));
    }

    SECTION("spectral path rejects unsupported dimensions") {
        ComplexField u2(g, NlsParams{2, 4.0}, vals);
        CHECK_THROWS_AS(radial_transform(u2), UnsupportedDimension);
    }
}

TEST_CASE("radial Plancherel Sobolev quadrature") {
    auto u = gaussian_field(12.0, 1499);
    SECTION("s = 0 reproduces the mass") {
        CHECK(hs_norm_sq(u, 0.0, 30.0, 3000) == Approx(mass(u)).epsilon(1e-8));
    }
    SECTION("s = 1/2 of the unit Gaussian is exactly pi") {
        // 8∫ρ|g|²dρ with g(ρ) = (√π ρ/4)e^{-ρ²/4} integrates to π.
        CHECK(hs_norm_sq(u, 0.5, 30.0, 3000) == Approx(pi).epsilon(1e-8));
    }
}
