// Grid, quadrature, and finite-difference checks against analytic oracles:
// derivatives of sin(k pi x) on a Dirichlet interval are exact test functions
// since they honor the hard-wall boundary values.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "qdamp/grid.hpp"

using namespace qdamp;
using std::numbers::pi;

namespace {

ComplexField sine_mode(const Grid1D& g, int k) {
    ComplexField f(g);
    for (int i = 0; i < g.n_interior; ++i) f[i] = std::sin(k * pi * g.x(i));
    return f;
}

}  // namespace

TEST_CASE("build_grid places interior points and spacing") {
    Grid1D g = build_grid(0.0, 1.0, 15);
    CHECK(g.dx == Catch::Approx(1.0 / 16.0).margin(0));
    CHECK(g.x(0) == Catch::Approx(1.0 / 16.0));
    CHECK(g.x(14) == Catch::Approx(15.0 / 16.0));

    Grid1D wide = build_grid(-5.0, 5.0, 511);
    CHECK(wide.dx == Catch::Approx(10.0 / 512.0).margin(0));

    // midpoint symmetry: interior point 255 of 511 sits at the center
    Grid1D unit = build_grid(0.0, 1.0, 511);
    CHECK(unit.x(255) == Catch::Approx(0.5).margin(1e-14));
}

TEST_CASE("build_grid rejects invalid input") {
    CHECK_THROWS_AS(build_grid(0.0, 1.0, 3), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(0.0, 1.0, 7), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(1.0, 0.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(0.0, 0.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(build_grid(0.0, std::numeric_limits<double>::infinity(), 64),
                    std::invalid_argument);
    CHECK_THROWS_AS(build_grid(std::nan(""), 1.0, 64), std::invalid_argument);
}

TEST_CASE("integrate uses the rectangle rule with excluded boundary cells") {
    Grid1D g = build_grid(0.0, 1.0, 511);
    RealField one(g);
    for (auto& v : one.values) v = 1.0;
    CHECK(integrate(one) == Catch::Approx(511.0 / 512.0).margin(1e-14));

    RealField zero(g);
    CHECK(integrate(zero) == 0.0);
}

TEST_CASE("integrate of a normalized density returns one") {
    Grid1D g = build_grid(-2.0, 3.0, 200);
    ComplexField psi(g);
    for (int i = 0; i < g.n_interior; ++i) {
        const double x = g.x(i);
        psi[i] = Complex{std::exp(-x * x), 0.3 * std::sin(2.0 * x)};
    }
    const double nrm = std::sqrt(norm_sq(psi));
    for (auto& v : psi.values) v /= nrm;
    CHECK(integrate(density(psi)) == Catch::Approx(1.0).margin(1e-10));
}

TEST_CASE("integrate is linear to machine precision") {
    Grid1D g = build_grid(0.0, 2.0, 97);
    RealField f(g), h(g);
    for (int i = 0; i < g.n_interior; ++i) {
        f[i] = std::cos(3.0 * g.x(i));
        h[i] = g.x(i) * g.x(i);
    }
    const double a = 1.7, b = -0.3;
    RealField combo(g);
    for (int i = 0; i < g.n_interior; ++i) combo[i] = a * f[i] + b * h[i];
    CHECK(integrate(combo) ==
          Catch::Approx(a * integrate(f) + b * integrate(h)).margin(1e-13));
}

TEST_CASE("differentiate matches analytic derivatives of sine modes") {
    Grid1D g = build_grid(0.0, 1.0, 255);
    ComplexField f = sine_mode(g, 1);

    ComplexField d2 = differentiate(f, 2);
    double err2 = 0.0;
    for (int i = 0; i < g.n_interior; ++i)
        err2 = std::max(err2, std::abs(d2[i] - Complex{-pi * pi * std::sin(pi * g.x(i)), 0.0}));
    // central three-point stencil: error <= (pi dx)^2/12 * pi^2
    CHECK(err2 < pi * pi * pi * pi * g.dx * g.dx / 10.0);

    ComplexField d1 = differentiate(f, 1);
    double err1 = 0.0;
    for (int i = 0; i < g.n_interior; ++i)
        err1 = std::max(err1, std::abs(d1[i] - Complex{pi * std::cos(pi * g.x(i)), 0.0}));
    CHECK(err1 < pi * pi * pi * g.dx * g.dx / 5.0);

    ComplexField zero(g);
    ComplexField dz = differentiate(zero, 2);
    for (int i = 0; i < g.n_interior; ++i) CHECK(dz[i] == Complex{0.0, 0.0});

    CHECK_THROWS_AS(differentiate(f, 3), std::invalid_argument);
    CHECK_THROWS_AS(differentiate(f, 0), std::invalid_argument);
}

TEST_CASE("second derivative converges at second order") {
    auto max_err = [](int n) {
        Grid1D g = build_grid(0.0, 1.0, n);
        ComplexField f = sine_mode(g, 3);
        ComplexField d2 = differentiate(f, 2);
        double e = 0.0;
        for (int i = 0; i < g.n_interior; ++i)
            e = std::max(e, std::abs(d2[i] + 9.0 * pi * pi * f[i]));
        return e;
    };
    const double e1 = max_err(127);
    const double e2 = max_err(255);
    CHECK(e1 / e2 == Catch::Approx(4.0).epsilon(0.15));
}

TEST_CASE("summation by parts holds for hard-wall fields") {
    Grid1D g = build_grid(0.0, 1.0, 160);
    ComplexField f = sine_mode(g, 2);
    ComplexField h = sine_mode(g, 5);
    for (int i = 0; i < g.n_interior; ++i) h[i] *= Complex{1.0, 0.5};

    ComplexField df = differentiate(f, 1);
    ComplexField dh = differentiate(h, 1);
    double left = 0.0, right = 0.0;
    for (int i = 0; i < g.n_interior; ++i) {
        left += std::real(std::conj(f[i]) * dh[i]);
        right += std::real(std::conj(df[i]) * h[i]);
    }
    // the discrete first-derivative operator is exactly antisymmetric
    CHECK(std::abs(g.dx * left + g.dx * right) < 1e-12);
}
