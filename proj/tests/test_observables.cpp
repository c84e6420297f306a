// Diagnostics: currents, averages, radiated power, forces, and the identity
// residual suite. The closed-form check P = beta * int (drho/dt)^2 holds
// exactly for the multiplicative damping field, so those comparisons run at
// machine precision; finite-difference identities carry O(dt^2) tolerances.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "qdamp/observables.hpp"
#include "qdamp/propagator.hpp"

using namespace qdamp;

namespace {

struct BoxSetup {
    Grid1D grid;
    HamiltonianMatrix h;
    EigenBasis basis;
};

BoxSetup box(int n, int k) {
    Grid1D g = build_grid(0.0, 1.0, n);
    HamiltonianMatrix h = assemble_hamiltonian(g, RealField(g));
    EigenBasis basis = solve_eigenbasis(h, k);
    return {g, std::move(h), std::move(basis)};
}

ComplexField mix_state(const EigenBasis& basis, std::initializer_list<Complex> coeffs) {
    ComplexField psi(basis.grid);
    int m = 0;
    for (Complex c : coeffs) {
        for (int i = 0; i < psi.size(); ++i) psi[i] += c * basis.states[static_cast<size_t>(m)][i];
        ++m;
    }
    const double nrm = std::sqrt(norm_sq(psi));
    for (auto& v : psi.values) v /= nrm;
    return psi;
}

}  // namespace

TEST_CASE("current density vanishes for real and stationary states") {
    BoxSetup s = box(128, 3);
    ComplexField real_psi(s.grid);
    for (int i = 0; i < real_psi.size(); ++i)
        real_psi[i] = s.basis.states[0][i] + 0.2 * s.basis.states[2][i];
    RealField j = current_density(real_psi);
    for (int i = 0; i < j.size(); ++i) CHECK(j[i] == 0.0);

    ComplexField phased(s.grid);
    const Complex phase = std::polar(1.0, 0.9);
    for (int i = 0; i < phased.size(); ++i) phased[i] = phase * s.basis.states[1][i];
    RealField j2 = current_density(phased);
    for (int i = 0; i < j2.size(); ++i) CHECK(std::abs(j2[i]) < 1e-12);
}

TEST_CASE("integrated current equals the velocity expectation") {
    BoxSetup s = box(200, 4);
    ComplexField psi = mix_state(s.basis, {Complex{0.6, 0.1}, Complex{0.2, -0.5}, Complex{0.3, 0.4}});
    CHECK(integrate(current_density(psi)) == Catch::Approx(average_velocity(psi)).margin(1e-10));
}

TEST_CASE("energy expectation on eigenstates and mixtures") {
    BoxSetup s = box(128, 2);
    ComplexField phi0(s.grid);
    for (int i = 0; i < phi0.size(); ++i) phi0[i] = s.basis.states[0][i];
    CHECK(average_energy(phi0, s.h) == Catch::Approx(s.basis.energies[0]).margin(1e-10));

    ComplexField mix = mix_state(s.basis, {Complex{1.0, 0.0}, Complex{1.0, 0.0}});
    CHECK(average_energy(mix, s.h) ==
          Catch::Approx(0.5 * (s.basis.energies[0] + s.basis.energies[1])).margin(1e-10));
}

TEST_CASE("energy expectation is bounded below by the ground state") {
    BoxSetup s = box(96, 8);
    std::mt19937 rng(3u);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        ComplexField psi(s.grid);
        for (int i = 0; i < psi.size(); ++i) psi[i] = Complex{coef(rng), coef(rng)};
        const double nrm = std::sqrt(norm_sq(psi));
        for (auto& v : psi.values) v /= nrm;
        CHECK(average_energy(psi, s.h) >= s.basis.energies[0] - 1e-8);
    }
}

TEST_CASE("gradient energy equals <E> minus the potential average") {
    Grid1D g = build_grid(-8.0, 8.0, 301);
    FieldConfig cfg;
    cfg.static_kind = StaticKind::harmonic;
    RealField v = static_potential(cfg, g);
    HamiltonianMatrix h = assemble_hamiltonian(g, v);
    EigenBasis basis = solve_eigenbasis(h, 5);
    ComplexField psi(g);
    for (int i = 0; i < psi.size(); ++i)
        psi[i] = Complex{basis.states[0][i], 0.0} + Complex{0.0, 0.7} * basis.states[3][i];
    const double nrm = std::sqrt(norm_sq(psi));
    for (auto& x : psi.values) x /= nrm;

    double pot = 0.0;
    for (int i = 0; i < psi.size(); ++i) pot += v[i] * std::norm(psi[i]);
    pot *= g.dx;
    CHECK(kinetic_energy(psi) == Catch::Approx(average_energy(psi, h) - pot).margin(1e-10));
}

TEST_CASE("radiated power vanishes exactly where it must") {
    BoxSetup s = box(128, 3);
    DampingConfig damping{0.01};

    ComplexField phi(s.grid);
    const Complex phase = std::polar(1.0, -1.4);
    for (int i = 0; i < phi.size(); ++i) phi[i] = phase * s.basis.states[2][i];
    CHECK(std::abs(radiation_power(phi, s.h, damping)) < 1e-10);

    ComplexField any = mix_state(s.basis, {Complex{0.8, 0.0}, Complex{0.0, 0.6}});
    CHECK(radiation_power(any, s.h, DampingConfig{0.0}) == 0.0);
}

TEST_CASE("commutator power equals beta int (drho_dt)^2") {
    BoxSetup s = box(170, 6);
    DampingConfig damping{0.01};
    std::mt19937 rng(17u);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        ComplexField psi(s.grid);
        for (int m = 0; m < 6; ++m) {
            const Complex c{coef(rng), coef(rng)};
            for (int i = 0; i < psi.size(); ++i)
                psi[i] += c * s.basis.states[static_cast<size_t>(m)][i];
        }
        const double nrm = std::sqrt(norm_sq(psi));
        for (auto& v : psi.values) v /= nrm;

        const double p = radiation_power(psi, s.h, damping);
        const double q = radiation_power_identity(psi, s.h, damping);
        CHECK(std::abs(p - q) <= 1e-8 * std::max(1.0, std::abs(p)));
        CHECK(p >= -1e-10);
    }
}

TEST_CASE("recoil force vanishes on stationary states") {
    BoxSetup s = box(128, 2);
    DampingConfig damping{0.3};
    FieldConfig fields;
    ComplexField phi(s.grid);
    for (int i = 0; i < phi.size(); ++i) phi[i] = std::polar(1.0, 0.4) * s.basis.states[1][i];
    ForcePair f = forces(phi, s.h, fields, damping, UnitsConfig{}, 0.0);
    CHECK(std::abs(f.recoil) < 1e-10);
    CHECK(f.lorentz == 0.0);  // flat interior potential
}

TEST_CASE("commutator and density-gradient recoil forms agree to second order") {
    auto gap = [](int n) {
        BoxSetup s = box(n, 5);
        DampingConfig damping{0.05};
        ComplexField psi =
            mix_state(s.basis, {Complex{0.7, 0.0}, Complex{0.0, 0.5}, Complex{0.3, 0.2}});
        ForcePair f = forces(psi, s.h, FieldConfig{}, damping, UnitsConfig{}, 0.0);
        return std::abs(f.recoil - recoil_force_reduced(psi, s.h, damping));
    };
    const double g1 = gap(128);
    const double g2 = gap(257);  // grid spacing halves
    CHECK(g1 / g2 > 3.0);
    CHECK(g1 / g2 < 5.5);
}

TEST_CASE("a packet in a harmonic well obeys the force balance") {
    auto worst_gap = [](int n) {
        Grid1D g = build_grid(-10.0, 10.0, n);
        FieldConfig cfg;
        cfg.static_kind = StaticKind::harmonic;
        RealField v = static_potential(cfg, g);
        HamiltonianMatrix h = assemble_hamiltonian(g, v);
        EigenBasis basis = solve_eigenbasis(h, 40);

        ComplexField psi(g);
        for (int i = 0; i < psi.size(); ++i) {
            const double x = g.x(i);
            psi[i] = std::exp(Complex{-0.5 * (x - 1.0) * (x - 1.0), 0.3 * x});
        }
        const double nrm = std::sqrt(norm_sq(psi));
        for (auto& w : psi.values) w /= nrm;

        StepperConfig stepper;
        stepper.dt = 5e-4;
        EvolveResult ev = evolve(psi, 0.0, 0.05, cfg, DampingConfig{0.0}, stepper, basis, 10);
        REQUIRE(ev.records.size() >= 5);
        const auto& r = ev.records;
        double gap = 0.0;
        for (size_t k = 1; k + 1 < r.size(); ++k) {
            if (r[k + 1].t == r[k].t || r[k].t == r[k - 1].t) continue;  // trailing duplicate
            const double dv = (r[k + 1].velocity - r[k - 1].velocity) / (r[k + 1].t - r[k - 1].t);
            gap = std::max(gap, std::abs(dv - r[k].lorentz_force));
        }
        return std::pair<double, double>{gap, g.dx};
    };
    // the density-weighted force tracks m d<v>/dt within the O(dt^2, dx^2) window
    auto [g1, dx1] = worst_gap(401);
    CHECK(g1 < dx1 * dx1);
    auto [g2, dx2] = worst_gap(801);
    CHECK(g1 / g2 > 3.0);
    CHECK(g1 / g2 < 5.5);
}

TEST_CASE("identity residuals are tiny for stationary evolution") {
    BoxSetup s = box(128, 4);
    ComplexField phi(s.grid);
    for (int i = 0; i < phi.size(); ++i) phi[i] = s.basis.states[0][i];
    StepperConfig stepper;  // dt = 1e-3
    EvolveResult ev =
        evolve(phi, 0.0, 0.5, FieldConfig{}, DampingConfig{0.05}, stepper, s.basis, 10);
    CHECK(ev.residual_max.continuity < 1e-8);
    CHECK(ev.residual_max.ehrenfest < 1e-8);
    CHECK(ev.residual_max.energy_ledger < 1e-8);
    CHECK(ev.residual_max.condition24 < 1e-8);
    CHECK(ev.residual_max.power_formula_gap < 1e-12);
}

TEST_CASE("linear static evolution closes the ledger trivially") {
    BoxSetup s = box(128, 4);
    ComplexField psi = mix_state(s.basis, {Complex{1.0, 0.0}, Complex{1.0, 0.0}});
    StepperConfig stepper;
    EvolveResult ev = evolve(psi, 0.0, 1.0, FieldConfig{}, DampingConfig{0.0}, stepper, s.basis, 10);
    CHECK(ev.residual_max.energy_ledger < 1e-6);
    CHECK(ev.radiated_total == 0.0);
    CHECK(ev.work_total == 0.0);
}

TEST_CASE("condition-24 residual shrinks at second order in the sampling") {
    BoxSetup s = box(127, 4);
    ComplexField psi = mix_state(s.basis, {Complex{1.0, 0.0}, Complex{1.0, 0.0}});
    DampingConfig damping{0.01};

    auto residual_at = [&](double dt) {
        StepperConfig stepper;
        stepper.dt = dt;
        EvolveResult ev = evolve(psi, 0.0, 1.0, FieldConfig{}, damping, stepper, s.basis, 2);
        double pmax = 0.0;
        for (const auto& rec : ev.records) pmax = std::max(pmax, std::abs(rec.power));
        return std::pair<double, double>{ev.residual_max.condition24, pmax};
    };
    auto [r1, pmax] = residual_at(1e-4);
    CHECK(r1 < 1e-4 * std::max(1.0, pmax));
    auto [r2, pmax2] = residual_at(5e-5);
    CHECK(r1 / r2 > 3.0);
    CHECK(r1 / r2 < 5.5);
}

TEST_CASE("identity_residuals rejects short series") {
    BoxSetup s = box(64, 2);
    std::vector<ObservableRecord> series(2);
    std::vector<ComplexField> states(2, ComplexField(s.grid));
    CHECK_THROWS_AS(identity_residuals(series, states, FieldConfig{}, DampingConfig{}),
                    std::invalid_argument);
}

TEST_CASE("batch identity_residuals matches the streaming accumulator") {
    BoxSetup s = box(96, 3);
    ComplexField psi = mix_state(s.basis, {Complex{0.8, 0.0}, Complex{0.0, 0.6}});
    DampingConfig damping{0.02};
    StepperConfig stepper;
    stepper.dt = 5e-4;

    std::vector<ComplexField> states;
    EvolveResult ev = evolve(psi, 0.0, 0.2, FieldConfig{}, damping, stepper, s.basis, 5,
                             UnitsConfig{},
                             [&](int, const ComplexField& st, const ObservableRecord&) {
                                 states.push_back(st);
                             });
    IdentityResiduals batch = identity_residuals(ev.records, states, FieldConfig{}, damping);
    CHECK(batch.continuity == Catch::Approx(ev.residual_max.continuity).margin(1e-14));
    CHECK(batch.ehrenfest == Catch::Approx(ev.residual_max.ehrenfest).margin(1e-14));
    CHECK(batch.energy_ledger == Catch::Approx(ev.residual_max.energy_ledger).margin(1e-14));
    CHECK(batch.condition24 == Catch::Approx(ev.residual_max.condition24).margin(1e-14));
}
