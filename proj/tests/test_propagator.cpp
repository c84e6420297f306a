// Crank-Nicolson stepper checks. The update is a Cayley transform of a real
// symmetric operator, so the norm is conserved to linear-solve roundoff no
// matter how far the damping fixed point has converged; phase accuracy and
// trajectory error are second order in dt.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

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

ComplexField eigenstate(const BoxSetup& s, int n) {
    ComplexField psi(s.grid);
    for (int i = 0; i < psi.size(); ++i) psi[i] = s.basis.states[static_cast<size_t>(n)][i];
    return psi;
}

ComplexField two_state(const BoxSetup& s) {
    ComplexField psi(s.grid);
    const double r = 1.0 / std::sqrt(2.0);
    for (int i = 0; i < psi.size(); ++i)
        psi[i] = r * (s.basis.states[0][i] + s.basis.states[1][i]);
    const double nrm = std::sqrt(norm_sq(psi));
    for (auto& v : psi.values) v /= nrm;
    return psi;
}

}  // namespace

TEST_CASE("one step rotates an eigenstate by exp(-i E dt)") {
    BoxSetup s = box(127, 1);
    ComplexField psi = eigenstate(s, 0);
    StepperConfig stepper;  // dt = 1e-3
    auto [next, rep] = step(psi, 0.0, FieldConfig{}, DampingConfig{0.0}, stepper);
    CHECK(rep.converged);

    const double e0 = s.basis.energies[0];
    ComplexField ref = psi;
    const Complex phase = std::polar(1.0, -e0 * stepper.dt);
    for (auto& v : ref.values) v *= phase;
    // Cayley phase error per step is (E dt)^3 / 12
    const double bound = std::pow(e0 * stepper.dt, 3) / 12.0 + 1e-12;
    CHECK(distance(next, ref) < 2.0 * bound);
}

TEST_CASE("damping leaves stationary steps unchanged") {
    BoxSetup s = box(127, 2);
    ComplexField psi = eigenstate(s, 1);
    StepperConfig stepper;
    auto [a, ra] = step(psi, 0.0, FieldConfig{}, DampingConfig{0.0}, stepper);
    auto [b, rb] = step(psi, 0.0, FieldConfig{}, DampingConfig{0.08}, stepper);
    CHECK(rb.converged);
    CHECK(distance(a, b) < 1e-10);
}

TEST_CASE("the linear step is unitary to roundoff") {
    BoxSetup s = box(255, 2);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    auto [next, rep] = step(psi, 0.0, FieldConfig{}, DampingConfig{0.0}, stepper);
    CHECK(rep.iterations_used == 1);
    CHECK(rep.norm_drift < 1e-13);
}

TEST_CASE("norm is conserved over long runs without renormalization") {
    BoxSetup s = box(127, 2);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    EvolveResult ev = evolve(psi, 0.0, 2.0, FieldConfig{}, DampingConfig{0.02}, stepper, s.basis, 50);
    for (const auto& r : ev.records) CHECK(std::abs(r.norm - 1.0) < 1e-10);
}

TEST_CASE("linear evolution keeps populations and energy constant") {
    BoxSetup s = box(127, 4);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    EvolveResult ev = evolve(psi, 0.0, 2.0, FieldConfig{}, DampingConfig{0.0}, stepper, s.basis, 20);
    const auto& first = ev.records.front();
    for (const auto& r : ev.records) {
        CHECK(std::abs(r.energy - first.energy) < 1e-8);
        for (size_t m = 0; m < r.populations.size(); ++m)
            CHECK(std::abs(r.populations[m] - first.populations[m]) < 1e-8);
    }
}

TEST_CASE("damped evolution never gains energy in a static well") {
    BoxSetup s = box(127, 4);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    EvolveResult ev = evolve(psi, 0.0, 3.0, FieldConfig{}, DampingConfig{0.02}, stepper, s.basis, 10);
    for (size_t k = 1; k < ev.records.size(); ++k)
        CHECK(ev.records[k].energy <= ev.records[k - 1].energy + 1e-9);
    CHECK(ev.records.back().energy < ev.records.front().energy - 1e-3);
}

TEST_CASE("terminal error is second order in dt") {
    BoxSetup s = box(127, 2);
    ComplexField psi = two_state(s);
    const double T = 1.0;

    auto terminal = [&](double dt, double beta) {
        StepperConfig stepper;
        stepper.dt = dt;
        EvolveResult ev =
            evolve(psi, 0.0, T, FieldConfig{}, DampingConfig{beta}, stepper, s.basis, 1 << 30);
        return ev.final_state;
    };
    for (double beta : {0.0, 0.02}) {
        ComplexField ref = terminal(2.5e-4, beta);
        const double e1 = distance(terminal(2e-3, beta), ref);
        const double e2 = distance(terminal(1e-3, beta), ref);
        CHECK(e1 / e2 > 3.2);
        CHECK(e1 / e2 < 5.0);
    }
}

TEST_CASE("fixed point converges quickly for weak damping") {
    BoxSetup s = box(127, 2);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    EvolveResult ev = evolve(psi, 0.0, 1.0, FieldConfig{}, DampingConfig{0.02}, stepper, s.basis, 100);
    CHECK(ev.completed);
    CHECK(ev.max_iterations_used <= 12);
}

TEST_CASE("fixed-point failure is reported, not swallowed") {
    BoxSetup s = box(64, 2);
    ComplexField psi = two_state(s);
    StepperConfig stepper;
    stepper.max_fixed_point_iters = 3;
    // absurd damping makes the midpoint iteration hopeless
    auto [next, rep] = step(psi, 0.0, FieldConfig{}, DampingConfig{5e4}, stepper);
    CHECK_FALSE(rep.converged);
    CHECK(rep.iterations_used == 3);

    EvolveResult ev = evolve(psi, 0.0, 1.0, FieldConfig{}, DampingConfig{5e4}, stepper, s.basis, 10);
    CHECK_FALSE(ev.completed);
    CHECK(!ev.abort_reason.empty());
    CHECK(ev.records.size() >= 2);  // partial results retained
}

TEST_CASE("evolve validates its time span and stride") {
    BoxSetup s = box(64, 1);
    ComplexField psi = eigenstate(s, 0);
    StepperConfig stepper;
    CHECK_THROWS_AS(evolve(psi, 1.0, 1.0, FieldConfig{}, DampingConfig{}, stepper, s.basis, 10),
                    std::invalid_argument);
    CHECK_THROWS_AS(evolve(psi, 0.0, 1.0, FieldConfig{}, DampingConfig{}, stepper, s.basis, 0),
                    std::invalid_argument);
}

TEST_CASE("record count follows the stride bookkeeping") {
    BoxSetup s = box(64, 1);
    ComplexField psi = eigenstate(s, 0);
    StepperConfig stepper;  // dt = 1e-3
    // 100 steps, stride 7 -> 1 + floor(100/7) + 1 records
    EvolveResult ev = evolve(psi, 0.0, 0.1, FieldConfig{}, DampingConfig{}, stepper, s.basis, 7);
    CHECK(static_cast<int>(ev.records.size()) == 1 + 100 / 7 + 1);
}
