#pragma once

#include <cmath>
#include <cstdlib>
#include <deque>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qdamp/fields.hpp"
#include "qdamp/grid.hpp"
#include "qdamp/hamiltonian.hpp"

namespace qdamp {

// J_i = (hbar/m) Im(psi_i* (d psi)_i) with the central first derivative.
inline RealField current_density(const ComplexField& psi, const UnitsConfig& units = {}) {
    ComplexField d = differentiate(psi, 1);
    RealField j(psi.grid);
    const double w = units.hbar / units.mass;
    for (int i = 0; i < psi.size(); ++i) j[i] = w * std::imag(std::conj(psi[i]) * d[i]);
    return j;
}

inline double average_energy(const ComplexField& psi, const HamiltonianMatrix& h) {
    require_same_grid(psi.grid, h.grid, "average_energy");
    ComplexField hp = apply_hamiltonian(h, psi);
    double s = 0.0;
    for (int i = 0; i < psi.size(); ++i) s += std::real(std::conj(psi[i]) * hp[i]);
    return psi.grid.dx * s;
}

// <v> as the quadratic form of the velocity operator -(i hbar/m) d/dx.
inline double average_velocity(const ComplexField& psi, const UnitsConfig& units = {}) {
    ComplexField d = differentiate(psi, 1);
    double s = 0.0;
    for (int i = 0; i < psi.size(); ++i) s += std::imag(std::conj(psi[i]) * d[i]);
    return units.hbar / units.mass * psi.grid.dx * s;
}

// Gradient energy (hbar^2/2m) int |grad psi|^2 evaluated on cell edges with
// the hard-wall ghost values. Summation by parts makes this exactly equal to
// <psi, T psi> for the three-point kinetic stencil.
inline double kinetic_energy(const ComplexField& psi, const UnitsConfig& units = {}) {
    const int n = psi.size();
    const double dx = psi.grid.dx;
    double s = std::norm(psi[0]) + std::norm(psi[n - 1]);
    for (int i = 0; i + 1 < n; ++i) s += std::norm(psi[i + 1] - psi[i]);
    return 0.5 * units.hbar * units.hbar / units.mass * s / dx;
}

// Radiation power P = -(1/i hbar) <psi, [H, R] psi> via two operator
// applications. The commutator of real symmetric operators makes the
// expectation purely imaginary; the real leftover is roundoff and must stay
// below 1e-12 of the quadratic-form scale.
inline double radiation_power(const ComplexField& psi, const HamiltonianMatrix& h,
                              const DampingConfig& damping, const UnitsConfig& units = {}) {
    require_same_grid(psi.grid, h.grid, "radiation_power");
    if (damping.beta == 0.0) return 0.0;
    const int n = psi.size();
    ComplexField hp = apply_hamiltonian(h, psi);
    RealField r(psi.grid);
    for (int i = 0; i < n; ++i)
        r[i] = damping.beta * (2.0 / units.hbar) * std::imag(std::conj(psi[i]) * hp[i]);

    ComplexField rp(psi.grid);
    for (int i = 0; i < n; ++i) rp[i] = r[i] * psi[i];
    ComplexField h_rp = apply_hamiltonian(h, rp);

    Complex acc{0.0, 0.0};
    double mags = 0.0;  // magnitude of the summed terms, for the roundoff scale
    for (int i = 0; i < n; ++i) {
        acc += std::conj(psi[i]) * (h_rp[i] - r[i] * hp[i]);
        mags += std::abs(psi[i]) * (std::abs(h_rp[i]) + std::abs(r[i] * hp[i]));
    }
    acc *= psi.grid.dx;
    mags *= psi.grid.dx;
    if (std::abs(acc.real()) > 1e-12 * std::max(1.0, mags))
        throw std::runtime_error("radiation_power: commutator expectation is not imaginary");
    return -acc.imag() / units.hbar;
}

// The same power through the derived closed form P = beta * int (drho/dt)^2.
inline double radiation_power_identity(const ComplexField& psi, const HamiltonianMatrix& h,
                                       const DampingConfig& damping, const UnitsConfig& units = {}) {
    RealField u = drho_dt(psi, h, units);
    double s = 0.0;
    for (int i = 0; i < u.size(); ++i) s += u[i] * u[i];
    return damping.beta * psi.grid.dx * s;
}

namespace detail {

// -<psi, [D1, B] psi> for B = H + diag(r): expectation of the discrete force
// operator (m/i hbar)[v, H + R]. Carries the potential gradient, the damping
// recoil, and the hard-wall recoil from the kinetic stencil's boundary rows.
inline double commutator_force(const ComplexField& psi, const HamiltonianMatrix& h,
                               const RealField* r) {
    const int n = psi.size();
    auto b_apply = [&](const Complex* in, Complex* out) {
        apply_hamiltonian(h, in, out);
        if (r)
            for (int i = 0; i < n; ++i) out[i] += (*r)[i] * in[i];
    };
    ComplexField bp(psi.grid), dbp(psi.grid), dp(psi.grid), bdp(psi.grid);
    b_apply(psi.values.data(), bp.values.data());
    dbp = differentiate(bp, 1);
    dp = differentiate(psi, 1);
    b_apply(dp.values.data(), bdp.values.data());
    Complex acc{0.0, 0.0};
    for (int i = 0; i < n; ++i) acc += std::conj(psi[i]) * (dbp[i] - bdp[i]);
    acc *= psi.grid.dx;
    return -acc.real();
}

}  // namespace detail

struct ForcePair {
    double lorentz = 0.0;  // -int rho dV/dx
    double recoil = 0.0;   // (m/i hbar) <psi, [v, R] psi>
};

// Density-weighted Lorentz force and the damping recoil force. The recoil is
// evaluated through the velocity-damping commutator; the equivalent reduced
// form -int rho d(beta drho/dt)/dx is exposed separately for cross-checks.
inline ForcePair forces(const ComplexField& psi, const HamiltonianMatrix& h,
                        const FieldConfig& fields, const DampingConfig& damping,
                        const UnitsConfig& units, double t) {
    require_same_grid(psi.grid, h.grid, "forces");
    ForcePair out;
    RealField dvdx = dV_dx_at(fields, psi.grid, t, units);
    double s = 0.0;
    for (int i = 0; i < psi.size(); ++i) s += std::norm(psi[i]) * dvdx[i];
    out.lorentz = -psi.grid.dx * s;

    if (damping.beta != 0.0) {
        RealField u = drho_dt(psi, h, units);
        RealField r(psi.grid);
        for (int i = 0; i < psi.size(); ++i) r[i] = damping.beta * u[i];
        // [v, H + r] - [v, H] isolates the damping part of the commutator
        out.recoil = detail::commutator_force(psi, h, &r) - detail::commutator_force(psi, h, nullptr);
    }
    return out;
}

inline double recoil_force_reduced(const ComplexField& psi, const HamiltonianMatrix& h,
                                   const DampingConfig& damping, const UnitsConfig& units = {}) {
    RealField u = drho_dt(psi, h, units);
    RealField r(psi.grid);
    for (int i = 0; i < psi.size(); ++i) r[i] = damping.beta * u[i];
    RealField dr = differentiate(r, 1);
    double s = 0.0;
    for (int i = 0; i < psi.size(); ++i) s += std::norm(psi[i]) * dr[i];
    return -psi.grid.dx * s;
}

// Per-step snapshot of every logged diagnostic. Residual columns hold the
// identity residuals centred on this sample (zero at the series ends).
struct ObservableRecord {
    double t = 0.0;
    double norm = 0.0;
    double energy = 0.0;
    double velocity = 0.0;
    double power = 0.0;
    std::vector<double> populations;
    double radiated = 0.0;
    double external_work = 0.0;
    double lorentz_force = 0.0;
    double recoil_force = 0.0;
    double res_continuity = 0.0;
    double res_ehrenfest = 0.0;
    double res_ledger = 0.0;
    double res_cond24 = 0.0;
};

struct IdentityResiduals {
    double continuity = 0.0;
    double ehrenfest = 0.0;
    double energy_ledger = 0.0;
    double condition24 = 0.0;
    double power_formula_gap = 0.0;
};

struct SampleResiduals {
    double continuity = 0.0;
    double ehrenfest = 0.0;
    double ledger = 0.0;
    double cond24 = 0.0;
};

// Streaming evaluator for the identity residuals over a sampled trajectory.
// Keeps a three-sample window so long runs never retain full state series.
// Time derivatives are central differences over the observer stride; each
// feed() with a full window returns the residuals of the middle sample.
class ResidualAccumulator {
  public:
    ResidualAccumulator(DampingConfig damping, UnitsConfig units)
        : damping_(damping), units_(units) {}

    std::optional<SampleResiduals> feed(double t, const ComplexField& psi,
                                        const HamiltonianMatrix& h, const RealField& v_field,
                                        double work_rate, double power) {
        Snapshot s;
        s.t = t;
        s.rho.resize(static_cast<size_t>(psi.size()));
        for (int i = 0; i < psi.size(); ++i) s.rho[static_cast<size_t>(i)] = std::norm(psi[i]);
        RealField u = drho_dt(psi, h, units_);
        s.u = u.values;
        s.energy = average_energy(psi, h);
        s.velocity = average_velocity(psi, units_);
        s.kinetic = kinetic_energy(psi, units_);
        s.power = power;
        s.work_rate = work_rate;
        double vu = 0.0;
        for (int i = 0; i < psi.size(); ++i) vu += v_field[i] * u[i];
        s.pot_flow = psi.grid.dx * vu;
        double iu = 0.0;
        for (double x : s.u) iu += x;
        s.u_integral = psi.grid.dx * iu;
        if (damping_.beta != 0.0) {
            RealField r(psi.grid);
            for (int i = 0; i < psi.size(); ++i) r[i] = damping_.beta * u[i];
            s.total_force = detail::commutator_force(psi, h, &r);
        } else {
            s.total_force = detail::commutator_force(psi, h, nullptr);
        }
        double cheap = 0.0;
        for (double x : s.u) cheap += x * x;
        cheap *= damping_.beta * psi.grid.dx;
        max_.power_formula_gap = std::max(max_.power_formula_gap, std::abs(power - cheap));
        s.dx = psi.grid.dx;

        window_.push_back(std::move(s));
        if (window_.size() < 3) return std::nullopt;
        if (window_.size() > 3) window_.pop_front();
        return middle_residuals();
    }

    const IdentityResiduals& maxima() const { return max_; }
    int samples_fed() const { return fed_; }

  private:
    struct Snapshot {
        double t = 0.0;
        std::vector<double> rho, u;
        double energy = 0.0, velocity = 0.0, kinetic = 0.0;
        double power = 0.0, work_rate = 0.0;
        double pot_flow = 0.0;    // int V (drho/dt)
        double u_integral = 0.0;  // int drho/dt
        double total_force = 0.0;
        double dx = 0.0;
    };

    std::optional<SampleResiduals> middle_residuals() {
        const Snapshot& a = window_[0];
        const Snapshot& b = window_[1];
        const Snapshot& c = window_[2];
        const double span = c.t - a.t;
        if (!(span > 0.0) || c.t == b.t || b.t == a.t) return std::nullopt;  // duplicated sample

        SampleResiduals r;
        double cont = std::abs(b.u_integral);
        for (size_t i = 0; i < b.u.size(); ++i) {
            const double drho = (c.rho[i] - a.rho[i]) / span;
            cont = std::max(cont, std::abs(drho - b.u[i]));
        }
        r.continuity = cont;
        const double dv = (c.velocity - a.velocity) / span;
        r.ehrenfest = std::abs(units_.mass * dv - b.total_force);
        const double de = (c.energy - a.energy) / span;
        r.ledger = std::abs(de - b.work_rate + b.power);
        const double dk = (c.kinetic - a.kinetic) / span;
        r.cond24 = std::abs(b.power + b.pot_flow + dk);

        max_.continuity = std::max(max_.continuity, r.continuity);
        max_.ehrenfest = std::max(max_.ehrenfest, r.ehrenfest);
        max_.energy_ledger = std::max(max_.energy_ledger, r.ledger);
        max_.condition24 = std::max(max_.condition24, r.cond24);
        ++fed_;
        return r;
    }

    DampingConfig damping_;
    UnitsConfig units_;
    std::deque<Snapshot> window_;
    IdentityResiduals max_{};
    int fed_ = 0;
};

// Batch form over a retained series; the streaming accumulator above is the
// same computation fed incrementally.
inline IdentityResiduals identity_residuals(const std::vector<ObservableRecord>& series,
                                            const std::vector<ComplexField>& states,
                                            const FieldConfig& fields, const DampingConfig& damping,
                                            const UnitsConfig& units = {}) {
    if (series.size() != states.size())
        throw std::invalid_argument("identity_residuals: series and states must align");
    if (series.size() < 3)
        throw std::invalid_argument("identity_residuals: need at least 3 consecutive samples");
    ResidualAccumulator acc(damping, units);
    for (size_t k = 0; k < series.size(); ++k) {
        const Grid1D& g = states[k].grid;
        RealField v = potential_at(fields, g, series[k].t, units);
        HamiltonianMatrix h = assemble_hamiltonian(g, v, units);
        h.t = series[k].t;
        RealField dvdt = dV_dt_at(fields, g, series[k].t);
        double wr = 0.0;
        for (int i = 0; i < states[k].size(); ++i) wr += dvdt[i] * std::norm(states[k][i]);
        wr *= g.dx;
        acc.feed(series[k].t, states[k], h, v, wr, series[k].power);
    }
    return acc.maxima();
}

}  // namespace qdamp
