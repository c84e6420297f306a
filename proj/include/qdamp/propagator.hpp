#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qdamp/fields.hpp"
#include "qdamp/grid.hpp"
#include "qdamp/hamiltonian.hpp"
#include "qdamp/observables.hpp"

namespace qdamp {

struct StepperConfig {
    double dt = 1e-3;
    double fixed_point_tol = 1e-10;  // relative state change between iterates
    int max_fixed_point_iters = 50;
};

inline void validate(const StepperConfig& s) {
    if (!(s.dt > 0.0)) throw std::invalid_argument("StepperConfig: dt must be positive");
    if (!(s.fixed_point_tol > 0.0)) throw std::invalid_argument("StepperConfig: tol must be positive");
    if (s.max_fixed_point_iters < 1)
        throw std::invalid_argument("StepperConfig: max_fixed_point_iters must be at least 1");
}

struct StepReport {
    int iterations_used = 0;     // linear solves performed
    double norm_drift = 0.0;     // | ||psi_new||^2 - ||psi_old||^2 |
    bool converged = true;
};

// Trapezoidal (Cayley) update of i hbar dpsi/dt = (H + R) psi:
//   (I + i dt/(2 hbar) (H + R_mid)) psi_new = (I - i dt/(2 hbar) (H + R_mid)) psi_old
// with H assembled at t + dt/2 and the damping field R_mid frozen per
// fixed-point iterate at psi_mid = (psi_old + psi_new)/2. Because H + R_mid is
// real symmetric the update is exactly unitary however far the fixed point
// has converged; norm drift measures only linear-solve roundoff.
class CrankNicolson {
  public:
    CrankNicolson(const Grid1D& grid, const FieldConfig& fields, const DampingConfig& damping,
                  const StepperConfig& stepper, const UnitsConfig& units = {})
        : grid_(grid), fields_(fields), damping_(damping), stepper_(stepper), units_(units) {
        validate(stepper_);
        validate(fields_, grid_);
        validate(units_);
        const int n = grid.n_interior;
        kinetic_ = units.hbar * units.hbar / (units.mass * grid.dx * grid.dx);
        off_ = -0.5 * kinetic_;
        RealField vs = static_potential(fields_, grid_, units_);
        diag_static_.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) diag_static_[static_cast<size_t>(i)] = kinetic_ + vs[i];
        x_.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) x_[static_cast<size_t>(i)] = grid.x(i);
        dmid_.resize(static_cast<size_t>(n));
        guess_.resize(static_cast<size_t>(n));
        mid_.resize(static_cast<size_t>(n));
        hmid_.resize(static_cast<size_t>(n));
        adiag_.resize(static_cast<size_t>(n));
        rhs_.resize(static_cast<size_t>(n));
        cw_.resize(static_cast<size_t>(n));
        prev_.resize(static_cast<size_t>(n));
    }

    const Grid1D& grid() const { return grid_; }
    double dt() const { return stepper_.dt; }

    // Full Hamiltonian at time t (static part plus perturbation).
    HamiltonianMatrix hamiltonian_at(double t) const {
        HamiltonianMatrix h;
        h.grid = grid_;
        h.off = off_;
        h.t = t;
        h.diag = diag_static_;
        add_perturbation(t, h.diag);
        return h;
    }

    // Advance psi from t to t + dt in place.
    StepReport advance(std::vector<Complex>& psi, double t) {
        const int n = static_cast<int>(psi.size());
        const double dt = stepper_.dt;
        const double delta = 0.5 * dt / units_.hbar;
        const double dx = grid_.dx;

        dmid_ = diag_static_;
        add_perturbation(t + 0.5 * dt, dmid_);

        double norm_old = 0.0;
        for (const auto& v : psi) norm_old += std::norm(v);
        norm_old *= dx;

        // predictor: linear extrapolation from the previous step
        if (have_prev_) {
            for (int i = 0; i < n; ++i)
                guess_[static_cast<size_t>(i)] = 2.0 * psi[static_cast<size_t>(i)] - prev_[static_cast<size_t>(i)];
        } else {
            guess_ = psi;
        }
        prev_ = psi;

        StepReport rep;
        rep.converged = false;
        const Complex iw{0.0, delta * off_};
        for (int it = 1; it <= stepper_.max_fixed_point_iters; ++it) {
            rep.iterations_used = it;
            if (damping_.beta != 0.0) {
                for (int i = 0; i < n; ++i)
                    mid_[static_cast<size_t>(i)] = 0.5 * (psi[static_cast<size_t>(i)] + guess_[static_cast<size_t>(i)]);
                apply_tridiag(dmid_, mid_, hmid_);
                const double w = 2.0 * damping_.beta / units_.hbar;
                for (int i = 0; i < n; ++i)
                    adiag_[static_cast<size_t>(i)] =
                        dmid_[static_cast<size_t>(i)] +
                        w * std::imag(std::conj(mid_[static_cast<size_t>(i)]) * hmid_[static_cast<size_t>(i)]);
            } else {
                adiag_ = dmid_;
            }

            // rhs = (I - i delta A) psi
            for (int i = 0; i < n; ++i) {
                Complex nb{0.0, 0.0};
                if (i > 0) nb += psi[static_cast<size_t>(i - 1)];
                if (i + 1 < n) nb += psi[static_cast<size_t>(i + 1)];
                rhs_[static_cast<size_t>(i)] =
                    (1.0 - Complex{0.0, delta * adiag_[static_cast<size_t>(i)]}) * psi[static_cast<size_t>(i)] -
                    iw * nb;
            }

            // Thomas solve of (I + i delta A) x = rhs; the diagonal dominates
            // the two off-diagonal entries for any usable dt.
            {
                Complex b0{1.0, delta * adiag_[0]};
                cw_[0] = iw / b0;
                rhs_[0] /= b0;
                for (int i = 1; i < n; ++i) {
                    const Complex m = Complex{1.0, delta * adiag_[static_cast<size_t>(i)]} -
                                      iw * cw_[static_cast<size_t>(i - 1)];
                    cw_[static_cast<size_t>(i)] = iw / m;
                    rhs_[static_cast<size_t>(i)] =
                        (rhs_[static_cast<size_t>(i)] - iw * rhs_[static_cast<size_t>(i - 1)]) / m;
                }
                for (int i = n - 2; i >= 0; --i)
                    rhs_[static_cast<size_t>(i)] -= cw_[static_cast<size_t>(i)] * rhs_[static_cast<size_t>(i + 1)];
            }

            if (damping_.beta == 0.0) {
                guess_ = rhs_;
                rep.converged = true;  // R vanishes identically: single solve is exact
                break;
            }
            double change = 0.0, scale = 0.0;
            for (int i = 0; i < n; ++i) {
                change += std::norm(rhs_[static_cast<size_t>(i)] - guess_[static_cast<size_t>(i)]);
                scale += std::norm(rhs_[static_cast<size_t>(i)]);
            }
            guess_ = rhs_;
            if (change <= stepper_.fixed_point_tol * stepper_.fixed_point_tol * scale) {
                rep.converged = true;
                break;
            }
        }

        psi = guess_;
        have_prev_ = true;
        double norm_new = 0.0;
        for (const auto& v : psi) norm_new += std::norm(v);
        norm_new *= dx;
        rep.norm_drift = std::abs(norm_new - norm_old);
        return rep;
    }

    void reset_history() { have_prev_ = false; }

    // beta * int (drho/dt)^2 at psi with H(t), reusing step workspace. Valid
    // between advances (the buffers are rebuilt at the start of each step).
    double power_identity(const std::vector<Complex>& psi, double t, double beta) {
        if (beta == 0.0) return 0.0;
        dmid_ = diag_static_;
        add_perturbation(t, dmid_);
        apply_tridiag(dmid_, psi, hmid_);
        const double w = 2.0 / units_.hbar;
        double s = 0.0;
        for (size_t i = 0; i < psi.size(); ++i) {
            const double u = w * std::imag(std::conj(psi[i]) * hmid_[i]);
            s += u * u;
        }
        return beta * grid_.dx * s;
    }

  private:
    void add_perturbation(double t, std::vector<double>& diag) const {
        double g = 0.0;
        switch (fields_.perturbation) {
            case PerturbationKind::none:
                return;
            case PerturbationKind::dipole_pulse: {
                const double a = (t - fields_.t_center) / fields_.tau;
                g = fields_.epsilon * std::exp(-a * a);
                break;
            }
            case PerturbationKind::dipole_periodic:
                g = fields_.epsilon * ramp(t, fields_.t_ramp) * std::sin(fields_.omega_d * t);
                break;
        }
        for (size_t i = 0; i < diag.size(); ++i) diag[i] += g * x_[i];
    }

    void apply_tridiag(const std::vector<double>& diag, const std::vector<Complex>& in,
                       std::vector<Complex>& out) const {
        const int n = static_cast<int>(in.size());
        out[0] = diag[0] * in[0] + off_ * in[1];
        for (int i = 1; i < n - 1; ++i)
            out[static_cast<size_t>(i)] = diag[static_cast<size_t>(i)] * in[static_cast<size_t>(i)] +
                                          off_ * (in[static_cast<size_t>(i - 1)] + in[static_cast<size_t>(i + 1)]);
        out[static_cast<size_t>(n - 1)] =
            diag[static_cast<size_t>(n - 1)] * in[static_cast<size_t>(n - 1)] + off_ * in[static_cast<size_t>(n - 2)];
    }

    Grid1D grid_;
    FieldConfig fields_;
    DampingConfig damping_;
    StepperConfig stepper_;
    UnitsConfig units_;
    double kinetic_ = 0.0, off_ = 0.0;
    std::vector<double> diag_static_, x_, dmid_, adiag_;
    std::vector<Complex> guess_, mid_, hmid_, rhs_, cw_, prev_;
    bool have_prev_ = false;
};

// Single-step convenience form.
inline std::pair<ComplexField, StepReport> step(const ComplexField& psi, double t,
                                                const FieldConfig& fields, const DampingConfig& damping,
                                                const StepperConfig& stepper, const UnitsConfig& units = {}) {
    CrankNicolson cn(psi.grid, fields, damping, stepper, units);
    ComplexField out = psi;
    StepReport rep = cn.advance(out.values, t);
    return {std::move(out), rep};
}

struct EvolveResult {
    std::vector<ObservableRecord> records;
    ComplexField final_state;
    bool completed = true;
    std::string abort_reason;
    IdentityResiduals residual_max{};
    double radiated_total = 0.0;
    double work_total = 0.0;
    long long steps_taken = 0;
    int max_iterations_used = 0;
};

using SampleSink = std::function<void(int, const ComplexField&, const ObservableRecord&)>;

// Repeated stepping with observables sampled every observer_stride steps
// (plus the initial and final states; the final sample is always appended).
// Radiated energy and external work accumulate by the trapezoid rule at the
// step level. Norm drift is never corrected: it is a bug detector.
inline EvolveResult evolve(const ComplexField& initial, double t0, double t_final,
                           const FieldConfig& fields, const DampingConfig& damping,
                           const StepperConfig& stepper, const EigenBasis& basis,
                           int observer_stride, const UnitsConfig& units = {},
                           const SampleSink& sink = {}) {
    if (!(t_final > t0)) throw std::invalid_argument("evolve: t_final must exceed t0");
    if (observer_stride < 1) throw std::invalid_argument("evolve: observer_stride must be positive");
    require_same_grid(initial.grid, basis.grid, "evolve");

    const Grid1D grid = initial.grid;
    CrankNicolson cn(grid, fields, damping, stepper, units);
    const long long n_steps = std::llround((t_final - t0) / stepper.dt);
    if (n_steps < 1) throw std::invalid_argument("evolve: time span is shorter than one step");

    EvolveResult out;
    out.final_state = initial;
    std::vector<Complex>& psi = out.final_state.values;

    ResidualAccumulator acc(damping, units);
    const bool driven = time_dependent(fields);

    double radiated = 0.0, work = 0.0;
    auto power_now = [&](double t) { return cn.power_identity(psi, t, damping.beta); };
    auto work_rate_now = [&](double t) {
        if (!driven) return 0.0;
        RealField dvdt = dV_dt_at(fields, grid, t);
        double s = 0.0;
        for (int i = 0; i < out.final_state.size(); ++i) s += dvdt[i] * std::norm(psi[static_cast<size_t>(i)]);
        return grid.dx * s;
    };

    double p_prev = power_now(t0);
    double w_prev = work_rate_now(t0);

    auto sample = [&](double t) {
        HamiltonianMatrix h = cn.hamiltonian_at(t);
        ObservableRecord rec;
        rec.t = t;
        rec.norm = norm_sq(out.final_state);
        rec.energy = average_energy(out.final_state, h);
        rec.velocity = average_velocity(out.final_state, units);
        rec.power = radiation_power(out.final_state, h, damping, units);
        ProjectionResult proj = project_coefficients(out.final_state, basis);
        rec.populations.resize(proj.coefficients.size());
        for (size_t i = 0; i < proj.coefficients.size(); ++i)
            rec.populations[i] = std::norm(proj.coefficients[i]);
        rec.radiated = radiated;
        rec.external_work = work;
        ForcePair f = forces(out.final_state, h, fields, damping, units, t);
        rec.lorentz_force = f.lorentz;
        rec.recoil_force = f.recoil;
        out.records.push_back(std::move(rec));

        RealField v = potential_at(fields, grid, t, units);
        auto res = acc.feed(t, out.final_state, h, v, work_rate_now(t), out.records.back().power);
        if (res) {
            ObservableRecord& mid = out.records[out.records.size() - 2];
            mid.res_continuity = res->continuity;
            mid.res_ehrenfest = res->ehrenfest;
            mid.res_ledger = res->ledger;
            mid.res_cond24 = res->cond24;
        }
        if (sink) sink(static_cast<int>(out.records.size()) - 1, out.final_state, out.records.back());
    };

    sample(t0);
    double t = t0;
    for (long long k = 1; k <= n_steps; ++k) {
        StepReport rep = cn.advance(psi, t);
        out.max_iterations_used = std::max(out.max_iterations_used, rep.iterations_used);
        t = t0 + static_cast<double>(k) * stepper.dt;
        out.steps_taken = k;
        if (!rep.converged) {
            out.completed = false;
            out.abort_reason = "fixed-point iteration did not converge at t = " + std::to_string(t);
            break;
        }
        const double p_now = power_now(t);
        radiated += 0.5 * stepper.dt * (p_prev + p_now);
        p_prev = p_now;
        if (driven) {
            const double w_now = work_rate_now(t);
            work += 0.5 * stepper.dt * (w_prev + w_now);
            w_prev = w_now;
        }
        if (k % observer_stride == 0) sample(t);
    }
    sample(t);  // final state, appended unconditionally

    out.residual_max = acc.maxima();
    out.radiated_total = radiated;
    out.work_total = work;
    return out;
}

}  // namespace qdamp
