#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qdamp/grid.hpp"

namespace qdamp {

// Natural units. The charge is folded into the potential energy V = q*phi,
// so q never appears separately downstream.
struct UnitsConfig {
    double hbar = 1.0;
    double mass = 1.0;
    double charge = 1.0;
};

inline void validate(const UnitsConfig& u) {
    if (!(u.hbar > 0.0) || !(u.mass > 0.0) || !(u.charge > 0.0))
        throw std::invalid_argument("UnitsConfig: hbar, mass, charge must be positive");
}

enum class StaticKind { square_well, harmonic, tabulated };
enum class PerturbationKind { none, dipole_pulse, dipole_periodic };

// V(x,t) = V_static(x) + V_perturbation(x,t), always with zero vector
// potential. The static part is time-independent; all time dependence lives
// in the perturbation:
//   dipole_pulse:     V1 = eps * x * exp(-((t-t_center)/tau)^2)
//   dipole_periodic:  V1 = eps * x * s(t) * sin(omega_d*t),  s(t) = min(1, t/t_ramp)
struct FieldConfig {
    StaticKind static_kind = StaticKind::square_well;
    double omega0 = 1.0;             // harmonic: V = 0.5*m*omega0^2*x^2
    std::vector<double> tabulated;   // tabulated: V per interior grid point

    PerturbationKind perturbation = PerturbationKind::none;
    double epsilon = 0.0;
    double t_center = 0.0;           // dipole_pulse
    double tau = 1.0;                // dipole_pulse, > 0
    double omega_d = 0.0;            // dipole_periodic
    double t_ramp = 1.0;             // dipole_periodic, > 0
};

inline void validate(const FieldConfig& cfg, const Grid1D& grid) {
    if (cfg.static_kind == StaticKind::tabulated &&
        static_cast<int>(cfg.tabulated.size()) != grid.n_interior)
        throw std::invalid_argument("FieldConfig: tabulated potential length does not match grid");
    if (cfg.perturbation == PerturbationKind::dipole_pulse && !(cfg.tau > 0.0))
        throw std::invalid_argument("FieldConfig: tau must be positive");
    if (cfg.perturbation == PerturbationKind::dipole_periodic && !(cfg.t_ramp > 0.0))
        throw std::invalid_argument("FieldConfig: t_ramp must be positive");
}

inline bool time_dependent(const FieldConfig& cfg) {
    return cfg.perturbation != PerturbationKind::none;
}

inline RealField static_potential(const FieldConfig& cfg, const Grid1D& grid,
                                  const UnitsConfig& units = {}) {
    validate(cfg, grid);
    RealField v(grid);
    switch (cfg.static_kind) {
        case StaticKind::square_well:
            break;  // V = 0 inside the walls
        case StaticKind::harmonic:
            for (int i = 0; i < v.size(); ++i) {
                const double x = grid.x(i);
                v[i] = 0.5 * units.mass * cfg.omega0 * cfg.omega0 * x * x;
            }
            break;
        case StaticKind::tabulated:
            v.values = cfg.tabulated;
            break;
    }
    return v;
}

inline double ramp(double t, double t_ramp) { return std::min(1.0, t / t_ramp); }

inline RealField potential_at(const FieldConfig& cfg, const Grid1D& grid, double t,
                              const UnitsConfig& units = {}) {
    RealField v = static_potential(cfg, grid, units);
    switch (cfg.perturbation) {
        case PerturbationKind::none:
            break;
        case PerturbationKind::dipole_pulse: {
            const double a = (t - cfg.t_center) / cfg.tau;
            const double g = cfg.epsilon * std::exp(-a * a);
            for (int i = 0; i < v.size(); ++i) v[i] += g * grid.x(i);
            break;
        }
        case PerturbationKind::dipole_periodic: {
            const double g = cfg.epsilon * ramp(t, cfg.t_ramp) * std::sin(cfg.omega_d * t);
            for (int i = 0; i < v.size(); ++i) v[i] += g * grid.x(i);
            break;
        }
    }
    return v;
}

// Exact analytic dV/dt; zero for the static part. Feeds the work-rate side of
// the energy ledger, so no finite differencing in time is involved.
inline RealField dV_dt_at(const FieldConfig& cfg, const Grid1D& grid, double t) {
    validate(cfg, grid);
    RealField v(grid);
    switch (cfg.perturbation) {
        case PerturbationKind::none:
            break;
        case PerturbationKind::dipole_pulse: {
            const double a = (t - cfg.t_center) / cfg.tau;
            const double g = cfg.epsilon * std::exp(-a * a) * (-2.0 * a / cfg.tau);
            for (int i = 0; i < v.size(); ++i) v[i] = g * grid.x(i);
            break;
        }
        case PerturbationKind::dipole_periodic: {
            // s(t) = min(1, t/t_ramp) has a corner at t = t_ramp; this is the
            // one-sided derivative from the active branch.
            double g = cfg.epsilon * ramp(t, cfg.t_ramp) * cfg.omega_d * std::cos(cfg.omega_d * t);
            if (t < cfg.t_ramp) g += cfg.epsilon * std::sin(cfg.omega_d * t) / cfg.t_ramp;
            for (int i = 0; i < v.size(); ++i) v[i] = g * grid.x(i);
            break;
        }
    }
    return v;
}

// Analytic spatial gradient of the full potential (numerical only for
// tabulated static parts). Used by the density-weighted force.
inline RealField dV_dx_at(const FieldConfig& cfg, const Grid1D& grid, double t,
                          const UnitsConfig& units = {}) {
    validate(cfg, grid);
    RealField v(grid);
    switch (cfg.static_kind) {
        case StaticKind::square_well:
            break;
        case StaticKind::harmonic:
            for (int i = 0; i < v.size(); ++i)
                v[i] = units.mass * cfg.omega0 * cfg.omega0 * grid.x(i);
            break;
        case StaticKind::tabulated: {
            RealField tab(grid, cfg.tabulated);
            v = differentiate(tab, 1);
            break;
        }
    }
    switch (cfg.perturbation) {
        case PerturbationKind::none:
            break;
        case PerturbationKind::dipole_pulse: {
            const double a = (t - cfg.t_center) / cfg.tau;
            const double g = cfg.epsilon * std::exp(-a * a);
            for (int i = 0; i < v.size(); ++i) v[i] += g;
            break;
        }
        case PerturbationKind::dipole_periodic: {
            const double g = cfg.epsilon * ramp(t, cfg.t_ramp) * std::sin(cfg.omega_d * t);
            for (int i = 0; i < v.size(); ++i) v[i] += g;
            break;
        }
    }
    return v;
}

}  // namespace qdamp
