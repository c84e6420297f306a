#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qdamp/fields.hpp"
#include "qdamp/grid.hpp"
#include "qdamp/hamiltonian.hpp"
#include "qdamp/observables.hpp"
#include "qdamp/propagator.hpp"

namespace qdamp {

struct InitialStateSpec {
    enum class Kind { eigenstate, superposition, gaussian };
    Kind kind = Kind::eigenstate;
    int level = 0;                                   // eigenstate
    std::vector<std::pair<int, Complex>> terms;      // superposition: (n, C_n)
    double center = 0.0, width = 1.0, momentum = 0.0;  // gaussian
};

struct ConvergenceSpec {
    double population_threshold = 0.999;
    double power_threshold = 1e-8;
    double hold_time = 5.0;
};

struct OutputSpec {
    std::string path;  // file stem; empty = in-memory only
    int stride = 10;
};

struct ScenarioConfig {
    double x_min = 0.0, x_max = 1.0;
    int n_interior = 511;
    FieldConfig fields;
    DampingConfig damping;
    StepperConfig stepper;
    InitialStateSpec initial;
    double t0 = 0.0, t_final = 1.0;
    int k_max = 32;
    ConvergenceSpec convergence;
    OutputSpec output;
};

inline void validate(const ScenarioConfig& cfg) {
    if (!(cfg.t_final > cfg.t0))
        throw std::invalid_argument("ScenarioConfig: t_final must exceed t0");
    if (cfg.k_max < 1) throw std::invalid_argument("ScenarioConfig: k_max must be positive");
    if (cfg.output.stride < 1) throw std::invalid_argument("ScenarioConfig: stride must be positive");
    if (cfg.initial.kind == InitialStateSpec::Kind::superposition) {
        if (cfg.initial.terms.empty())
            throw std::invalid_argument("ScenarioConfig: superposition needs at least one term");
        double total = 0.0;
        for (const auto& [n, c] : cfg.initial.terms) {
            if (n < 0) throw std::invalid_argument("ScenarioConfig: superposition level must be >= 0");
            total += std::norm(c);
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument(
                "ScenarioConfig: superposition is not normalized, sum |C_n|^2 deviates by " +
                std::to_string(total - 1.0));
    }
    if (cfg.initial.kind == InitialStateSpec::Kind::gaussian && !(cfg.initial.width > 0.0))
        throw std::invalid_argument("ScenarioConfig: gaussian width must be positive");
    validate(cfg.stepper);
}

inline ComplexField build_initial_state(const InitialStateSpec& spec, const Grid1D& grid,
                                        const EigenBasis& basis) {
    ComplexField psi(grid);
    switch (spec.kind) {
        case InitialStateSpec::Kind::eigenstate: {
            if (spec.level < 0 || spec.level >= basis.size())
                throw std::runtime_error("initial state: basis too small for eigenstate " +
                                         std::to_string(spec.level));
            const RealField& phi = basis.states[static_cast<size_t>(spec.level)];
            for (int i = 0; i < psi.size(); ++i) psi[i] = phi[i];
            break;
        }
        case InitialStateSpec::Kind::superposition: {
            for (const auto& [n, c] : spec.terms) {
                if (n >= basis.size())
                    throw std::runtime_error("initial state: basis too small for level " +
                                             std::to_string(n));
                const RealField& phi = basis.states[static_cast<size_t>(n)];
                for (int i = 0; i < psi.size(); ++i) psi[i] += c * phi[i];
            }
            break;
        }
        case InitialStateSpec::Kind::gaussian: {
            for (int i = 0; i < psi.size(); ++i) {
                const double x = grid.x(i);
                const double a = (x - spec.center) / spec.width;
                psi[i] = std::exp(Complex{-0.5 * a * a, spec.momentum * x});
            }
            break;
        }
    }
    const double nrm = std::sqrt(norm_sq(psi));
    if (!(nrm > 0.0)) throw std::runtime_error("initial state: zero norm on this grid");
    for (auto& v : psi.values) v /= nrm;
    return psi;
}

struct RunResult {
    std::vector<ObservableRecord> records;
    ComplexField final_state;
    std::optional<int> final_eigenstate;
    double radiated_total = 0.0;
    double work_total = 0.0;
    double balance_residual = 0.0;  // Tier-one ledger check, see below
    bool converged = false;
    bool consistent = true;  // detection agrees with the energy balance
    bool completed = true;
    std::string abort_reason;
    double wall_time = 0.0;
    double initial_energy = 0.0;
    double final_energy = 0.0;
    IdentityResiduals residual_max{};
    std::vector<double> basis_energies;
    int max_iterations_used = 0;
};

// k such that population_k stays >= population_threshold and |P| stays below
// power_threshold over the trailing hold_time window; nullopt otherwise.
inline std::optional<int> detect_final_eigenstate(const std::vector<ObservableRecord>& records,
                                                  const ConvergenceSpec& conv) {
    if (records.size() < 2) return std::nullopt;
    const double t_end = records.back().t;
    const double t_from = t_end - conv.hold_time;
    size_t first = records.size();
    for (size_t i = 0; i < records.size(); ++i) {
        if (records[i].t >= t_from - 1e-12 * std::max(1.0, std::abs(t_end))) {
            first = i;
            break;
        }
    }
    if (first >= records.size() - 1) return std::nullopt;
    // the window must genuinely span the hold time
    if (records[first].t > t_from + (records[1].t - records[0].t) + 1e-12) return std::nullopt;

    const auto& pops = records.back().populations;
    if (pops.empty()) return std::nullopt;
    int k = 0;
    for (size_t i = 1; i < pops.size(); ++i)
        if (pops[i] > pops[static_cast<size_t>(k)]) k = static_cast<int>(i);
    for (size_t i = first; i < records.size(); ++i) {
        if (records[i].populations[static_cast<size_t>(k)] < conv.population_threshold)
            return std::nullopt;
        if (std::abs(records[i].power) >= conv.power_threshold) return std::nullopt;
    }
    return k;
}

struct RunHooks {
    SampleSink sample_sink;  // forwarded to evolve
};

// Full pipeline: grid, basis, initial state, evolution, convergence
// detection, and the energy balance. Success is gauged twice: a detected
// eigenstate whose radiated energy disagrees with <E(t0)> - E_k (plus the
// external work) marks the run inconsistent rather than silently passing.
inline RunResult run_scenario(const ScenarioConfig& cfg, const RunHooks& hooks = {},
                              const UnitsConfig& units = {}) {
    validate(cfg);
    const auto wall_start = std::chrono::steady_clock::now();

    const Grid1D grid = build_grid(cfg.x_min, cfg.x_max, cfg.n_interior);
    validate(cfg.fields, grid);
    if (cfg.k_max > grid.n_interior)
        throw std::invalid_argument("run_scenario: k_max exceeds n_interior");

    RealField v0 = static_potential(cfg.fields, grid, units);
    HamiltonianMatrix h0 = assemble_hamiltonian(grid, v0, units);
    EigenBasis basis = solve_eigenbasis(h0, cfg.k_max);

    ComplexField psi0 = build_initial_state(cfg.initial, grid, basis);
    ProjectionResult proj0 = project_coefficients(psi0, basis);
    if (proj0.residual > 1e-6)
        throw std::runtime_error("run_scenario: basis too small, initial-state truncation residual " +
                                 std::to_string(proj0.residual));

    EvolveResult ev = evolve(psi0, cfg.t0, cfg.t_final, cfg.fields, cfg.damping, cfg.stepper,
                             basis, cfg.output.stride, units, hooks.sample_sink);

    RunResult out;
    out.records = std::move(ev.records);
    out.final_state = std::move(ev.final_state);
    out.completed = ev.completed;
    out.abort_reason = ev.abort_reason;
    out.radiated_total = ev.radiated_total;
    out.work_total = ev.work_total;
    out.residual_max = ev.residual_max;
    out.basis_energies = basis.energies;
    out.max_iterations_used = ev.max_iterations_used;
    out.initial_energy = out.records.front().energy;
    out.final_energy = out.records.back().energy;

    if (out.completed) out.final_eigenstate = detect_final_eigenstate(out.records, cfg.convergence);
    out.converged = out.completed && out.final_eigenstate.has_value();

    const double gap = basis.size() > 1 ? basis.energies[1] - basis.energies[0]
                                        : std::max(1.0, std::abs(basis.energies[0]));
    if (out.final_eigenstate) {
        const double ek = basis.energies[static_cast<size_t>(*out.final_eigenstate)];
        out.balance_residual =
            std::abs(out.radiated_total - (out.initial_energy - ek) - out.work_total);
        out.consistent = out.balance_residual <= 1e-3 * gap;
    } else {
        out.balance_residual = std::abs(out.final_energy - out.initial_energy - out.work_total +
                                        out.radiated_total);
    }

    out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    return out;
}

struct CalibrationEntry {
    double beta = 0.0;
    double min_power = 0.0;
    double max_final_population = 0.0;
    std::optional<double> concentration_time;  // first time max population >= 0.9
    bool converged = false;
    double balance_residual = 0.0;
    std::string note;
};

struct CalibrationReport {
    std::vector<CalibrationEntry> entries;
    std::optional<double> recommended;  // smallest beta that converged
};

// Short relaxation sweep over candidate damping strengths. Flags candidates
// that pump energy in (min P < 0) and reports how fast populations
// concentrate; recommends the smallest converging candidate.
inline CalibrationReport calibrate_beta(const ScenarioConfig& base, const std::vector<double>& betas,
                                        const UnitsConfig& units = {}) {
    if (betas.empty()) throw std::invalid_argument("calibrate_beta: no candidates");
    CalibrationReport report;
    for (double b : betas) {
        ScenarioConfig cfg = base;
        cfg.damping.beta = b;
        cfg.output.path.clear();
        CalibrationEntry e;
        e.beta = b;
        try {
            RunResult r = run_scenario(cfg, {}, units);
            e.min_power = r.records.front().power;
            for (const auto& rec : r.records) {
                e.min_power = std::min(e.min_power, rec.power);
                double pmax = 0.0;
                for (double p : rec.populations) pmax = std::max(pmax, p);
                if (!e.concentration_time && pmax >= 0.9) e.concentration_time = rec.t - cfg.t0;
            }
            for (double p : r.records.back().populations)
                e.max_final_population = std::max(e.max_final_population, p);
            e.converged = r.converged;
            e.balance_residual = r.balance_residual;
            if (e.min_power < 0.0) e.note = "pumps energy in (min P < 0)";
            else if (!e.converged) e.note = "did not concentrate within the budget";
        } catch (const std::exception& ex) {
            e.note = ex.what();
        }
        report.entries.push_back(std::move(e));
    }
    for (const auto& e : report.entries)
        if (e.converged && (!report.recommended || e.beta < *report.recommended))
            report.recommended = e.beta;
    return report;
}

}  // namespace qdamp
