// Command-line front end: run scenarios from JSON configs, sweep damping
// candidates, or print identity-residual maxima for a config.

#include <cstdio>
#include <filesystem>
#include <future>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qdamp/config_io.hpp"
#include "qdamp/output.hpp"
#include "qdamp/scenario.hpp"
#include "qdamp/version.hpp"

namespace fs = std::filesystem;

namespace {

std::string effective_stem(const std::string& config_path, const qdamp::ScenarioConfig& cfg,
                           const std::string& out_dir) {
    std::string stem = cfg.output.path;
    if (stem.empty()) stem = fs::path(config_path).stem().string();
    if (!out_dir.empty()) stem = (fs::path(out_dir) / fs::path(stem).filename()).string();
    return stem;
}

void print_summary(const std::string& name, const qdamp::RunResult& r) {
    std::printf("%s:\n", name.c_str());
    std::printf("  completed        %s%s\n", r.completed ? "yes" : "no",
                r.completed ? "" : (" (" + r.abort_reason + ")").c_str());
    if (r.final_eigenstate)
        std::printf("  final eigenstate %d (converged, %s)\n", *r.final_eigenstate,
                    r.consistent ? "balance consistent" : "BALANCE INCONSISTENT");
    else
        std::printf("  final eigenstate none detected\n");
    std::printf("  <E> initial/final  %.12g / %.12g\n", r.initial_energy, r.final_energy);
    std::printf("  radiated           %.12g\n", r.radiated_total);
    std::printf("  external work      %.12g\n", r.work_total);
    std::printf("  balance residual   %.3e\n", r.balance_residual);
    std::printf("  residual maxima    continuity %.3e  ehrenfest %.3e  ledger %.3e  cond24 %.3e  power-gap %.3e\n",
                r.residual_max.continuity, r.residual_max.ehrenfest, r.residual_max.energy_ledger,
                r.residual_max.condition24, r.residual_max.power_formula_gap);
    std::printf("  wall time          %.1f s\n", r.wall_time);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"1D Schrodinger evolution with a radiation-damping nonlinearity"};
    app.require_subcommand(1);

    std::vector<std::string> run_configs;
    std::string out_dir;
    auto* run = app.add_subcommand("run", "run one or more scenario configs");
    run->add_option("configs", run_configs, "scenario config files")->required()->expected(-1);
    run->add_option("--out", out_dir, "directory for output files (overrides config stems)");

    std::string cal_config;
    std::string betas_csv;
    auto* cal = app.add_subcommand("calibrate", "sweep damping candidates on a config");
    cal->add_option("config", cal_config, "scenario config file")->required();
    cal->add_option("--betas", betas_csv, "comma-separated damping candidates")->required();

    std::string check_config;
    auto* chk = app.add_subcommand("check", "run the identity-residual suite only");
    chk->add_option("config", check_config, "scenario config file")->required();

    auto* ver = app.add_subcommand("version", "print the tool version");

    CLI11_PARSE(app, argc, argv);

    try {
        if (ver->parsed()) {
            std::printf("%s %s\n", qdamp::kToolName, qdamp::kVersion);
            return 0;
        }

        if (run->parsed()) {
            std::vector<qdamp::ScenarioConfig> cfgs;
            std::vector<std::string> stems;
            std::set<std::string> seen;
            for (const auto& path : run_configs) {
                cfgs.push_back(qdamp::parse_config(path));
                stems.push_back(effective_stem(path, cfgs.back(), out_dir));
                if (!seen.insert(stems.back()).second) {
                    std::fprintf(stderr, "error: output path collision on \"%s\"\n", stems.back().c_str());
                    return 1;
                }
            }
            // independent runs; one worker per run
            std::vector<std::future<qdamp::RunResult>> futures;
            futures.reserve(cfgs.size());
            for (const auto& cfg : cfgs)
                futures.push_back(std::async(std::launch::async,
                                             [&cfg] { return qdamp::run_scenario(cfg); }));
            bool ok = true;
            for (size_t i = 0; i < futures.size(); ++i) {
                try {
                    qdamp::RunResult r = futures[i].get();
                    qdamp::EmittedFiles files = qdamp::emit_results(r, cfgs[i], stems[i]);
                    print_summary(run_configs[i], r);
                    std::printf("  wrote %s, %s\n", files.csv_path.c_str(), files.json_path.c_str());
                    if (!r.completed || !r.consistent) ok = false;
                } catch (const std::exception& e) {
                    std::fprintf(stderr, "error in %s: %s\n", run_configs[i].c_str(), e.what());
                    ok = false;
                }
            }
            return ok ? 0 : 1;
        }

        if (cal->parsed()) {
            std::vector<double> betas;
            std::string item;
            for (std::stringstream ss(betas_csv); std::getline(ss, item, ',');)
                betas.push_back(std::stod(item));
            qdamp::ScenarioConfig cfg = qdamp::parse_config(cal_config);
            qdamp::CalibrationReport report = qdamp::calibrate_beta(cfg, betas);
            std::printf("%12s %14s %12s %14s %10s  %s\n", "beta", "min P", "max pop", "t(pop>=0.9)",
                        "converged", "note");
            for (const auto& e : report.entries) {
                std::printf("%12.5g %14.4e %12.6f %14s %10s  %s\n", e.beta, e.min_power,
                            e.max_final_population,
                            e.concentration_time ? std::to_string(*e.concentration_time).c_str() : "-",
                            e.converged ? "yes" : "no", e.note.c_str());
            }
            if (report.recommended)
                std::printf("recommended beta: %g (smallest converging candidate)\n", *report.recommended);
            else
                std::printf("no candidate converged within the budget\n");
            return 0;
        }

        if (chk->parsed()) {
            qdamp::ScenarioConfig cfg = qdamp::parse_config(check_config);
            cfg.output.path.clear();
            qdamp::RunResult r = qdamp::run_scenario(cfg);
            print_summary(check_config, r);
            return r.completed ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
