// Batch driver: simulate one controller, compare all three, or estimate the
// model bounds and rho coefficients for a scenario file.

#include <blfarm/dynamics.hpp>
#include <blfarm/lyapunov.hpp>
#include <blfarm/report.hpp>
#include <blfarm/scenario_io.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

namespace {

struct Overrides {
    std::optional<double> step;
    std::optional<double> t_end;
};

void add_common(CLI::App* cmd, std::string& config, Overrides& ov) {
    cmd->add_option("--config", config, "scenario JSON file")->required();
    cmd->add_option("--step", ov.step, "logging period h [s]");
    cmd->add_option("--t-end", ov.t_end, "final time [s]");
}

blfarm::Scenario load(const std::string& config, const Overrides& ov) {
    blfarm::Scenario sc = blfarm::load_scenario(config);
    if (ov.step) sc.h = *ov.step;
    if (ov.t_end) sc.t_end = *ov.t_end;
    sc.validate();
    return sc;
}

void print_run(const blfarm::RunReport& r) {
    std::printf("%s/%s: %s, rows %zu", r.scenario.c_str(), std::string(blfarm::to_string(r.kind)).c_str(),
                std::string(blfarm::to_string(r.outcome)).c_str(), r.rows);
    if (r.violation) {
        std::printf(", violation at t = %.6g s joint %d", r.violation->time, r.violation->joint + 1);
    }
    std::printf(", lyapunov %s", r.verdict.pass ? "PASS" : "FAIL");
    if (r.beta) std::printf(" (beta %.6g, rate ok on %.4f of steps)", *r.beta, r.verdict.rate_satisfied_fraction);
    std::printf("\n  max|e| / delta:");
    for (Eigen::Index i = 0; i < r.ratio.size(); ++i) std::printf(" %.6f", r.ratio(i));
    std::printf("\n  settling (||e|| < %g): %s s, max ||tau|| %.6g\n", blfarm::kSettlingTolerance,
                blfarm::format_optional(r.settling).c_str(), r.max_tau_norm);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Barrier-Lyapunov adaptive control of a two-link arm"};
    app.require_subcommand(1);

    std::string config;
    std::string out_dir = "out";
    std::string controller = "log";
    Overrides ov;

    auto* simulate = app.add_subcommand("simulate", "run one controller and write CSV + report");
    add_common(simulate, config, ov);
    simulate->add_option("--controller", controller, "log | tan | baseline")
        ->check(CLI::IsMember({"log", "tan", "baseline"}));
    simulate->add_option("--out", out_dir, "output directory");

    auto* compare = app.add_subcommand("compare", "run log, tan and baseline on the same scenario");
    add_common(compare, config, ov);
    compare->add_option("--out", out_dir, "output directory");

    auto* bounds = app.add_subcommand("bounds", "estimate model bounds and calibrate rho coefficients");
    add_common(bounds, config, ov);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : blfarm::kExitValidation;
    }

    try {
        if (*simulate) {
            const blfarm::Scenario sc = load(config, ov);
            const auto out = blfarm::run_and_report(sc, *blfarm::parse_barrier_kind(controller), out_dir);
            print_run(out.report);
            return out.report.exit_code();
        }
        if (*compare) {
            const blfarm::Scenario sc = load(config, ov);
            const blfarm::ComparisonReport rep = blfarm::compare_controllers(sc, out_dir);
            std::cout << blfarm::comparison_table(rep);
            return rep.exit_code();
        }
        if (*bounds) {
            blfarm::json root = blfarm::read_json_file(config);
            // rho_coeffs are the output here, so a config may omit them.
            if (root.contains("controller") && !root["controller"].contains("rho_coeffs")) {
                root["controller"]["rho_coeffs"] = {0.0, 0.0, 0.0, 0.0};
            }
            blfarm::Scenario sc = blfarm::scenario_from_json(root, std::filesystem::path(config).stem().string());
            if (ov.step) sc.h = *ov.step;
            if (ov.t_end) sc.t_end = *ov.t_end;
            const auto [region, bopts] = blfarm::bounds_settings(root);
            const blfarm::ModelBounds mb = blfarm::estimate_bounds(sc.params, region, bopts);
            auto copts = blfarm::calibration_settings(root, sc);
            if (ov.t_end) copts.t_end = *ov.t_end;
            const blfarm::RhoCoeffs rho = blfarm::calibrate_rho(sc.params, sc.cfg.alpha, sc.cfg.delta, sc.traj, copts);
            blfarm::json j = {{"model_bounds", blfarm::to_json(mb)},
                              {"bounds_margin", bopts.margin},
                              {"bounds_samples", bopts.samples},
                              {"rho_coeffs", blfarm::to_json(rho)},
                              {"rho_margin", copts.margin},
                              {"rho_samples", copts.samples}};
            std::cout << j.dump(2) << '\n';
            return blfarm::kExitOk;
        }
    } catch (const blfarm::IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return blfarm::kExitIo;
    } catch (const blfarm::InitialConstraintError& e) {
        std::cerr << "constraint error: " << e.what() << '\n';
        return blfarm::kExitValidation;
    } catch (const blfarm::ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return blfarm::kExitValidation;
    } catch (const blfarm::ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return blfarm::kExitValidation;
    } catch (const blfarm::DimensionError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return blfarm::kExitValidation;
    }
    return blfarm::kExitOk;
}
