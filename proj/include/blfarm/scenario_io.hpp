#pragma once

// JSON scenario files. Layout (SI units, radians):
//
// {
//   "name": "default",
//   "plant":      { "physical": { "l1": 1.0, ... } }  or  { "theta": [7 numbers] },
//   "controller": { "alpha": [..], "kr": [..], "k": [..], "delta": [..], "kn": 5,
//                   "gamma": [..] or number, "rho_coeffs": [c1, c2, c3, c4],
//                   "kind": "log" | "tan" | "baseline" },
//   "trajectory": { "amplitude": [..], "omega": [..], "lambda": 1.0, "offset": [..] },
//   "sim":        { "t_end": 20, "step": 1e-3, "max_substep": 2.5e-5,
//                   "initial_error": [..]  or  "q0": [..],
//                   "qdot0": [..], "theta_hat0": "zero" | "true" | "perturbed" | [..],
//                   "perturbation": 0.5 },
//   "bounds":      { "q_min": [..], "q_max": [..], "qdot_max": [..], "samples": N, "margin": m },
//   "calibration": { "samples": N, "margin": m, "seed": s }
// }
//
// "plant", "bounds" and "calibration" are optional.

#include <blfarm/controller.hpp>
#include <blfarm/dynamics.hpp>
#include <blfarm/lyapunov.hpp>
#include <blfarm/sim.hpp>
#include <blfarm/types.hpp>

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

namespace blfarm {

using json = nlohmann::json;

namespace detail {

inline const json& require(const json& obj, const char* key) {
    if (!obj.is_object() || !obj.contains(key)) throw ValidationError(key);
    return obj.at(key);
}

inline double read_number(const json& obj, const char* key) {
    const json& v = require(obj, key);
    if (!v.is_number()) throw ValidationError(key, "expected a number");
    return v.get<double>();
}

template <typename Vec>
Vec read_vector(const json& v, const char* key) {
    if (!v.is_array() || v.empty()) throw ValidationError(key, "expected a non-empty array of numbers");
    if (static_cast<Eigen::Index>(v.size()) > Vec::MaxRowsAtCompileTime) throw ValidationError(key, "too many entries");
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_number()) throw ValidationError(key, "expected a non-empty array of numbers");
        out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
    }
    return out;
}

template <typename Vec>
Vec read_vector(const json& obj, const char* key, int) {
    return read_vector<Vec>(require(obj, key), key);
}

template <typename Vec>
json to_array(const Vec& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

inline RobotParams read_plant(const json& root) {
    if (!root.contains("plant")) return RobotParams::reference();
    const json& plant = root.at("plant");
    if (plant.contains("theta")) {
        RobotParams rp;
        rp.theta = read_vector<ParamVec>(plant.at("theta"), "theta");
        return rp;
    }
    PhysicalParams ph;
    if (plant.contains("physical")) {
        const json& p = plant.at("physical");
        auto opt = [&](const char* key, double& dst) {
            if (p.contains(key)) {
                if (!p.at(key).is_number()) throw ValidationError(key, "expected a number");
                dst = p.at(key).get<double>();
            }
        };
        opt("l1", ph.l1);
        opt("l2", ph.l2);
        opt("lc1", ph.lc1);
        opt("lc2", ph.lc2);
        opt("m1", ph.m1);
        opt("m2", ph.m2);
        opt("I1", ph.I1);
        opt("I2", ph.I2);
        opt("fd1", ph.fd1);
        opt("fd2", ph.fd2);
        opt("gravity", ph.gravity);
    }
    return RobotParams::from_physical(ph);
}

inline ControllerConfig read_controller(const json& root, int p) {
    const json& c = require(root, "controller");
    ControllerConfig cfg;
    cfg.alpha = read_vector<JointVec>(c, "alpha", 0);
    cfg.kr = read_vector<JointVec>(c, "kr", 0);
    cfg.k = read_vector<JointVec>(c, "k", 0);
    cfg.delta = read_vector<JointVec>(c, "delta", 0);
    cfg.kn = read_number(c, "kn");
    const json& g = require(c, "gamma");
    cfg.gamma = g.is_number() ? ParamVec::Constant(p, g.get<double>()) : read_vector<ParamVec>(g, "gamma");
    const ParamVec rho = read_vector<ParamVec>(c, "rho_coeffs", 0);
    if (rho.size() != 4) throw ValidationError("rho_coeffs", "expected four coefficients");
    cfg.rho = {rho(0), rho(1), rho(2), rho(3)};
    if (c.contains("kind")) {
        const json& k = c.at("kind");
        const auto kind = k.is_string() ? parse_barrier_kind(k.get<std::string>()) : std::nullopt;
        if (!kind) throw ValidationError("kind", "expected log, tan or baseline");
        cfg.kind = *kind;
    }
    return cfg;
}

inline SinusoidSpec read_trajectory(const json& root) {
    const json& t = require(root, "trajectory");
    SinusoidSpec spec;
    spec.amplitude = read_vector<JointVec>(t, "amplitude", 0);
    spec.omega = read_vector<JointVec>(t, "omega", 0);
    spec.lambda = read_number(t, "lambda");
    spec.offset = t.contains("offset") ? read_vector<JointVec>(t, "offset", 0) : JointVec::Zero(spec.amplitude.size());
    return spec;
}

/// theta_hat(0) = theta (1 + s_i f) with s_i alternating +1, -1, ...
inline ParamVec perturbed_estimate(const ParamVec& theta, double fraction) {
    ParamVec out = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) out(i) *= 1.0 + (i % 2 == 0 ? fraction : -fraction);
    return out;
}

}  // namespace detail

/// Builds and validates a Scenario from a parsed document.
inline Scenario scenario_from_json(const json& root, const std::string& fallback_name = "scenario") {
    if (!root.is_object()) throw ParseError("scenario root must be a JSON object");
    Scenario sc;
    sc.name = root.contains("name") && root.at("name").is_string() ? root.at("name").get<std::string>() : fallback_name;
    sc.params = detail::read_plant(root);
    sc.cfg = detail::read_controller(root, sc.params.p());
    sc.traj = detail::read_trajectory(root);

    const json& sim = detail::require(root, "sim");
    sc.t_end = detail::read_number(sim, "t_end");
    sc.h = detail::read_number(sim, "step");
    if (sim.contains("max_substep")) sc.max_substep = detail::read_number(sim, "max_substep");

    const int n = sc.params.n;
    if (sim.contains("q0")) {
        sc.q0 = detail::read_vector<JointVec>(sim, "q0", 0);
    } else if (sim.contains("initial_error")) {
        const JointVec e0 = detail::read_vector<JointVec>(sim, "initial_error", 0);
        if (e0.size() != n || sc.traj.n() != n) throw ValidationError("initial_error", "dimension mismatch");
        sc.q0 = desired_trajectory(0.0, sc.traj).qd - e0;
    } else {
        throw ValidationError("q0", "one of q0 or initial_error is required");
    }
    sc.qdot0 = sim.contains("qdot0") ? detail::read_vector<JointVec>(sim, "qdot0", 0) : JointVec::Zero(n);

    const json th = sim.contains("theta_hat0") ? sim.at("theta_hat0") : json("zero");
    if (th.is_string()) {
        const std::string mode = th.get<std::string>();
        if (mode == "zero") {
            sc.theta_hat0 = ParamVec::Zero(sc.params.p());
        } else if (mode == "true") {
            sc.theta_hat0 = sc.params.theta;
        } else if (mode == "perturbed") {
            const double f = sim.contains("perturbation") ? detail::read_number(sim, "perturbation") : 0.5;
            sc.theta_hat0 = detail::perturbed_estimate(sc.params.theta, f);
        } else {
            throw ValidationError("theta_hat0", "expected zero, true, perturbed or an array");
        }
    } else {
        sc.theta_hat0 = detail::read_vector<ParamVec>(th, "theta_hat0");
    }

    sc.validate();
    return sc;
}

inline json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& err) {
        throw ParseError(path.string() + ": " + err.what());
    }
}

inline Scenario load_scenario(const std::filesystem::path& path) {
    return scenario_from_json(read_json_file(path), path.stem().string());
}

/// Optional "bounds" section; defaults to the full joint circle.
inline std::pair<StateRegion, BoundsOptions> bounds_settings(const json& root) {
    StateRegion region = StateRegion::full_circle();
    BoundsOptions opts;
    if (root.contains("bounds")) {
        const json& b = root.at("bounds");
        if (b.contains("q_min")) region.q_min = detail::read_vector<JointVec>(b, "q_min", 0);
        if (b.contains("q_max")) region.q_max = detail::read_vector<JointVec>(b, "q_max", 0);
        if (b.contains("qdot_max")) region.qdot_max = detail::read_vector<JointVec>(b, "qdot_max", 0);
        if (b.contains("samples")) opts.samples = static_cast<int>(detail::read_number(b, "samples"));
        if (b.contains("margin")) opts.margin = detail::read_number(b, "margin");
        if (b.contains("seed")) opts.seed = static_cast<std::uint64_t>(detail::read_number(b, "seed"));
    }
    return {region, opts};
}

inline RhoCalibrationOptions calibration_settings(const json& root, const Scenario& sc) {
    RhoCalibrationOptions opts;
    opts.t_end = sc.t_end;
    if (root.contains("calibration")) {
        const json& c = root.at("calibration");
        if (c.contains("samples")) opts.samples = static_cast<int>(detail::read_number(c, "samples"));
        if (c.contains("margin")) opts.margin = detail::read_number(c, "margin");
        if (c.contains("seed")) opts.seed = static_cast<std::uint64_t>(detail::read_number(c, "seed"));
        if (c.contains("t_end")) opts.t_end = detail::read_number(c, "t_end");
    }
    return opts;
}

inline json to_json(const ModelBounds& b) {
    return {{"m1", b.m1}, {"m2", b.m2}, {"zeta_m1", b.zeta_m1}, {"zeta_c1", b.zeta_c1}, {"zeta_c2", b.zeta_c2},
            {"zeta_g", b.zeta_g}};
}

inline json to_json(const RhoCoeffs& c) { return json::array({c.c1, c.c2, c.c3, c.c4}); }

}  // namespace blfarm
