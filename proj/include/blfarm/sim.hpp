#pragma once

// Closed-loop simulation: plant (q, qdot) under the adaptive controller with
// the estimator theta_hat integrated alongside, fixed-step RK4, torque
// recomputed at every stage.

#include <blfarm/controller.hpp>
#include <blfarm/dynamics.hpp>
#include <blfarm/integrator.hpp>
#include <blfarm/lyapunov.hpp>
#include <blfarm/trajectory.hpp>
#include <blfarm/types.hpp>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace blfarm {

inline constexpr double kDivergenceLimit = 1e6;

struct SimState {
    double t = 0.0;
    JointVec q;
    JointVec qdot;
    ParamVec theta_hat;
};

struct SimRate {
    JointVec qdot;
    JointVec qddot;
    ParamVec theta_hat_dot;
};

struct Scenario {
    std::string name = "scenario";
    RobotParams params;  // true plant parameters
    ControllerConfig cfg;
    SinusoidSpec traj;
    double t_end = 20.0;
    double h = 1e-3;               // logging period
    double max_substep = 2.5e-5;   // upper limit on the RK4 step inside one period
    JointVec q0;
    JointVec qdot0;
    ParamVec theta_hat0;

    /// RK4 steps per logging period: the smallest count whose step does not
    /// exceed max_substep.
    int substeps() const { return std::max(1, static_cast<int>(std::ceil(h / max_substep - 1e-9))); }

    double integration_step() const { return h / substeps(); }

    /// Number of logging periods covered by [0, t_end].
    long long step_count() const { return static_cast<long long>(std::floor(t_end / h + 1e-9)); }

    SimState initial_state() const { return {0.0, q0, qdot0, theta_hat0}; }

    /// Structural checks plus the precondition |e_i(0)| < delta_i.
    void validate() const {
        params.validate();
        traj.validate();
        const int n = params.n;
        cfg.validate(n, params.p());
        if (traj.n() != n) throw ValidationError("trajectory", "dimension mismatch");
        if (!(h > 0.0) || !std::isfinite(h)) throw ValidationError("step", "must be positive");
        if (!(t_end >= 0.0) || !std::isfinite(t_end)) throw ValidationError("t_end", "must be non-negative");
        if (!(max_substep > 0.0)) throw ValidationError("max_substep", "must be positive");
        if (q0.size() != n || !q0.allFinite()) throw ValidationError("q0");
        if (qdot0.size() != n || !qdot0.allFinite()) throw ValidationError("qdot0");
        if (theta_hat0.size() != params.p() || !theta_hat0.allFinite()) throw ValidationError("theta_hat0");
        const JointVec e0 = desired_trajectory(0.0, traj).qd - q0;
        for (int i = 0; i < n; ++i) {
            if (!(std::abs(e0(i)) < cfg.delta(i))) throw InitialConstraintError(i, e0(i), cfg.delta(i));
        }
    }
};

inline SimRate state_derivative(const SimState& s, const Scenario& sc) {
    const TrajectorySample sample = desired_trajectory(s.t, sc.traj);
    const ErrorState es = tracking_errors(sample, s.q, s.qdot, sc.cfg.alpha);
    const RegressorMat Yd = regressor(sample.qd, sample.qd_dot, sample.qd_ddot);
    const JointVec tau = control_torque(sample, s.q, s.qdot, s.theta_hat, sc.cfg);
    SimRate rate;
    rate.qdot = s.qdot;
    rate.qddot = forward_dynamics(s.q, s.qdot, tau, sc.params);
    rate.theta_hat_dot = adaptation_rate(Yd, es.r, sc.cfg.gamma);
    return rate;
}

namespace detail {

inline StateVec pack(const JointVec& a, const JointVec& b, const ParamVec& c) {
    StateVec x(a.size() + b.size() + c.size());
    x << a, b, c;
    return x;
}

inline SimState unpack(const StateVec& x, double t, int n) {
    const int p = static_cast<int>(x.size()) - 2 * n;
    return {t, x.head(n), x.segment(n, n), x.tail(p)};
}

}  // namespace detail

/// One RK4 step of size `h`. A barrier breach inside any stage surfaces as a
/// BarrierDomainError carrying the stage index and stage time.
inline SimState rk4_step(const SimState& s, const Scenario& sc, double h) {
    const int n = static_cast<int>(s.q.size());
    int stage = 0;
    auto field = [&](double t, const StateVec& x) {
        const SimRate d = state_derivative(detail::unpack(x, t, n), sc);
        return detail::pack(d.qdot, d.qddot, d.theta_hat_dot);
    };
    try {
        const StateVec next = rk4_step(detail::pack(s.q, s.qdot, s.theta_hat), s.t, h, field,
                                       [&](int i) { stage = i; });
        return detail::unpack(next, s.t + h, n);
    } catch (BarrierDomainError& err) {
        err.stage = stage;
        err.time = s.t + rk4_stage_offset(stage) * h;
        throw;
    }
}

inline SimState rk4_step(const SimState& s, const Scenario& sc) { return rk4_step(s, sc, sc.integration_step()); }

// ---------------------------------------------------------------------------
// Run log

struct LogRecord {
    double t = 0.0;
    JointVec q;
    JointVec qd;
    JointVec e;
    JointVec r;
    JointVec tau;
    ParamVec theta_hat;
    double V = 0.0;
};

enum class Outcome { completed, violation, diverged };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::completed: return "completed";
        case Outcome::violation: return "violation";
        case Outcome::diverged: return "diverged";
    }
    return "unknown";
}

struct ViolationEvent {
    double time = 0.0;
    int joint = 0;        // zero-based
    int stage = -1;       // RK4 stage, -1 when detected on an accepted state
    long long step = 0;   // logging step during which it happened
    double error = 0.0;
};

struct RunSummary {
    JointVec max_abs_e;
    double final_e_norm = 0.0;
    double max_tau_norm = 0.0;
    double max_theta_hat_norm = 0.0;
};

struct RunLog {
    BarrierKind kind = BarrierKind::log;
    double h = 0.0;
    std::vector<LogRecord> records;
    Outcome outcome = Outcome::completed;
    std::optional<ViolationEvent> violation;
    long long diverged_step = -1;
    RunSummary summary;
};

inline RunSummary summarize(const std::vector<LogRecord>& records, int n) {
    RunSummary s;
    s.max_abs_e = JointVec::Zero(n);
    for (const LogRecord& rec : records) {
        s.max_abs_e = s.max_abs_e.cwiseMax(rec.e.cwiseAbs());
        s.max_tau_norm = std::max(s.max_tau_norm, rec.tau.norm());
        s.max_theta_hat_norm = std::max(s.max_theta_hat_norm, rec.theta_hat.norm());
    }
    if (!records.empty()) s.final_e_norm = records.back().e.norm();
    return s;
}

namespace detail {

inline LogRecord make_record(const SimState& s, const Scenario& sc) {
    const TrajectorySample sample = desired_trajectory(s.t, sc.traj);
    const ErrorState es = tracking_errors(sample, s.q, s.qdot, sc.cfg.alpha);
    LogRecord rec;
    rec.t = s.t;
    rec.q = s.q;
    rec.qd = sample.qd;
    rec.e = es.e;
    rec.r = es.r;
    rec.tau = control_torque(sample, s.q, s.qdot, s.theta_hat, sc.cfg);
    rec.theta_hat = s.theta_hat;
    rec.V = lyapunov_value(sc.cfg.kind, es.r, es.e, sc.params.theta - s.theta_hat, s.q, sc.params, sc.cfg);
    return rec;
}

/// First joint with |e_i| >= delta_i, if any.
inline std::optional<int> breached_joint(const JointVec& e, const JointVec& delta) {
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        if (!(std::abs(e(i)) < delta(i))) return static_cast<int>(i);
    }
    return std::nullopt;
}

inline bool diverged(const SimState& s) {
    auto bad = [](const auto& v) { return !v.allFinite() || v.cwiseAbs().maxCoeff() > kDivergenceLimit; };
    return bad(s.q) || bad(s.qdot) || bad(s.theta_hat);
}

}  // namespace detail

/// Integrates from 0 to t_end, logging every h. The constraint |e_i| < delta_i
/// is enforced for every controller kind: a breach ends the run with a
/// violation outcome and the breaching state is never logged.
inline RunLog run(const Scenario& sc) {
    sc.validate();
    RunLog log;
    log.kind = sc.cfg.kind;
    log.h = sc.h;
    const long long steps = sc.step_count();
    log.records.reserve(static_cast<std::size_t>(steps + 1));

    const double hs = sc.integration_step();
    const int substeps = sc.substeps();
    SimState s = sc.initial_state();
    for (long long k = 0;; ++k) {
        s.t = static_cast<double>(k) * sc.h;
        const TrajectorySample sample = desired_trajectory(s.t, sc.traj);
        const JointVec e = sample.qd - s.q;
        if (auto joint = detail::breached_joint(e, sc.cfg.delta)) {
            log.outcome = Outcome::violation;
            log.violation = ViolationEvent{s.t, *joint, -1, k, e(*joint)};
            break;
        }
        log.records.push_back(detail::make_record(s, sc));
        if (k == steps) break;

        try {
            for (int j = 0; j < substeps; ++j) {
                s.t = static_cast<double>(k) * sc.h + j * hs;
                s = rk4_step(s, sc, hs);
            }
        } catch (const BarrierDomainError& err) {
            log.outcome = Outcome::violation;
            log.violation = ViolationEvent{err.time, err.joint, err.stage, k, err.error};
            break;
        } catch (const std::domain_error&) {
            // non-finite state reached the dynamics solve
            log.outcome = Outcome::diverged;
            log.diverged_step = k + 1;
            break;
        }
        if (detail::diverged(s)) {
            log.outcome = Outcome::diverged;
            log.diverged_step = k + 1;
            break;
        }
    }
    log.summary = summarize(log.records, sc.params.n);
    return log;
}

}  // namespace blfarm
