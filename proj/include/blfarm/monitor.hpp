#pragma once

// Post-run check of the Lyapunov decrease along a logged trajectory.

#include <blfarm/lyapunov.hpp>
#include <blfarm/sim.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace blfarm {

struct LyapunovRecord {
    double t = 0.0;
    double V = 0.0;
    double Vdot_numeric = 0.0;  // (V_{k+1} - V_k) / h; zero on the last record
    double x_norm_sq = 0.0;     // ||r||^2 + ||e||^2
};

struct MonitorOptions {
    double tol_drift = 1e-6;
    double tol_rate = 1e-3;
    double rate_fraction = 0.99;
};

struct MonitorVerdict {
    bool pass = false;
    bool decrease_ok = false;
    bool rate_checked = false;  // false when beta could not be formed
    bool rate_ok = false;
    std::optional<double> beta;
    double scale = 1.0;               // max(1, V(0))
    long long decrease_failures = 0;  // steps with V_{k+1} > V_k + tol_drift * scale
    long long rate_failures = 0;      // steps violating the discrete rate inequality
    long long steps = 0;
    double rate_satisfied_fraction = 0.0;
    double max_increase = 0.0;
    std::string note;
};

struct MonitorResult {
    std::vector<LyapunovRecord> series;
    MonitorVerdict verdict;
};

/// Recomputes V for `kind` at every logged state with theta_tilde = theta - theta_hat,
/// then checks
///   V_{k+1} <= V_k + tol_drift * max(1, V_0)                        for every k
///   (V_{k+1} - V_k)/h <= -beta ||x_k||^2 + tol_rate * max(1, V_0)    for >= 99% of k
/// If beta_estimate rejects the gains, only the first check is applied.
inline MonitorResult monitor_run(const RunLog& log, const Scenario& sc, BarrierKind kind,
                                 const MonitorOptions& opts = {}) {
    MonitorResult out;
    MonitorVerdict& v = out.verdict;
    out.series.reserve(log.records.size());

    ControllerConfig cfg = sc.cfg;
    cfg.kind = kind;
    for (const LogRecord& rec : log.records) {
        LyapunovRecord lr;
        lr.t = rec.t;
        lr.V = lyapunov_value(kind, rec.r, rec.e, sc.params.theta - rec.theta_hat, rec.q, sc.params, cfg);
        lr.x_norm_sq = rec.r.squaredNorm() + rec.e.squaredNorm();
        out.series.push_back(lr);
    }

    try {
        v.beta = beta_estimate(cfg);
    } catch (const NonPositiveBeta& err) {
        v.note = std::string("rate check skipped: ") + err.what();
    }

    if (log.outcome != Outcome::completed) {
        v.note = "run did not complete (" + std::string(to_string(log.outcome)) + ")";
        return out;
    }
    if (out.series.empty()) return out;

    v.scale = std::max(1.0, out.series.front().V);
    const double h = log.h;
    const std::size_t n = out.series.size();
    v.steps = static_cast<long long>(n) - 1;
    for (std::size_t k = 0; k + 1 < n; ++k) {
        LyapunovRecord& cur = out.series[k];
        const double dV = out.series[k + 1].V - cur.V;
        cur.Vdot_numeric = dV / h;
        v.max_increase = std::max(v.max_increase, dV);
        if (dV > opts.tol_drift * v.scale) ++v.decrease_failures;
        if (v.beta && cur.Vdot_numeric > -*v.beta * cur.x_norm_sq + opts.tol_rate * v.scale) ++v.rate_failures;
    }

    v.decrease_ok = v.decrease_failures == 0;
    v.rate_checked = v.beta.has_value();
    if (v.rate_checked) {
        v.rate_satisfied_fraction =
            v.steps == 0 ? 1.0 : 1.0 - static_cast<double>(v.rate_failures) / static_cast<double>(v.steps);
        v.rate_ok = v.rate_satisfied_fraction >= opts.rate_fraction;
    }
    v.pass = v.decrease_ok && (!v.rate_checked || v.rate_ok);
    if (v.note.empty()) {
        v.note = "rate inequality required on >= " + std::to_string(opts.rate_fraction * 100.0).substr(0, 4) +
                 "% of steps";
    }
    return out;
}

}  // namespace blfarm
