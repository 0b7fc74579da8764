#pragma once

// Barrier Lyapunov functions, the lumped uncertainty chi, calibration of the
// affine rho bounds on ||chi||, and the decay-rate constant beta.

#include <blfarm/controller.hpp>
#include <blfarm/dynamics.hpp>
#include <blfarm/trajectory.hpp>
#include <blfarm/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace blfarm {

namespace detail {

inline double kinetic_term(const JointVec& r, const JointVec& q, const RobotParams& params) {
    return 0.5 * r.dot(mass_matrix(q, params) * r);
}

inline double estimation_term(const ParamVec& theta_tilde, const ParamVec& gamma) {
    require_size(theta_tilde.size(), gamma.size(), "theta_tilde");
    return 0.5 * theta_tilde.cwiseAbs2().cwiseQuotient(gamma).sum();
}

}  // namespace detail

/// sum_i k_i/2 ln(delta_i^2 / (delta_i^2 - e_i^2))
inline double barrier_log(const JointVec& e, const JointVec& k, const JointVec& delta) {
    require_size(k.size(), e.size(), "k");
    detail::check_barrier_domain(e, delta);
    double v = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double d2 = delta(i) * delta(i);
        // log1p keeps precision for small e_i.
        v += 0.5 * k(i) * -std::log1p(-e(i) * e(i) / d2);
    }
    return v;
}

/// sum_i delta_i^2/pi tan(pi/2 e_i^2 / delta_i^2)
inline double barrier_tan(const JointVec& e, const JointVec& delta) {
    detail::check_barrier_domain(e, delta);
    double v = 0.0;
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double d2 = delta(i) * delta(i);
        v += d2 / M_PI * std::tan(0.5 * M_PI * e(i) * e(i) / d2);
    }
    return v;
}

/// 1/2 e^T Ke e with the constant baseline gain; defined for every e.
inline double barrier_quadratic(const JointVec& e, const JointVec& k, const JointVec& delta) {
    return 0.5 * e.dot(gain_baseline(k, delta).cwiseProduct(e));
}

inline double v_log(const JointVec& r, const JointVec& e, const ParamVec& theta_tilde, const JointVec& q,
                    const RobotParams& params, const ControllerConfig& cfg) {
    return detail::kinetic_term(r, q, params) + barrier_log(e, cfg.k, cfg.delta) +
           detail::estimation_term(theta_tilde, cfg.gamma);
}

inline double v_tan(const JointVec& r, const JointVec& e, const ParamVec& theta_tilde, const JointVec& q,
                    const RobotParams& params, const ControllerConfig& cfg) {
    return detail::kinetic_term(r, q, params) + barrier_tan(e, cfg.delta) +
           detail::estimation_term(theta_tilde, cfg.gamma);
}

/// Ordinary quadratic Lyapunov function matching the constant-gain baseline.
inline double v_quadratic(const JointVec& r, const JointVec& e, const ParamVec& theta_tilde, const JointVec& q,
                          const RobotParams& params, const ControllerConfig& cfg) {
    return detail::kinetic_term(r, q, params) + barrier_quadratic(e, cfg.k, cfg.delta) +
           detail::estimation_term(theta_tilde, cfg.gamma);
}

/// Lyapunov function paired with a controller kind.
inline double lyapunov_value(BarrierKind kind, const JointVec& r, const JointVec& e, const ParamVec& theta_tilde,
                             const JointVec& q, const RobotParams& params, const ControllerConfig& cfg) {
    switch (kind) {
        case BarrierKind::log: return v_log(r, e, theta_tilde, q, params, cfg);
        case BarrierKind::tan: return v_tan(r, e, theta_tilde, q, params, cfg);
        case BarrierKind::baseline: return v_quadratic(r, e, theta_tilde, q, params, cfg);
    }
    throw std::logic_error("unknown barrier kind");
}

/// chi = M(q)(qdd_d + alpha edot) + C(q, qdot)(qdot_d + alpha e) + G(q) + Fd qdot - Yd theta
inline JointVec chi_vector(const JointVec& q, const JointVec& qdot, const TrajectorySample& sample,
                           const ParamVec& theta, const JointVec& alpha, const RobotParams& params) {
    require_size(alpha.size(), q.size(), "alpha");
    const JointVec e = sample.qd - q;
    const JointVec edot = sample.qd_dot - qdot;
    const JointVec desired = regressor(sample.qd, sample.qd_dot, sample.qd_ddot) * theta;
    return mass_matrix(q, params) * (sample.qd_ddot + alpha.cwiseProduct(edot)) +
           coriolis_matrix(q, qdot, params) * (sample.qd_dot + alpha.cwiseProduct(e)) + gravity_vector(q, params) +
           friction_torque(qdot, params) - desired;
}

/// chi evaluated at the state implied by (e, r) along the reference:
/// q = q_d - e, qdot = qdot_d - r + alpha e.
inline JointVec chi_from_errors(const JointVec& e, const JointVec& r, const TrajectorySample& sample,
                                const JointVec& alpha, const RobotParams& params) {
    const JointVec q = sample.qd - e;
    const JointVec qdot = sample.qd_dot - r + alpha.cwiseProduct(e);
    return chi_vector(q, qdot, sample, params.theta, alpha, params);
}

// ---------------------------------------------------------------------------
// rho calibration

struct RhoCalibrationOptions {
    int samples = 20000;
    double margin = 1.2;
    std::uint64_t seed = 42;
    double t_end = 20.0;
};

namespace detail {

struct Point {
    double x;
    double y;
};

/// Smallest c + c' xbar over c, c' >= 0 subject to c + c' x_j >= y_j for every
/// point. The optimum is a supporting line of the upper hull, a flat line at
/// max y, or a ray through the origin.
inline std::pair<double, double> least_affine_upper_bound(std::vector<Point> pts, double xbar) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) {
        return a.x < b.x || (a.x == b.x && a.y < b.y);
    });
    std::vector<Point> hull;
    for (const Point& p : pts) {
        while (hull.size() >= 2) {
            const Point& a = hull[hull.size() - 2];
            const Point& b = hull.back();
            const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
            if (cross >= 0.0) {
                hull.pop_back();
            } else {
                break;
            }
        }
        hull.push_back(p);
    }

    double y_max = 0.0;
    double ray = 0.0;
    for (const Point& p : pts) {
        y_max = std::max(y_max, p.y);
        if (p.x > 0.0) ray = std::max(ray, p.y / p.x);
    }
    auto feasible = [&](double c, double s) {
        for (const Point& p : hull) {
            if (c + s * p.x < p.y * (1.0 - 1e-12) - 1e-300) return false;
        }
        return true;
    };

    std::pair<double, double> best{y_max, 0.0};
    double best_obj = y_max;
    auto consider = [&](double c, double s) {
        if (c < 0.0 || s < 0.0 || !feasible(c, s)) return;
        const double obj = c + s * xbar;
        if (obj < best_obj) {
            best_obj = obj;
            best = {c, s};
        }
    };
    if (hull.front().x > 0.0) consider(0.0, ray);
    for (std::size_t i = 1; i < hull.size(); ++i) {
        const Point& a = hull[i - 1];
        const Point& b = hull[i];
        if (b.x <= a.x) continue;
        const double s = (b.y - a.y) / (b.x - a.x);
        consider(a.y - s * a.x, s);
    }
    return best;
}

}  // namespace detail

/// Fits rho1, rho2 so that ||chi|| <= rho1 ||e|| + rho2 ||r|| over the
/// operating envelope {t in [0, t_end], |e_i| < delta_i, any r}.
///
/// For fixed (t, e), chi is affine in r: chi = chi0 + B r, with chi0 = chi(e, 0).
/// The bound ||chi0|| / ||e|| <= rho1 and ||B||_2 <= rho2 is then sufficient for
/// every r. Each is fitted with the least affine upper envelope in ||e|| over
/// the samples (objective: mean over ||e|| in [0, ||delta||]) and scaled by
/// `margin`.
inline RhoCoeffs calibrate_rho(const RobotParams& params, const JointVec& alpha, const JointVec& delta,
                               const SinusoidSpec& traj, const RhoCalibrationOptions& opts = {}) {
    if (opts.samples < 100) throw ValidationError("samples", "at least 100 samples required");
    if (opts.margin < 1.0) throw ValidationError("margin", "must be >= 1");
    if (!(opts.t_end >= 0.0)) throw ValidationError("t_end");
    const int n = static_cast<int>(delta.size());
    require_size(alpha.size(), n, "alpha");

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    std::vector<detail::Point> e_part;
    std::vector<detail::Point> r_part;
    e_part.reserve(opts.samples);
    r_part.reserve(opts.samples);

    const JointVec zero = JointVec::Zero(n);
    for (int s = 0; s < opts.samples; ++s) {
        const double t = opts.t_end * unit(rng);
        const TrajectorySample sample = desired_trajectory(t, traj);
        JointVec e(n);
        for (int i = 0; i < n; ++i) e(i) = delta(i) * (2.0 * unit(rng) - 1.0);
        const double ne = e.norm();
        if (ne < 1e-9) continue;

        const JointVec chi0 = chi_from_errors(e, zero, sample, alpha, params);
        JointMat B(n, n);
        for (int j = 0; j < n; ++j) {
            B.col(j) = chi_from_errors(e, JointVec::Unit(n, j), sample, alpha, params) - chi0;
        }
        const double b_norm = Eigen::JacobiSVD<JointMat>(B).singularValues()(0);
        e_part.push_back({ne, chi0.norm() / ne});
        r_part.push_back({ne, b_norm});
    }

    const double xbar = 0.5 * delta.norm();
    const auto [c1, c2] = detail::least_affine_upper_bound(e_part, xbar);
    const auto [c3, c4] = detail::least_affine_upper_bound(r_part, xbar);
    return {c1 * opts.margin, c2 * opts.margin, c3 * opts.margin, c4 * opts.margin};
}

// ---------------------------------------------------------------------------
// beta

/// Conservative lower bound of lambda_min{Ke alpha} over the barrier domain.
///   log:      min{k_i alpha_i} / max{delta_i^2}
///   tan:      min{alpha_i}
///   baseline: min{k_i alpha_i / delta_i^2} (Ke is constant)
inline double conservative_ke_alpha(const ControllerConfig& cfg) {
    switch (cfg.kind) {
        case BarrierKind::log:
            return cfg.k.cwiseProduct(cfg.alpha).minCoeff() / cfg.delta.cwiseAbs2().maxCoeff();
        case BarrierKind::tan: return cfg.alpha.minCoeff();
        case BarrierKind::baseline:
            return gain_baseline(cfg.k, cfg.delta).cwiseProduct(cfg.alpha).minCoeff();
    }
    throw std::logic_error("unknown barrier kind");
}

/// beta = min{lambda_min(Kr), lambda_min(Ke alpha) - 1/(4 kn)}.
/// Throws NonPositiveBeta when kn is too small for the gain set.
inline double beta_estimate(const ControllerConfig& cfg) {
    if (!(cfg.kn > 0.0)) throw ValidationError("kn");
    const double beta = std::min(cfg.kr.minCoeff(), conservative_ke_alpha(cfg) - 1.0 / (4.0 * cfg.kn));
    if (!(beta > 0.0)) throw NonPositiveBeta(beta);
    return beta;
}

}  // namespace blfarm
