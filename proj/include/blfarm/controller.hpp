#pragma once

// Desired-compensation adaptive controller with an error-dependent position
// gain:
//
//   e     = q_d - q
//   r     = edot + alpha e
//   tau   = Yd theta_hat + Kr r + Ke(e) e + vR
//   vR    = (kn rho1^2 + rho2) r
//   d/dt theta_hat = Gamma Yd^T r
//
// Ke(e) is one of two barrier gains (log, tan) or the constant e = 0 value of
// the log gain for the baseline comparison.

#include <blfarm/dynamics.hpp>
#include <blfarm/trajectory.hpp>
#include <blfarm/types.hpp>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace blfarm {

enum class BarrierKind { log, tan, baseline };

inline std::string_view to_string(BarrierKind kind) {
    switch (kind) {
        case BarrierKind::log: return "log";
        case BarrierKind::tan: return "tan";
        case BarrierKind::baseline: return "baseline";
    }
    return "unknown";
}

inline std::optional<BarrierKind> parse_barrier_kind(std::string_view s) {
    if (s == "log") return BarrierKind::log;
    if (s == "tan") return BarrierKind::tan;
    if (s == "baseline" || s == "constant-baseline" || s == "constant") return BarrierKind::baseline;
    return std::nullopt;
}

/// Coefficients of the affine uncertainty bounds
///   rho1(||e||) = c1 + c2 ||e||,   rho2(||e||) = c3 + c4 ||e||.
struct RhoCoeffs {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
    double c4 = 0.0;
};

struct ControllerConfig {
    JointVec alpha;
    JointVec kr;
    BarrierKind kind = BarrierKind::log;
    JointVec k;
    JointVec delta;
    double kn = 1.0;
    ParamVec gamma;
    RhoCoeffs rho;

    int n() const { return static_cast<int>(alpha.size()); }

    void validate(int n, int p) const {
        auto positive = [](const auto& v) { return v.size() > 0 && (v.array() > 0.0).all() && v.allFinite(); };
        if (alpha.size() != n || !positive(alpha)) throw ValidationError("alpha");
        if (kr.size() != n || !positive(kr)) throw ValidationError("kr");
        if (k.size() != n || !positive(k)) throw ValidationError("k");
        if (delta.size() != n || !positive(delta)) throw ValidationError("delta");
        if (!(kn > 0.0) || !std::isfinite(kn)) throw ValidationError("kn");
        if (gamma.size() != p || !positive(gamma)) throw ValidationError("gamma");
        for (double c : {rho.c1, rho.c2, rho.c3, rho.c4}) {
            if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("rho_coeffs", "coefficients must be >= 0");
        }
    }
};

struct ErrorState {
    JointVec e;
    JointVec r;
};

inline ErrorState tracking_errors(const TrajectorySample& sample, const JointVec& q, const JointVec& qdot,
                                  const JointVec& alpha) {
    require_size(q.size(), sample.qd.size(), "q");
    require_size(qdot.size(), sample.qd.size(), "qdot");
    require_size(alpha.size(), sample.qd.size(), "alpha");
    ErrorState es;
    es.e = sample.qd - q;
    es.r = (sample.qd_dot - qdot) + alpha.cwiseProduct(es.e);
    return es;
}

namespace detail {
inline void check_barrier_domain(const JointVec& e, const JointVec& delta) {
    require_size(delta.size(), e.size(), "delta");
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        // The negated comparison also rejects NaN.
        if (!(std::abs(e(i)) < delta(i))) throw BarrierDomainError(static_cast<int>(i), e(i), delta(i));
    }
}
}  // namespace detail

/// Diagonal of Ke = diag{k_i / (delta_i^2 - e_i^2)}.
inline JointVec gain_log(const JointVec& e, const JointVec& k, const JointVec& delta) {
    require_size(k.size(), e.size(), "k");
    detail::check_barrier_domain(e, delta);
    return k.array() / (delta.array().square() - e.array().square());
}

/// Diagonal of Ke = diag{1 + tan^2(pi/2 * e_i^2 / delta_i^2)}.
inline JointVec gain_tan(const JointVec& e, const JointVec& delta) {
    detail::check_barrier_domain(e, delta);
    JointVec g(e.size());
    for (Eigen::Index i = 0; i < e.size(); ++i) {
        const double t = std::tan(0.5 * M_PI * e(i) * e(i) / (delta(i) * delta(i)));
        g(i) = 1.0 + t * t;
    }
    return g;
}

/// Constant baseline gain k_i / delta_i^2, the e = 0 value of gain_log.
inline JointVec gain_baseline(const JointVec& k, const JointVec& delta) {
    require_size(k.size(), delta.size(), "k");
    return k.array() / delta.array().square();
}

inline JointVec barrier_gain(const JointVec& e, const ControllerConfig& cfg) {
    switch (cfg.kind) {
        case BarrierKind::log: return gain_log(e, cfg.k, cfg.delta);
        case BarrierKind::tan: return gain_tan(e, cfg.delta);
        case BarrierKind::baseline: return gain_baseline(cfg.k, cfg.delta);
    }
    throw std::logic_error("unknown barrier kind");
}

struct RhoValues {
    double rho1 = 0.0;
    double rho2 = 0.0;
};

inline RhoValues rho_bounds(const JointVec& e, const RhoCoeffs& c) {
    const double ne = e.norm();
    return {c.c1 + c.c2 * ne, c.c3 + c.c4 * ne};
}

inline JointVec robust_term(const JointVec& r, double kn, const RhoValues& rho) {
    return (kn * rho.rho1 * rho.rho1 + rho.rho2) * r;
}

/// The four additive pieces of the control torque, exposed so callers can
/// log or recompose them.
struct TorqueTerms {
    JointVec feedforward;  // Yd theta_hat
    JointVec damping;      // Kr r
    JointVec position;     // Ke(e) e
    JointVec robust;       // vR

    JointVec total() const { return feedforward + damping + position + robust; }
};

inline TorqueTerms control_terms(const TrajectorySample& sample, const JointVec& q, const JointVec& qdot,
                                 const ParamVec& theta_hat, const ControllerConfig& cfg) {
    const ErrorState es = tracking_errors(sample, q, qdot, cfg.alpha);
    const RegressorMat Yd = regressor(sample.qd, sample.qd_dot, sample.qd_ddot);
    require_size(theta_hat.size(), Yd.cols(), "theta_hat");
    TorqueTerms terms;
    terms.position = barrier_gain(es.e, cfg).cwiseProduct(es.e);
    terms.feedforward = Yd * theta_hat;
    terms.damping = cfg.kr.cwiseProduct(es.r);
    terms.robust = robust_term(es.r, cfg.kn, rho_bounds(es.e, cfg.rho));
    return terms;
}

inline JointVec control_torque(const TrajectorySample& sample, const JointVec& q, const JointVec& qdot,
                               const ParamVec& theta_hat, const ControllerConfig& cfg) {
    return control_terms(sample, q, qdot, theta_hat, cfg).total();
}

/// Gradient update Gamma Yd^T r.
inline ParamVec adaptation_rate(const RegressorMat& Yd, const JointVec& r, const ParamVec& gamma) {
    require_size(r.size(), Yd.rows(), "r");
    require_size(gamma.size(), Yd.cols(), "gamma");
    return gamma.cwiseProduct(Yd.transpose() * r);
}

/// Gains used when a scenario file leaves the controller section partially
/// empty.
inline ControllerConfig default_controller_config() {
    ControllerConfig cfg;
    cfg.alpha = JointVec::Constant(2, 2.0);
    cfg.kr = JointVec::Constant(2, 5.0);
    cfg.k = JointVec::Constant(2, 2.0);
    cfg.delta = JointVec::Constant(2, 0.2);
    cfg.kn = 5.0;
    cfg.gamma = ParamVec::Constant(kArmParams, 10.0);
    return cfg;
}

}  // namespace blfarm
