#pragma once

// Rigid-body model of a two-link revolute arm moving in the vertical plane:
//
//   M(q) qdd + C(q, qd) qd + G(q) + Fd qd = tau
//
// written in the lumped, linear-in-parameters form
//
//   theta = (p1, p2, p3, g1, g2, fd1, fd2)
//   M = [[p1 + 2 p3 c2, p2 + p3 c2], [p2 + p3 c2, p2]]
//   C = [[-p3 s2 qd2, -p3 s2 (qd1 + qd2)], [p3 s2 qd1, 0]]      (Christoffel form)
//   G = (g1 c1 + g2 c12, g2 c12)
//
// so that C satisfies both the skew-symmetry of (Mdot - 2C) and the
// switching identity C(q, v) w = C(q, w) v.

#include <blfarm/types.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

namespace blfarm {

inline constexpr int kArmJoints = 2;
inline constexpr int kArmParams = 7;

/// Link geometry and inertia for the planar arm. Lengths in m, masses in kg,
/// inertias in kg m^2 about the link centre of mass.
struct PhysicalParams {
    double l1 = 1.0;
    double l2 = 0.8;
    double lc1 = 0.5;
    double lc2 = 0.4;
    double m1 = 1.5;
    double m2 = 0.8;
    double I1 = 0.12;
    double I2 = 0.043;
    double fd1 = 0.2;
    double fd2 = 0.2;
    double gravity = 9.81;
};

/// Lumped parameter vector theta of the regressor factorization.
struct RobotParams {
    ParamVec theta;
    int n = kArmJoints;

    double p1() const { return theta(0); }
    double p2() const { return theta(1); }
    double p3() const { return theta(2); }
    double g1() const { return theta(3); }
    double g2() const { return theta(4); }
    double fd(int i) const { return theta(5 + i); }

    int p() const { return static_cast<int>(theta.size()); }

    static RobotParams from_physical(const PhysicalParams& ph) {
        RobotParams rp;
        rp.theta.resize(kArmParams);
        rp.theta << ph.m1 * ph.lc1 * ph.lc1 + ph.m2 * (ph.l1 * ph.l1 + ph.lc2 * ph.lc2) + ph.I1 + ph.I2,
            ph.m2 * ph.lc2 * ph.lc2 + ph.I2,
            ph.m2 * ph.l1 * ph.lc2,
            (ph.m1 * ph.lc1 + ph.m2 * ph.l1) * ph.gravity,
            ph.m2 * ph.lc2 * ph.gravity,
            ph.fd1,
            ph.fd2;
        return rp;
    }

    static RobotParams reference() { return from_physical(PhysicalParams{}); }

    /// Checks the positivity conditions that make M(q) positive definite for
    /// every configuration (worst case cos q2 = +-1) and Fd positive.
    void validate() const {
        require_size(theta.size(), kArmParams, "theta");
        if (!theta.allFinite()) throw ValidationError("theta", "non-finite entry");
        if (p1() <= 0.0) throw ValidationError("theta", "p1 must be positive");
        if (p2() <= 0.0) throw ValidationError("theta", "p2 must be positive");
        // det M(q) = p1 p2 - p2^2 - p3^2 cos^2 q2, smallest at cos^2 q2 = 1
        const double worst = p1() * p2() - p2() * p2() - p3() * p3();
        if (worst <= 0.0) throw ValidationError("theta", "inertia matrix not positive definite");
        if (fd(0) <= 0.0 || fd(1) <= 0.0) throw ValidationError("theta", "viscous friction must be positive");
    }
};

namespace detail {
inline void check_joint(const JointVec& v, const char* what) { require_size(v.size(), kArmJoints, what); }
}  // namespace detail

inline JointMat mass_matrix(const JointVec& q, const RobotParams& params) {
    detail::check_joint(q, "q");
    const double c2 = std::cos(q(1));
    const double off = params.p2() + params.p3() * c2;
    JointMat M(2, 2);
    M << params.p1() + 2.0 * params.p3() * c2, off, off, params.p2();
    return M;
}

/// Analytic time derivative of M along the motion; only q2 enters M.
inline JointMat mass_matrix_dot(const JointVec& q, const JointVec& qdot, const RobotParams& params) {
    detail::check_joint(q, "q");
    detail::check_joint(qdot, "qdot");
    const double d = -params.p3() * std::sin(q(1)) * qdot(1);
    JointMat Md(2, 2);
    Md << 2.0 * d, d, d, 0.0;
    return Md;
}

inline JointMat coriolis_matrix(const JointVec& q, const JointVec& qdot, const RobotParams& params) {
    detail::check_joint(q, "q");
    detail::check_joint(qdot, "qdot");
    const double h = params.p3() * std::sin(q(1));
    JointMat C(2, 2);
    C << -h * qdot(1), -h * (qdot(0) + qdot(1)), h * qdot(0), 0.0;
    return C;
}

inline JointVec gravity_vector(const JointVec& q, const RobotParams& params) {
    detail::check_joint(q, "q");
    const double c12 = std::cos(q(0) + q(1));
    JointVec G(2);
    G << params.g1() * std::cos(q(0)) + params.g2() * c12, params.g2() * c12;
    return G;
}

inline JointVec friction_torque(const JointVec& qdot, const RobotParams& params) {
    detail::check_joint(qdot, "qdot");
    JointVec F(2);
    F << params.fd(0) * qdot(0), params.fd(1) * qdot(1);
    return F;
}

/// Inverse dynamics M qdd + C qd + G + Fd qd assembled from the individual terms.
inline JointVec inverse_dynamics(const JointVec& q, const JointVec& qdot, const JointVec& qddot,
                                 const RobotParams& params) {
    detail::check_joint(qddot, "qddot");
    return mass_matrix(q, params) * qddot + coriolis_matrix(q, qdot, params) * qdot +
           gravity_vector(q, params) + friction_torque(qdot, params);
}

/// Solves M(q) qdd = tau - C qd - G - Fd qd with a Cholesky factorization.
inline JointVec forward_dynamics(const JointVec& q, const JointVec& qdot, const JointVec& tau,
                                 const RobotParams& params) {
    detail::check_joint(tau, "tau");
    if (!q.allFinite() || !qdot.allFinite() || !tau.allFinite()) {
        throw std::domain_error("forward_dynamics: non-finite input");
    }
    const JointMat M = mass_matrix(q, params);
    const JointVec rhs = tau - coriolis_matrix(q, qdot, params) * qdot - gravity_vector(q, params) -
                         friction_torque(qdot, params);
    Eigen::LLT<JointMat> llt(M);
    if (llt.info() != Eigen::Success) {
        throw std::runtime_error("forward_dynamics: inertia matrix is not positive definite");
    }
    return llt.solve(rhs);
}

/// Regression matrix Y(q, qd, qdd) with Y theta = M qdd + C qd + G + Fd qd.
/// Evaluated at the desired trajectory this is Yd.
inline RegressorMat regressor(const JointVec& q, const JointVec& qdot, const JointVec& qddot) {
    detail::check_joint(q, "q");
    detail::check_joint(qdot, "qdot");
    detail::check_joint(qddot, "qddot");
    const double c1 = std::cos(q(0));
    const double c2 = std::cos(q(1));
    const double s2 = std::sin(q(1));
    const double c12 = std::cos(q(0) + q(1));
    const double v1 = qdot(0), v2 = qdot(1);
    const double a1 = qddot(0), a2 = qddot(1);

    RegressorMat Y = RegressorMat::Zero(2, kArmParams);
    Y(0, 0) = a1;
    Y(0, 1) = a2;
    Y(0, 2) = c2 * (2.0 * a1 + a2) - s2 * (2.0 * v1 * v2 + v2 * v2);
    Y(0, 3) = c1;
    Y(0, 4) = c12;
    Y(0, 5) = v1;
    Y(1, 1) = a1 + a2;
    Y(1, 2) = c2 * a1 + s2 * v1 * v1;
    Y(1, 4) = c12;
    Y(1, 6) = v2;
    return Y;
}

// ---------------------------------------------------------------------------
// Bounding constants

/// Constants of the model bounding inequalities:
///   m1 I <= M(q) <= m2 I
///   ||M(x) - M(y)||_inf <= zeta_m1 ||x - y||
///   ||C(x, v)||_inf <= zeta_c1 ||v||
///   ||C(x, v) - C(y, v)||_inf <= zeta_c2 ||x - y||
///   ||G(x) - G(y)|| <= zeta_g ||x - y||
/// Matrix norms are induced infinity norms; vector norms Euclidean.
struct ModelBounds {
    double m1 = 0.0;
    double m2 = 0.0;
    double zeta_m1 = 0.0;
    double zeta_c1 = 0.0;
    double zeta_c2 = 0.0;
    double zeta_g = 0.0;
};

/// Box of configurations and velocities sampled by estimate_bounds.
struct StateRegion {
    JointVec q_min;
    JointVec q_max;
    JointVec qdot_max;  // |qdot_i| <= qdot_max_i

    static StateRegion full_circle(double qdot_max = 3.0) {
        StateRegion r;
        r.q_min = JointVec::Constant(kArmJoints, -M_PI);
        r.q_max = JointVec::Constant(kArmJoints, M_PI);
        r.qdot_max = JointVec::Constant(kArmJoints, qdot_max);
        return r;
    }
};

inline double induced_inf_norm(const JointMat& A) { return A.cwiseAbs().rowwise().sum().maxCoeff(); }

struct BoundsOptions {
    int samples = 20000;
    double margin = 1.2;
    std::uint64_t seed = 7;
};

/// Empirical bounding constants: eigenvalue extremes of M and maximal
/// Lipschitz-type ratios over `samples` random points (or pairs) of `region`.
/// m1 is divided by the margin, everything else multiplied by it.
inline ModelBounds estimate_bounds(const RobotParams& params, const StateRegion& region,
                                   const BoundsOptions& opts = {}) {
    if (opts.samples < 1000) throw ValidationError("samples", "at least 1000 samples required");
    if (opts.margin < 1.0) throw ValidationError("margin", "must be >= 1");
    detail::check_joint(region.q_min, "region.q_min");
    detail::check_joint(region.q_max, "region.q_max");
    detail::check_joint(region.qdot_max, "region.qdot_max");
    for (int i = 0; i < kArmJoints; ++i) {
        if (!(region.q_max(i) > region.q_min(i)) || !(region.qdot_max(i) > 0.0)) {
            throw ValidationError("region", "degenerate sampling region");
        }
    }

    std::mt19937_64 rng(opts.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto sample_q = [&] {
        JointVec q(2);
        for (int i = 0; i < 2; ++i) q(i) = region.q_min(i) + (region.q_max(i) - region.q_min(i)) * unit(rng);
        return q;
    };
    auto sample_v = [&] {
        JointVec v(2);
        for (int i = 0; i < 2; ++i) v(i) = region.qdot_max(i) * (2.0 * unit(rng) - 1.0);
        return v;
    };

    double eig_min = std::numeric_limits<double>::infinity();
    double eig_max = 0.0;
    double zm1 = 0.0, zc1 = 0.0, zc2 = 0.0, zg = 0.0;
    constexpr double kTiny = 1e-12;

    for (int s = 0; s < opts.samples; ++s) {
        const JointVec x = sample_q();
        const JointVec y = sample_q();
        const JointVec v = sample_v();

        Eigen::SelfAdjointEigenSolver<JointMat> es(mass_matrix(x, params), Eigen::EigenvaluesOnly);
        eig_min = std::min(eig_min, es.eigenvalues().minCoeff());
        eig_max = std::max(eig_max, es.eigenvalues().maxCoeff());

        const double dq = (x - y).norm();
        if (dq > kTiny) {
            zm1 = std::max(zm1, induced_inf_norm(mass_matrix(x, params) - mass_matrix(y, params)) / dq);
            zc2 = std::max(zc2, induced_inf_norm(coriolis_matrix(x, v, params) - coriolis_matrix(y, v, params)) / dq);
            zg = std::max(zg, (gravity_vector(x, params) - gravity_vector(y, params)).norm() / dq);
        }
        const double nv = v.norm();
        if (nv > kTiny) zc1 = std::max(zc1, induced_inf_norm(coriolis_matrix(x, v, params)) / nv);
    }

    ModelBounds b;
    b.m1 = eig_min / opts.margin;
    b.m2 = eig_max * opts.margin;
    b.zeta_m1 = zm1 * opts.margin;
    b.zeta_c1 = zc1 * opts.margin;
    b.zeta_c2 = zc2 * opts.margin;
    b.zeta_g = zg * opts.margin;
    return b;
}

}  // namespace blfarm
