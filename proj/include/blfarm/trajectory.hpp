#pragma once

#include <blfarm/types.hpp>

#include <cmath>

namespace blfarm {

/// Desired joint position, velocity and acceleration at time t.
struct TrajectorySample {
    double t = 0.0;
    JointVec qd;
    JointVec qd_dot;
    JointVec qd_ddot;
};

/// q_d,i(t) = offset_i + A_i sin(w_i t) (1 - exp(-lambda t))
///
/// The exponential envelope makes q_d(0) = offset and qdot_d(0) = 0 so the
/// reference starts at rest.
struct SinusoidSpec {
    JointVec amplitude;
    JointVec omega;
    double lambda = 1.0;
    JointVec offset;

    int n() const { return static_cast<int>(amplitude.size()); }

    void validate() const {
        if (!(lambda > 0.0)) throw ValidationError("trajectory.lambda", "must be positive");
        if (amplitude.size() == 0) throw ValidationError("trajectory.amplitude");
        if (omega.size() != amplitude.size()) throw ValidationError("trajectory.omega", "dimension mismatch");
        if (offset.size() != amplitude.size()) throw ValidationError("trajectory.offset", "dimension mismatch");
    }
};

inline TrajectorySample desired_trajectory(double t, const SinusoidSpec& spec) {
    if (!(spec.lambda > 0.0)) throw ValidationError("trajectory.lambda", "must be positive");
    const int n = spec.n();
    TrajectorySample s;
    s.t = t;
    s.qd.resize(n);
    s.qd_dot.resize(n);
    s.qd_ddot.resize(n);

    const double decay = std::exp(-spec.lambda * t);
    const double env = 1.0 - decay;
    const double env_dot = spec.lambda * decay;
    const double env_ddot = -spec.lambda * spec.lambda * decay;
    for (int i = 0; i < n; ++i) {
        const double a = spec.amplitude(i);
        const double w = spec.omega(i);
        const double sn = std::sin(w * t);
        const double cs = std::cos(w * t);
        s.qd(i) = spec.offset(i) + a * sn * env;
        s.qd_dot(i) = a * (w * cs * env + sn * env_dot);
        s.qd_ddot(i) = a * (-w * w * sn * env + 2.0 * w * cs * env_dot + sn * env_ddot);
    }
    return s;
}

}  // namespace blfarm
