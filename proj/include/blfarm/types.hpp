#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace blfarm {

// Upper limits for the stack-allocated vector/matrix types. The reference
// arm uses n = 2 and p = 7; the limits leave room for small extensions
// without heap traffic inside the integrator loop.
inline constexpr int kMaxJoints = 6;
inline constexpr int kMaxParams = 16;
inline constexpr int kMaxState = 2 * kMaxJoints + kMaxParams;

using JointVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxJoints, 1>;
using JointMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxJoints, kMaxJoints>;
using ParamVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxParams, 1>;
using RegressorMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, kMaxJoints, kMaxParams>;
using StateVec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, kMaxState, 1>;

class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a tracking error leaves the open barrier domain |e_i| < delta_i.
/// `stage` and `time` are filled in by the integrator when the breach happens
/// inside a Runge-Kutta stage; they stay at -1 / NaN otherwise.
class BarrierDomainError : public std::domain_error {
public:
    BarrierDomainError(int joint, double error, double delta)
        : std::domain_error("barrier domain breached at joint " + std::to_string(joint + 1) +
                            ": |e| = " + std::to_string(std::abs(error)) +
                            " >= delta = " + std::to_string(delta)),
          joint(joint), error(error), delta(delta) {}

    int joint;  // zero-based
    double error;
    double delta;
    int stage = -1;
    double time = std::numeric_limits<double>::quiet_NaN();
};

class NonPositiveBeta : public std::domain_error {
public:
    explicit NonPositiveBeta(double beta)
        : std::domain_error("beta = " + std::to_string(beta) +
                            " <= 0: damping gain kn is not high enough for this gain set"),
          beta(beta) {}
    double beta;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Names the offending field in `field`.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::string field_name, const std::string& why = "missing or invalid")
        : std::invalid_argument("invalid field '" + field_name + "': " + why),
          field(std::move(field_name)) {}
    std::string field;
};

class InitialConstraintError : public std::invalid_argument {
public:
    InitialConstraintError(int joint, double error, double delta)
        : std::invalid_argument("initial tracking error violates constraint at joint " +
                                std::to_string(joint + 1) + ": |e(0)| = " +
                                std::to_string(std::abs(error)) + " >= delta = " +
                                std::to_string(delta)),
          joint(joint) {}
    int joint;  // zero-based
};

inline void require_size(Eigen::Index actual, Eigen::Index expected, const char* what) {
    if (actual != expected) {
        throw DimensionError(std::string(what) + ": expected dimension " +
                             std::to_string(expected) + ", got " + std::to_string(actual));
    }
}

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
    return m.allFinite();
}

}  // namespace blfarm
