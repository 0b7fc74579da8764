#include <blfarm/controller.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace blfarm;

namespace {

JointVec vec2(double a, double b) {
    JointVec v(2);
    v << a, b;
    return v;
}

TrajectorySample sample_at(const JointVec& qd, const JointVec& qd_dot, const JointVec& qd_ddot) {
    TrajectorySample s;
    s.qd = qd;
    s.qd_dot = qd_dot;
    s.qd_ddot = qd_ddot;
    return s;
}

ControllerConfig config_with_rho() {
    ControllerConfig cfg = default_controller_config();
    cfg.rho = {22.169356378045876, 8.082409613414832, 5.112277715802959, 0.14029340190554207};
    return cfg;
}

}  // namespace

TEST(TrackingErrors, PerfectTrackingGivesZero) {
    const TrajectorySample s = sample_at(vec2(0.3, -0.2), vec2(1.0, 0.5), vec2(0, 0));
    const ErrorState es = tracking_errors(s, s.qd, s.qd_dot, vec2(2, 2));
    EXPECT_EQ(es.e.norm(), 0.0);
    EXPECT_EQ(es.r.norm(), 0.0);
}

TEST(TrackingErrors, FilteredErrorValue) {
    // e = 0.1, edot = 0.05, alpha = 1 -> r = 0.15
    const TrajectorySample s = sample_at(vec2(0.1, 0.0), vec2(0.05, 0.0), vec2(0, 0));
    const ErrorState es = tracking_errors(s, vec2(0, 0), vec2(0, 0), vec2(1, 1));
    EXPECT_DOUBLE_EQ(es.e(0), 0.1);
    EXPECT_NEAR(es.r(0), 0.15, 1e-16);
}

TEST(TrackingErrors, AlphaScalesOnlyTheProportionalPart) {
    const TrajectorySample s = sample_at(vec2(0.1, -0.2), vec2(0.3, 0.4), vec2(0, 0));
    const JointVec q = vec2(0.05, 0.1), qd = vec2(0.2, 0.1);
    const ErrorState a = tracking_errors(s, q, qd, vec2(1.5, 0.5));
    const ErrorState b = tracking_errors(s, q, qd, vec2(3.0, 1.0));
    EXPECT_EQ(a.e, b.e);
    const JointVec edot = s.qd_dot - qd;
    EXPECT_LT(((b.r - edot) - 2.0 * (a.r - edot)).norm(), 1e-15);
}

TEST(GainLog, Values) {
    const JointVec k = vec2(2, 2), d = vec2(0.5, 0.5);
    EXPECT_DOUBLE_EQ(gain_log(vec2(0, 0), k, d)(0), 8.0);
    EXPECT_NEAR(gain_log(vec2(0.3, 0), k, d)(0), 12.5, 1e-12);
}

TEST(GainLog, BoundaryRaisesBarrierDomainError) {
    const JointVec k = vec2(2, 2), d = vec2(0.5, 0.5);
    try {
        gain_log(vec2(0.0, -0.5), k, d);
        FAIL() << "expected BarrierDomainError";
    } catch (const BarrierDomainError& err) {
        EXPECT_EQ(err.joint, 1);
        EXPECT_DOUBLE_EQ(err.delta, 0.5);
    }
    EXPECT_THROW(gain_log(vec2(0.7, 0.0), k, d), BarrierDomainError);
    EXPECT_THROW(gain_log(vec2(NAN, 0.0), k, d), BarrierDomainError);
}

TEST(GainTan, Values) {
    const JointVec d = vec2(0.5, 0.3);
    EXPECT_EQ(gain_tan(vec2(0, 0), d), JointVec::Ones(2));
    // e^2 = delta^2 / 2 -> 1 + tan^2(pi/4) = 2
    const JointVec g = gain_tan(vec2(0.5 / std::sqrt(2.0), -0.3 / std::sqrt(2.0)), d);
    EXPECT_NEAR(g(0), 2.0, 1e-12);
    EXPECT_NEAR(g(1), 2.0, 1e-12);
    EXPECT_THROW(gain_tan(vec2(0.5, 0), d), BarrierDomainError);
}

TEST(BarrierGains, EvenLowerBoundedAndStrictlyMonotone) {
    const JointVec k = vec2(2.0, 3.0), d = vec2(0.2, 0.35);
    for (int j = 0; j < 2; ++j) {
        double prev_log = 0.0, prev_tan = 0.0;
        for (int i = 0; i < 100; ++i) {
            JointVec e = JointVec::Zero(2);
            e(j) = d(j) * i / 100.0;
            const JointVec gl = gain_log(e, k, d);
            const JointVec gt = gain_tan(e, d);
            ASSERT_EQ(gl, gain_log(JointVec(-e), k, d));
            ASSERT_EQ(gt, gain_tan(JointVec(-e), d));
            ASSERT_GE(gl(j), k(j) / (d(j) * d(j)));
            ASSERT_GE(gt(j), 1.0);
            if (i > 0) {
                ASSERT_GT(gl(j), prev_log);
                ASSERT_GT(gt(j), prev_tan);
            }
            prev_log = gl(j);
            prev_tan = gt(j);
        }
    }
}

TEST(GainTan, DivergesTowardsBoundary) {
    const JointVec d = vec2(0.2, 0.2);
    double prev = 0.0;
    for (double frac : {0.9, 0.99, 0.999, 0.9999, 0.99999}) {
        const double g = gain_tan(vec2(frac * 0.2, 0), d)(0);
        ASSERT_GT(g, prev);
        prev = g;
    }
    EXPECT_GT(prev, 1e8);
}

TEST(RhoBounds, AffineInErrorNorm) {
    const RhoCoeffs c{1.0, 2.0, 3.0, 4.0};
    const RhoValues zero = rho_bounds(vec2(0, 0), c);
    EXPECT_EQ(zero.rho1, 1.0);
    EXPECT_EQ(zero.rho2, 3.0);

    const RhoValues flat = rho_bounds(vec2(0.3, 0.4), RhoCoeffs{1.0, 0.0, 3.0, 0.0});
    EXPECT_EQ(flat.rho1, 1.0);
    EXPECT_EQ(flat.rho2, 3.0);

    // default scenario coefficients at ||e|| = 0.2
    const RhoCoeffs dc = config_with_rho().rho;
    const RhoValues v = rho_bounds(vec2(0.12, 0.16), dc);
    EXPECT_NEAR(v.rho1, dc.c1 + 0.2 * dc.c2, 1e-12);
    EXPECT_NEAR(v.rho2, dc.c3 + 0.2 * dc.c4, 1e-12);
}

TEST(RhoBounds, NonDecreasingInErrorNorm) {
    const RhoCoeffs c = config_with_rho().rho;
    double p1 = -1, p2 = -1;
    for (int i = 0; i <= 100; ++i) {
        const RhoValues v = rho_bounds(vec2(0.002 * i, 0.0), c);
        ASSERT_GE(v.rho1, p1);
        ASSERT_GE(v.rho2, p2);
        ASSERT_GE(v.rho2, 0.0);
        p1 = v.rho1;
        p2 = v.rho2;
    }
}

TEST(RobustTerm, Values) {
    EXPECT_EQ(robust_term(vec2(0, 0), 3.0, {2.0, 1.0}).norm(), 0.0);
    EXPECT_EQ(robust_term(vec2(1, -2), 3.0, {0.0, 0.0}).norm(), 0.0);
    const JointVec v = robust_term(vec2(1, 0), 1.0, {2.0, 1.0});
    EXPECT_DOUBLE_EQ(v(0), 5.0);
    EXPECT_DOUBLE_EQ(v(1), 0.0);
}

TEST(DampingInequality, CompletionOfSquaresHolds) {
    // rho1 |e| |r| - kn rho1^2 |r|^2 <= |e|^2 / (4 kn)
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 10000; ++i) {
        const double rho1 = 50.0 * u(rng);
        const double ne = 2.0 * u(rng);
        const double nr = 10.0 * u(rng);
        const double kn = 1e-3 + 20.0 * u(rng);
        ASSERT_LE(rho1 * ne * nr - kn * rho1 * rho1 * nr * nr, ne * ne / (4.0 * kn) + 1e-12);
    }
}

TEST(ControlTorque, FeedforwardOnlyAtZeroError) {
    ControllerConfig cfg = config_with_rho();
    const TrajectorySample s = sample_at(vec2(0.2, -0.1), vec2(0.4, 0.3), vec2(-1.0, 0.5));
    ParamVec th(kArmParams);
    th << 1, 2, 3, 4, 5, 6, 7;
    for (BarrierKind kind : {BarrierKind::log, BarrierKind::tan, BarrierKind::baseline}) {
        cfg.kind = kind;
        const JointVec tau = control_torque(s, s.qd, s.qd_dot, th, cfg);
        EXPECT_LT((tau - regressor(s.qd, s.qd_dot, s.qd_ddot) * th).norm(), 1e-14);
        EXPECT_EQ(control_torque(s, s.qd, s.qd_dot, ParamVec::Zero(kArmParams), cfg).norm(), 0.0);
    }
}

TEST(ControlTorque, EqualsSumOfIndependentlyComputedTerms) {
    ControllerConfig cfg = config_with_rho();
    const TrajectorySample s = sample_at(vec2(0.4, 0.2), vec2(0.5, -0.6), vec2(0.7, 0.1));
    const JointVec q = vec2(0.33, 0.31), qd = vec2(0.1, -0.2);
    ParamVec th(kArmParams);
    th << 1.2, 0.1, 0.4, 14.0, 3.0, 0.3, 0.1;
    for (BarrierKind kind : {BarrierKind::log, BarrierKind::tan, BarrierKind::baseline}) {
        cfg.kind = kind;
        const JointVec e = s.qd - q;
        const JointVec r = (s.qd_dot - qd) + cfg.alpha.cwiseProduct(e);
        JointVec ke;
        switch (kind) {
            case BarrierKind::log: ke = gain_log(e, cfg.k, cfg.delta); break;
            case BarrierKind::tan: ke = gain_tan(e, cfg.delta); break;
            case BarrierKind::baseline: ke = gain_baseline(cfg.k, cfg.delta); break;
        }
        const JointVec expected = regressor(s.qd, s.qd_dot, s.qd_ddot) * th + cfg.kr.cwiseProduct(r) +
                                  ke.cwiseProduct(e) + robust_term(r, cfg.kn, rho_bounds(e, cfg.rho));
        EXPECT_LT((control_torque(s, q, qd, th, cfg) - expected).norm(), 1e-12) << to_string(kind);
    }
}

TEST(ControlTorque, BaselineUsesZeroErrorLogGain) {
    const ControllerConfig cfg = config_with_rho();
    EXPECT_EQ(gain_baseline(cfg.k, cfg.delta), gain_log(vec2(0, 0), cfg.k, cfg.delta));
}

TEST(ControlTorque, PropagatesBarrierDomainError) {
    ControllerConfig cfg = config_with_rho();
    const TrajectorySample s = sample_at(vec2(0.0, 0.0), vec2(0, 0), vec2(0, 0));
    const JointVec q = vec2(-0.25, 0.0);  // e1 = 0.25 > delta
    cfg.kind = BarrierKind::log;
    EXPECT_THROW(control_torque(s, q, vec2(0, 0), ParamVec::Zero(7), cfg), BarrierDomainError);
    cfg.kind = BarrierKind::tan;
    EXPECT_THROW(control_torque(s, q, vec2(0, 0), ParamVec::Zero(7), cfg), BarrierDomainError);
    cfg.kind = BarrierKind::baseline;
    EXPECT_NO_THROW(control_torque(s, q, vec2(0, 0), ParamVec::Zero(7), cfg));
}

TEST(AdaptationRate, ZeroFilteredErrorGivesNoAdaptation) {
    const RegressorMat Y = regressor(vec2(0.1, 0.2), vec2(0.3, 0.4), vec2(0.5, 0.6));
    EXPECT_EQ(adaptation_rate(Y, vec2(0, 0), ParamVec::Constant(7, 10.0)).norm(), 0.0);
}

TEST(AdaptationRate, IdentityRegressorReturnsR) {
    RegressorMat Y = RegressorMat::Identity(2, 2);
    const ParamVec rate = adaptation_rate(Y, vec2(0.3, -0.7), ParamVec::Ones(2));
    EXPECT_EQ(rate(0), 0.3);
    EXPECT_EQ(rate(1), -0.7);
}

TEST(AdaptationRate, MatchesExplicitLoops) {
    const RegressorMat Y = regressor(vec2(0.4, -1.2), vec2(0.8, 0.3), vec2(-0.2, 1.1));
    const JointVec r = vec2(0.05, -0.12);
    ParamVec g(7);
    g << 10, 5, 1, 0.5, 3, 7, 2;
    const ParamVec rate = adaptation_rate(Y, r, g);
    for (int j = 0; j < 7; ++j) {
        double acc = 0.0;
        for (int i = 0; i < 2; ++i) acc += Y(i, j) * r(i);
        EXPECT_NEAR(rate(j), g(j) * acc, 1e-15);
    }
}

TEST(AdaptationRate, DimensionMismatchThrows) {
    const RegressorMat Y = regressor(vec2(0, 0), vec2(0, 0), vec2(0, 0));
    EXPECT_THROW(adaptation_rate(Y, vec2(0, 0), ParamVec::Ones(6)), DimensionError);
}

TEST(ControllerConfig, ValidationNamesTheField) {
    ControllerConfig cfg = config_with_rho();
    cfg.kn = 0.0;
    try {
        cfg.validate(2, 7);
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.field, "kn");
    }
    cfg = config_with_rho();
    cfg.delta(1) = -0.1;
    EXPECT_THROW(cfg.validate(2, 7), ValidationError);
}
