#include <blfarm/integrator.hpp>
#include <blfarm/sim.hpp>

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

using namespace blfarm;

TEST(Rk4, ScalarDecayMatchesClassicalValue) {
    const double x1 = rk4_step(1.0, 0.0, 0.1, [](double, double x) { return -x; });
    EXPECT_NEAR(x1, 0.9048375, 1e-7);
    EXPECT_NEAR(x1, 1.0 - 0.1 + 0.005 - 0.1 * 0.1 * 0.1 / 6 + 0.1 * 0.1 * 0.1 * 0.1 / 24, 1e-15);
}

TEST(Rk4, ZeroFieldLeavesStateUnchanged) {
    Eigen::Vector3d x(1.0, -2.0, 3.5);
    const Eigen::Vector3d y = rk4_step(x, 0.0, 0.5, [](double, const Eigen::Vector3d&) {
        return Eigen::Vector3d::Zero().eval();
    });
    EXPECT_EQ((y - x).norm(), 0.0);
}

TEST(Rk4, StageHookPrecedesEachEvaluation) {
    std::vector<int> stages;
    std::vector<double> times;
    rk4_step(0.0, 1.0, 0.2, [&](double t, double) { times.push_back(t); return 1.0; },
             [&](int stage) { stages.push_back(stage); });
    ASSERT_EQ(stages, (std::vector<int>{0, 1, 2, 3}));
    ASSERT_EQ(times.size(), 4u);
    for (int i = 0; i < 4; ++i) EXPECT_NEAR(times[i], 1.0 + rk4_stage_offset(i) * 0.2, 1e-15);
}

TEST(StateDerivative, TrueEstimateOnReferenceTracksPerfectly) {
    Scenario sc = fixtures::load("default");
    sc.theta_hat0 = sc.params.theta;
    for (double t : {0.0, 0.7, 3.2, 11.0}) {
        const TrajectorySample d = desired_trajectory(t, sc.traj);
        const SimState s{t, d.qd, d.qd_dot, sc.params.theta};
        const SimRate rate = state_derivative(s, sc);
        EXPECT_LT((rate.qddot - d.qd_ddot).norm(), 1e-10) << "t = " << t;
        EXPECT_LT((rate.qdot - d.qd_dot).norm(), 1e-15);
        EXPECT_LT(rate.theta_hat_dot.norm(), 1e-15);
    }
}

TEST(StateDerivative, ComposesPlantControllerAndAdaptation) {
    const Scenario sc = fixtures::load("default");
    const TrajectorySample d = desired_trajectory(2.5, sc.traj);
    ParamVec th = sc.params.theta * 0.7;
    JointVec q = d.qd;
    q(0) -= 0.05;
    q(1) += 0.08;
    JointVec qdot = d.qd_dot;
    qdot(0) += 0.3;
    const SimState s{2.5, q, qdot, th};
    const SimRate rate = state_derivative(s, sc);
    const JointVec tau = control_torque(d, q, qdot, th, sc.cfg);
    EXPECT_LT((rate.qddot - forward_dynamics(q, qdot, tau, sc.params)).norm(), 1e-12);
    const ErrorState es = tracking_errors(d, q, qdot, sc.cfg.alpha);
    const RegressorMat Yd = regressor(d.qd, d.qd_dot, d.qd_ddot);
    EXPECT_LT((rate.theta_hat_dot - adaptation_rate(Yd, es.r, sc.cfg.gamma)).norm(), 1e-12);
}

TEST(Run, ZeroHorizonLogsOnlyTheInitialState) {
    Scenario sc = fixtures::load("default");
    sc.t_end = 0.0;
    const RunLog log = run(sc);
    ASSERT_EQ(log.records.size(), 1u);
    EXPECT_EQ(log.outcome, Outcome::completed);
    EXPECT_EQ(log.records[0].t, 0.0);
    EXPECT_NEAR(log.records[0].e(0), 0.15, 1e-15);
    EXPECT_NEAR(log.records[0].e(1), -0.1, 1e-15);
}

TEST(Run, RecordCountAndTimeGrid) {
    for (double t_end : {0.5, 0.0375, 1.0}) {
        Scenario sc = fixtures::load("default");
        sc.t_end = t_end;
        const RunLog log = run(sc);
        ASSERT_EQ(log.outcome, Outcome::completed);
        ASSERT_EQ(static_cast<long long>(log.records.size()),
                  static_cast<long long>(std::floor(t_end / sc.h + 1e-9)) + 1);
        for (std::size_t k = 0; k < log.records.size(); ++k) {
            ASSERT_EQ(log.records[k].t, static_cast<double>(k) * sc.h);
        }
    }
}

TEST(Run, PerfectInitialisationStaysOnReference) {
    const Scenario sc = fixtures::load("perfect_init");
    const RunLog log = run(sc);
    ASSERT_EQ(log.outcome, Outcome::completed);
    double worst = 0.0;
    for (const LogRecord& rec : log.records) worst = std::max(worst, rec.e.norm());
    EXPECT_LE(worst, 1e-6);
}

TEST(Run, IsDeterministic) {
    Scenario sc = fixtures::load("aggressive");
    sc.t_end = 0.3;
    sc.cfg.kind = BarrierKind::tan;
    const RunLog a = run(sc);
    const RunLog b = run(sc);
    ASSERT_EQ(a.records.size(), b.records.size());
    for (std::size_t k = 0; k < a.records.size(); ++k) {
        ASSERT_EQ(a.records[k].q, b.records[k].q);
        ASSERT_EQ(a.records[k].tau, b.records[k].tau);
        ASSERT_EQ(a.records[k].theta_hat, b.records[k].theta_hat);
        ASSERT_EQ(a.records[k].V, b.records[k].V);
    }
}

TEST(Run, BaselineViolationIsReportedAndNeverLogged) {
    Scenario sc = fixtures::load("aggressive");
    sc.t_end = 2.0;
    sc.cfg.kind = BarrierKind::baseline;
    const RunLog log = run(sc);
    ASSERT_EQ(log.outcome, Outcome::violation);
    ASSERT_TRUE(log.violation.has_value());
    EXPECT_GE(std::abs(log.violation->error), sc.cfg.delta(log.violation->joint));
    EXPECT_GT(log.violation->time, 0.0);
    for (const LogRecord& rec : log.records) {
        ASSERT_TRUE((rec.e.cwiseAbs().array() < sc.cfg.delta.array()).all());
    }
}

TEST(Run, BarrierBreachInsideStageCarriesStage) {
    // one coarse RK4 step per period: the intermediate stages leave the domain first
    Scenario sc = fixtures::load("aggressive");
    sc.cfg.kind = BarrierKind::log;
    sc.max_substep = 0.05;
    sc.h = 0.05;
    sc.t_end = 1.0;
    const RunLog log = run(sc);
    ASSERT_EQ(log.outcome, Outcome::violation);
    ASSERT_TRUE(log.violation.has_value());
    EXPECT_GE(log.violation->stage, 0);
    EXPECT_LE(log.violation->stage, 3);
    EXPECT_GE(std::abs(log.violation->error), sc.cfg.delta(log.violation->joint));
    EXPECT_TRUE(std::isfinite(log.violation->time));
}

TEST(Run, RejectsInitialErrorOutsideConstraint) {
    Scenario sc = fixtures::load("default");
    sc.q0(1) = desired_trajectory(0.0, sc.traj).qd(1) + 0.2;
    try {
        run(sc);
        FAIL() << "expected InitialConstraintError";
    } catch (const InitialConstraintError& err) {
        EXPECT_EQ(err.joint, 1);
    }
}
