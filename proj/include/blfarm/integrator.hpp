#pragma once

#include <utility>

namespace blfarm {

/// One classical fourth-order Runge-Kutta step of x' = f(t, x).
///
/// `State` needs `State + State` and `double * State`; plain doubles and Eigen
/// vectors both qualify. `on_stage(i)` is invoked before each stage evaluation
/// (i = 0..3) so callers can tag errors thrown from `f` with the stage.
template <typename State, typename Field, typename StageHook>
State rk4_step(const State& x, double t, double h, Field&& f, StageHook&& on_stage) {
    on_stage(0);
    const State k1 = f(t, x);
    on_stage(1);
    const State k2 = f(t + 0.5 * h, State(x + (0.5 * h) * k1));
    on_stage(2);
    const State k3 = f(t + 0.5 * h, State(x + (0.5 * h) * k2));
    on_stage(3);
    const State k4 = f(t + h, State(x + h * k3));
    return State(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

template <typename State, typename Field>
State rk4_step(const State& x, double t, double h, Field&& f) {
    return rk4_step(x, t, h, std::forward<Field>(f), [](int) {});
}

/// Fraction of the step at which stage i is evaluated.
inline constexpr double rk4_stage_offset(int stage) {
    return stage == 0 ? 0.0 : (stage == 3 ? 1.0 : 0.5);
}

}  // namespace blfarm
