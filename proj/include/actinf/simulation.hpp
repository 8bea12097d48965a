#pragma once

/**
 * @file
 * @brief Closed-loop sliding-horizon simulation.
 *
 * For t = 1..N: the true state advances from x_{t−1} under u_{t−1} (u_0 = 0),
 * an observation y_t is drawn, the filter absorbs (u_{t−1}, y_t), and the
 * controller picks u_t = −K_t x̂_t from a freshly computed T-step schedule.
 * Costs use the unscaled ℓ(x, u) so runs with different λ are comparable.
 */

#include "actinf/control.hpp"
#include "actinf/estimation.hpp"
#include "actinf/freenergy.hpp"
#include "actinf/random.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

namespace actinf::simulation {

struct NoControl
{};

struct LqgControl
{
  GoalPrior cost;
};

struct ActInfControl
{
  GoalPrior goal;
};

using Controller = std::variant<NoControl, LqgControl, ActInfControl>;

inline std::string controller_name(const Controller & c)
{
  return std::visit(
    [](const auto & v) -> std::string {
      using T = std::decay_t<decltype(v)>;
      if constexpr (std::is_same_v<T, NoControl>) {
        return "none";
      } else if constexpr (std::is_same_v<T, LqgControl>) {
        return "lqg";
      } else {
        return "actinf";
      }
    },
    c);
}

struct Settings
{
  Index horizon{10};
  Index steps{100};
  std::uint64_t seed{0};
  bool noise_on{true};
  Vector x0;
  /// Q, R for the per-step cost, and the goal prior used for free energy unless the controller has its own.
  GoalPrior cost;
};

struct TraceRow
{
  Index t{0};
  Vector x_true;
  Vector y;
  Vector u;
  double inst_cost{0.0};
  double cum_cost{0.0};
  double fe_past{0.0};
  double fe_future{0.0};
  double fe_total{0.0};
};

struct SimulationTrace
{
  std::string controller;
  double lambda{std::numeric_limits<double>::quiet_NaN()};
  std::uint64_t seed{0};
  std::vector<TraceRow> rows;

  double final_cum_cost() const { return rows.empty() ? 0.0 : rows.back().cum_cost; }
  /// F_N. Each F_t already accumulates the surprise of every past observation.
  double final_fe_total() const { return rows.empty() ? 0.0 : rows.back().fe_total; }

  double max_abs_u() const
  {
    double m = 0.0;
    for (const auto & r : rows) { m = std::max(m, r.u.cwiseAbs().maxCoeff()); }
    return m;
  }

  /// Norm of the first computed control.
  double first_u_norm() const { return rows.empty() ? 0.0 : rows.front().u.norm(); }
};

/// Per-step quantities exposed for numerical checks.
struct StepDiagnostics
{
  Index t{0};
  const estimation::FilterState * filter{nullptr};
  const control::GainSchedule * schedule{nullptr};
  const control::Gain * gain{nullptr};
};

using StepObserver = std::function<void(const StepDiagnostics &)>;

/// Thrown when the closed loop produces a non-finite state; carries the trace so far.
class DivergenceError : public NumericalError
{
public:
  DivergenceError(const std::string & what, SimulationTrace partial)
      : NumericalError(what), trace(std::move(partial))
  {}
  SimulationTrace trace;
};

inline SimulationTrace simulate(const LinearGaussianModel & model, const Controller & controller,
  const Settings & settings, const StepObserver & observer = {})
{
  model.validate();
  const Dims dims = model.dims();
  require(settings.steps >= 1, "steps must be >= 1");
  require(settings.horizon >= 1, "horizon must be >= 1");
  require(settings.x0.size() == dims.nx, "x0 dimension mismatch");
  require(settings.cost.Q.rows() == dims.nx && settings.cost.R.rows() == dims.nu, "cost does not conform");

  const GoalPrior fe_goal = std::holds_alternative<ActInfControl>(controller)
                            ? std::get<ActInfControl>(controller).goal
                            : settings.cost;
  const bool fe_defined = fe_goal.lambda > 0.0 && is_positive_definite(fe_goal.Q);

  const rng::CounterNormal normal(settings.seed);
  const Matrix l_w = rng::cholesky_factor(model.process_covariance());
  const Matrix l_v = rng::cholesky_factor(model.observation_covariance());

  SimulationTrace trace;
  trace.controller = controller_name(controller);
  trace.seed       = settings.seed;
  trace.lambda     = fe_goal.lambda;
  trace.rows.reserve(static_cast<std::size_t>(settings.steps));

  Vector x      = settings.x0;
  Vector u_prev = Vector::Zero(dims.nu);
  auto filter   = estimation::init(model);
  double cum    = 0.0;

  for (Index t = 1; t <= settings.steps; ++t) {
    const auto step = static_cast<std::uint64_t>(t);
    x = model.A * x + model.B * u_prev;
    if (settings.noise_on) { x += l_w * normal.standard(step, 0, dims.nx); }
    Vector y = model.C * x;
    if (settings.noise_on) { y += l_v * normal.standard(step, 1, dims.ny); }

    TraceRow row;
    row.t      = t;
    row.x_true = x;
    row.y      = y;
    if (!x.allFinite() || !y.allFinite()) {
      trace.rows.push_back(row);
      throw DivergenceError("state diverged at step " + std::to_string(t), std::move(trace));
    }

    // Singular or non-finite intermediates mean the loop has left the representable range.
    try {
      filter = estimation::step(filter, u_prev, y, model);

      control::GainSchedule schedule;
      control::Gain gain;
      if (const auto * lqg = std::get_if<LqgControl>(&controller)) {
        schedule = control::lqg_schedule(model, lqg->cost, settings.horizon);
        gain     = control::lqg_gain(schedule, filter.estimate.mean(), model, lqg->cost);
      } else if (const auto * ai = std::get_if<ActInfControl>(&controller)) {
        schedule = control::actinf_schedule(model, ai->goal, settings.horizon);
        gain     = control::actinf_gain(schedule, filter.estimate, model, ai->goal);
      } else {
        gain.u = Vector::Zero(dims.nu);
      }
      row.u = gain.u;

      row.inst_cost = settings.cost.cost(x, row.u);
      cum += row.inst_cost;
      row.cum_cost = cum;

      if (fe_defined) {
        const auto report = freenergy::step_report(filter, model, fe_goal, settings.horizon);
        row.fe_past   = report.past_part;
        row.fe_future = report.future_part;
        row.fe_total  = report.total;
      } else {
        row.fe_past   = -filter.log_evidence;
        row.fe_future = std::numeric_limits<double>::quiet_NaN();
        row.fe_total  = std::numeric_limits<double>::quiet_NaN();
      }

      if (observer) {
        observer({t, &filter, schedule.P.empty() ? nullptr : &schedule, gain.K.size() ? &gain : nullptr});
      }
    } catch (const SingularityError & e) {
      trace.rows.push_back(std::move(row));
      throw DivergenceError("numerical failure at step " + std::to_string(t) + ": " + e.what(), std::move(trace));
    } catch (const NumericalError & e) {
      trace.rows.push_back(std::move(row));
      throw DivergenceError("numerical failure at step " + std::to_string(t) + ": " + e.what(), std::move(trace));
    }

    const bool finite = row.u.allFinite() && std::isfinite(row.cum_cost);
    trace.rows.push_back(std::move(row));
    if (!finite) { throw DivergenceError("control diverged at step " + std::to_string(t), std::move(trace)); }
    u_prev = trace.rows.back().u;
  }
  return trace;
}

struct SweepRow
{
  std::string controller;
  double lambda{0.0};
  std::uint64_t seed{0};
  double final_cum_cost{0.0};
  double final_fe_total{0.0};
  double max_abs_u{0.0};
  double first_u_norm{0.0};
};

inline SweepRow summarize(const SimulationTrace & trace)
{
  return {trace.controller, trace.lambda, trace.seed, trace.final_cum_cost(), trace.final_fe_total(),
    trace.max_abs_u(), trace.first_u_norm()};
}

/// One LQG baseline row per seed followed by one row per (λ, seed).
inline std::vector<SweepRow> sweep_lambda(const LinearGaussianModel & model, const GoalPrior & goal_family,
  const std::vector<double> & lambdas, const Settings & base, const std::vector<std::uint64_t> & seeds)
{
  for (double l : lambdas) {
    if (!(l > 0.0)) { throw DimensionError("lambda must be > 0"); }
  }
  std::vector<SweepRow> rows;
  Settings settings = base;
  settings.cost     = goal_family.with_lambda(1.0);
  for (auto seed : seeds) {
    settings.seed = seed;
    rows.push_back(summarize(simulate(model, LqgControl{settings.cost}, settings)));
  }
  for (double lambda : lambdas) {
    for (auto seed : seeds) {
      settings.seed = seed;
      rows.push_back(summarize(simulate(model, ActInfControl{goal_family.with_lambda(lambda)}, settings)));
    }
  }
  return rows;
}

}  // namespace actinf::simulation
