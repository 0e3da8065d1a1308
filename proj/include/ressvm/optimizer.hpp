#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ressvm/curvature.hpp"
#include "ressvm/dataset.hpp"
#include "ressvm/losses.hpp"
#include "ressvm/rng.hpp"
#include "ressvm/types.hpp"

namespace ressvm {

// Step size sequence. Decaying: eps_t = eps0 * tau / (tau + t), which is
// non-summable but square-summable. Constant: eps_t = eps.
struct StepSchedule {
  enum class Kind { decaying, constant };

  Kind kind = Kind::decaying;
  double eps0 = 3e-2;
  double tau = 100.0;
  double eps = 1e-1;

  static StepSchedule decaying(double eps0, double tau) {
    StepSchedule s;
    s.kind = Kind::decaying;
    s.eps0 = eps0;
    s.tau = tau;
    return s;
  }

  static StepSchedule constant(double eps) {
    StepSchedule s;
    s.kind = Kind::constant;
    s.eps = eps;
    return s;
  }

  void validate() const {
    if (kind == Kind::decaying) {
      if (!(eps0 > 0.0) || !(tau > 0.0))
        throw std::invalid_argument("StepSchedule: eps0 and tau must be positive");
    } else if (!(eps > 0.0)) {
      throw std::invalid_argument("StepSchedule: eps must be positive");
    }
  }

  double at(std::size_t t) const {
    if (kind == Kind::constant) return eps;
    return eps0 * tau / (tau + static_cast<double>(t));
  }
};

enum class Method { res, sgd, res_unregularized };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::res: return "res";
    case Method::sgd: return "sgd";
    default: return "res_unregularized";
  }
}

inline Method method_from_string(std::string_view s) {
  if (s == "res") return Method::res;
  if (s == "sgd") return Method::sgd;
  if (s == "res_unregularized") return Method::res_unregularized;
  throw std::invalid_argument("unknown method: " + std::string(s));
}

// All scalars of the RES iteration. Defaults are the reference experiment
// parameters: lambda=1e-3, delta=1e-3, Gamma=1e-4, L=5, eps0=3e-2, tau=100.
struct ResConfig {
  double lambda = 1e-3;
  double delta = 1e-3;
  double gamma = 1e-4;
  std::size_t batch_size = 5;
  StepSchedule schedule = StepSchedule::decaying(3e-2, 100.0);
  std::size_t max_iters = 500;
  std::uint64_t seed = 0;
  LossKind loss = LossKind::squared_hinge;

  // delta = 0 together with gamma = 0 selects the non-regularized stochastic
  // BFGS mode (skip guard drops to the absolute 1e-14 threshold).
  bool unregularized_mode() const { return delta == 0.0 && gamma == 0.0; }

  void validate() const {
    if (lambda < 0.0 || !std::isfinite(lambda))
      throw std::invalid_argument("ResConfig: lambda must be >= 0");
    if (delta < 0.0 || !std::isfinite(delta))
      throw std::invalid_argument("ResConfig: delta must be >= 0");
    if (gamma < 0.0 || !std::isfinite(gamma))
      throw std::invalid_argument("ResConfig: gamma must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("ResConfig: batch_size must be >= 1");
    schedule.validate();
  }

  Objective objective() const { return Objective{loss, lambda}; }
};

struct OptimizerState {
  Vector w;
  HessianApprox H;
  std::size_t t = 0;
  Rng rng;
  std::size_t skip_count = 0;
  std::optional<UpdateOutcome> last_update;  // most recent curvature outcome
};

// w0 = 0 (makes F(w0) = 1 for the squared hinge on any data set).
inline OptimizerState make_initial_state(const ResConfig& cfg, Eigen::Index n) {
  cfg.validate();
  return OptimizerState{Vector::Zero(n),
                        HessianApprox::init(n, cfg.delta, cfg.unregularized_mode()),
                        0,
                        Rng(cfg.seed),
                        0,
                        std::nullopt};
}

namespace detail {

// batch_size == N means the exact full-batch gradient: the batch is the whole
// set in order and the rng is not consumed. Anything smaller (or larger) is
// i.i.d. uniform sampling with replacement.
inline std::vector<Sample> draw_batch(const TrainingSet& set, std::size_t batch_size, Rng& rng) {
  if (batch_size == set.size()) return set.samples();
  return sample_minibatch(set, batch_size, rng);
}

inline void check_iterate(const Vector& w, std::size_t t, double eps) {
  if (!w.allFinite())
    throw NumericalFault("non-finite iterate at iteration " + std::to_string(t) +
                         " (step size " + std::to_string(eps) + ")");
}

}  // namespace detail

// One RES iteration: draw a minibatch, descend along (B^-1 + Gamma*I) s_t,
// re-evaluate the stochastic gradient at the new iterate on the same
// minibatch, and feed the variation pair to the curvature update.
inline void res_step(OptimizerState& state, const ResConfig& cfg, const TrainingSet& set) {
  const std::vector<Sample> batch = detail::draw_batch(set, cfg.batch_size, state.rng);
  const Objective obj = cfg.objective();
  const Vector s_t = instantaneous_gradient(obj, batch, state.w);
  const double eps = cfg.schedule.at(state.t);
  const Vector w_next = state.w - eps * state.H.descent_direction(cfg.gamma, s_t);
  detail::check_iterate(w_next, state.t, eps);
  const Vector s_next = instantaneous_gradient(obj, batch, w_next);

  state.last_update = state.H.update(w_next - state.w, s_next - s_t);
  if (state.last_update->status == UpdateStatus::skipped) ++state.skip_count;
  state.w = w_next;
  ++state.t;
}

// Plain stochastic gradient step: w <- w - eps_t * s_t. No curvature machinery.
inline void sgd_step(OptimizerState& state, const ResConfig& cfg, const TrainingSet& set) {
  const std::vector<Sample> batch = detail::draw_batch(set, cfg.batch_size, state.rng);
  const Vector s_t = instantaneous_gradient(cfg.objective(), batch, state.w);
  const double eps = cfg.schedule.at(state.t);
  const Vector w_next = state.w - eps * s_t;
  detail::check_iterate(w_next, state.t, eps);
  state.w = w_next;
  ++state.t;
}

struct TrajectoryEntry {
  std::size_t t = 0;
  std::size_t samples_processed = 0;  // always batch_size * t
  double objective = 0.0;
};

struct RunFault {
  std::size_t iteration = 0;
  std::string reason;
};

struct TrajectoryLog {
  Method method = Method::res;
  std::vector<TrajectoryEntry> entries;
  ResConfig config_snapshot;
  std::uint64_t seed = 0;
  std::optional<RunFault> fault;
};

struct RunResult {
  TrajectoryLog log;
  OptimizerState state;  // final state: iterate, curvature matrix, skip count

  const Vector& final_w() const { return state.w; }
};

// Executes max_iters steps from w0 = 0, recording (t, L*t, F(w_t)) at t = 0,
// every record_every iterations, and at the final iterate. The objective is
// the exact average over the full training set. A numerical fault ends the run
// early; the partial log plus (iteration, reason) is retained.
inline RunResult run_with_state(const ResConfig& cfg, const TrainingSet& set, Method method,
                                std::size_t record_every = 10) {
  cfg.validate();
  if (set.empty()) throw std::invalid_argument("run: empty training set");
  if (record_every < 1) throw std::invalid_argument("run: record_every must be >= 1");

  OptimizerState state = make_initial_state(cfg, set.dim());
  const Objective obj = cfg.objective();

  TrajectoryLog log;
  log.method = method;
  log.config_snapshot = cfg;
  log.seed = cfg.seed;
  const auto record = [&] {
    log.entries.push_back(
        TrajectoryEntry{state.t, cfg.batch_size * state.t, average_objective(obj, set, state.w)});
  };
  record();

  for (std::size_t i = 0; i < cfg.max_iters; ++i) {
    try {
      if (method == Method::sgd) {
        sgd_step(state, cfg, set);
      } else {
        res_step(state, cfg, set);
      }
    } catch (const NumericalFault& fault) {
      log.fault = RunFault{state.t, fault.what()};
      break;
    }
    if (state.t % record_every == 0 || state.t == cfg.max_iters) record();
  }
  if (!log.fault && !log.entries.empty() && log.entries.back().t != state.t) record();
  return RunResult{std::move(log), std::move(state)};
}

inline TrajectoryLog run(const ResConfig& cfg, const TrainingSet& set, Method method,
                         std::size_t record_every = 10) {
  return run_with_state(cfg, set, method, record_every).log;
}

// Theorem hypothesis for the decaying schedule: 2 * eps0 * tau * Gamma > 1.
inline bool check_rate_condition(double eps0, double tau, double gamma) {
  return 2.0 * eps0 * tau * gamma > 1.0;
}

// Expected-suboptimality bound xi / (tau + t) with
//   xi = max{ eps0^2 tau^2 K / (2 eps0 tau Gamma - 1), (1 + tau) * f0_gap }.
// K is supplied by the caller; this bound is meaningful only when the rate
// condition holds.
inline double rate_bound(double eps0, double tau, double gamma, double k_constant, double f0_gap,
                         std::size_t t) {
  if (!check_rate_condition(eps0, tau, gamma))
    throw std::invalid_argument("rate_bound: requires 2*eps0*tau*gamma > 1");
  if (!(k_constant > 0.0)) throw std::invalid_argument("rate_bound: K must be positive");
  if (f0_gap < 0.0) throw std::invalid_argument("rate_bound: f0_gap must be >= 0");
  const double xi = std::max(eps0 * eps0 * tau * tau * k_constant /
                                 (2.0 * eps0 * tau * gamma - 1.0),
                             (1.0 + tau) * f0_gap);
  return xi / (tau + static_cast<double>(t));
}

// Empirical bounds on the instantaneous-Hessian spectrum and the stochastic
// gradient second moment. Advisory only: reported, never enforced.
struct ConvergenceDiagnostics {
  double m_tilde = 0.0;
  double M_tilde = 0.0;
  double s_sq_estimate = 0.0;
  bool rate_condition_ok = false;
};

// Probes random iterates (components uniform on [-1,1]) and minibatches.
// Squared hinge: the loss Hessian is 2*x*x' on samples with active margin, so
// M~ = lambda + 2 * max_batches lambda_max((1/L) sum_active x x'). Log loss:
// the logistic curvature factor is at most 1/4 with every sample contributing.
inline ConvergenceDiagnostics estimate_diagnostics(const ResConfig& cfg, const TrainingSet& set,
                                                   std::size_t probe_points, Rng& rng) {
  cfg.validate();
  if (probe_points < 1) throw std::invalid_argument("estimate_diagnostics: probe_points >= 1");
  if (set.empty()) throw std::invalid_argument("estimate_diagnostics: empty training set");

  const Eigen::Index n = set.dim();
  const Objective obj = cfg.objective();
  double max_curvature = 0.0;
  double max_grad_sq = 0.0;
  for (std::size_t p = 0; p < probe_points; ++p) {
    Vector w(n);
    for (Eigen::Index j = 0; j < n; ++j) w[j] = rng.uniform(-1.0, 1.0);
    const std::vector<Sample> batch = sample_minibatch(set, cfg.batch_size, rng);

    Matrix outer = Matrix::Zero(n, n);
    for (const Sample& s : batch) {
      if (cfg.loss == LossKind::squared_hinge) {
        if (1.0 - s.y * w.dot(s.x) > 0.0) outer += 2.0 * s.x * s.x.transpose();
      } else {
        outer += 0.25 * s.x * s.x.transpose();
      }
    }
    outer /= static_cast<double>(batch.size());
    if (outer.cwiseAbs().maxCoeff() > 0.0) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(outer, Eigen::EigenvaluesOnly);
      max_curvature = std::max(max_curvature, es.eigenvalues().maxCoeff());
    }
    max_grad_sq = std::max(max_grad_sq, instantaneous_gradient(obj, batch, w).squaredNorm());
  }

  ConvergenceDiagnostics d;
  d.m_tilde = cfg.lambda;
  d.M_tilde = cfg.lambda + max_curvature;
  d.s_sq_estimate = max_grad_sq;
  d.rate_condition_ok = cfg.schedule.kind == StepSchedule::Kind::decaying &&
                        check_rate_condition(cfg.schedule.eps0, cfg.schedule.tau, cfg.gamma);
  return d;
}

}  // namespace ressvm
