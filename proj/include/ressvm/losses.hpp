#pragma once

#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>

#include "ressvm/types.hpp"

namespace ressvm {

enum class LossKind { squared_hinge, log };

inline std::string_view to_string(LossKind kind) {
  return kind == LossKind::squared_hinge ? "squared_hinge" : "log";
}

inline LossKind loss_kind_from_string(std::string_view s) {
  if (s == "squared_hinge") return LossKind::squared_hinge;
  if (s == "log") return LossKind::log;
  throw std::invalid_argument("unknown loss kind: " + std::string(s));
}

// Regularized instantaneous objective: f(w, (x,y)) = lambda/2 ||w||^2 + l((x,y); w).
struct Objective {
  LossKind loss = LossKind::squared_hinge;
  double lambda = 1e-3;  // must be >= 0; > 0 for strong convexity
};

namespace detail {

inline void check_dims(const Vector& x, int y, const Vector& w, const char* who) {
  if (x.size() != w.size())
    throw std::invalid_argument(std::string(who) + ": dimension mismatch between x and w");
  if (y != 1 && y != -1)
    throw std::invalid_argument(std::string(who) + ": label must be -1 or +1");
}

// log(1 + exp(z)) without overflow: for z > 0 rewrite as z + log(1 + exp(-z)).
inline double log1p_exp(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

// Logistic function, evaluated on the side that keeps exp() bounded.
inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace detail

inline double loss_value(LossKind kind, const Vector& x, int y, const Vector& w) {
  detail::check_dims(x, y, w, "loss_value");
  const double margin = 1.0 - y * w.dot(x);
  if (kind == LossKind::squared_hinge) {
    return margin > 0.0 ? margin * margin : 0.0;
  }
  return detail::log1p_exp(-y * w.dot(x));
}

inline Vector loss_gradient(LossKind kind, const Vector& x, int y, const Vector& w) {
  detail::check_dims(x, y, w, "loss_gradient");
  if (kind == LossKind::squared_hinge) {
    const double margin = 1.0 - y * w.dot(x);
    // C^1 at the hinge: the factor vanishes as margin -> 0 from either side.
    if (margin > 0.0) return (-2.0 * y * margin) * x;
    return Vector::Zero(x.size());
  }
  return (-y * detail::sigmoid(-y * w.dot(x))) * x;
}

// Minibatch stochastic gradient: lambda*w + (1/L) sum_i grad l((x_i,y_i); w).
inline Vector instantaneous_gradient(const Objective& obj, std::span<const Sample> batch,
                                     const Vector& w) {
  if (batch.empty())
    throw std::invalid_argument("instantaneous_gradient: empty batch");
  Vector g = Vector::Zero(w.size());
  for (const Sample& s : batch) g += loss_gradient(obj.loss, s.x, s.y, w);
  g /= static_cast<double>(batch.size());
  g += obj.lambda * w;
  return g;
}

// Exact average objective over the whole set; reporting only, never inside the
// optimizer step.
inline double average_objective(const Objective& obj, const TrainingSet& set, const Vector& w) {
  if (set.empty())
    throw std::invalid_argument("average_objective: empty training set");
  long double acc = 0.0L;
  for (const Sample& s : set.samples()) acc += loss_value(obj.loss, s.x, s.y, w);
  acc /= static_cast<long double>(set.size());
  acc += 0.5L * obj.lambda * static_cast<long double>(w.squaredNorm());
  return static_cast<double>(acc);
}

}  // namespace ressvm
