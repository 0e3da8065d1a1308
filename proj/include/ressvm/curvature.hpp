#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>

#include "ressvm/types.hpp"

namespace ressvm {

enum class UpdateStatus { updated, skipped };

// Variable variation v, gradient variation r_hat, and the delta-corrected
// variation r_tilde = r_hat - delta*v of one curvature step.
struct CurvaturePair {
  Vector v;
  Vector r_hat;
  Vector r_tilde;
};

struct UpdateOutcome {
  UpdateStatus status = UpdateStatus::skipped;
  CurvaturePair pair;
};

// Symmetric positive definite curvature matrix B with eigenvalue floor delta.
//
// The update is the regularized BFGS rank-two formula
//   B <- B + r~ r~' / (v' r~) - (B v)(B v)' / (v' B v) + delta*I,
// applied only when v' r~ clears the skip guard; a skipped step leaves B
// bit-identical. Invariants maintained across every accepted update:
//   - B symmetric (explicitly re-symmetrized to stop drift),
//   - lambda_min(B) >= delta,
//   - secant condition B_new v = r_hat.
//
// No inverse is maintained; the descent solve factorizes per call (the
// delta*I term breaks low-rank inverse updates, and dimensions stay small
// enough that an O(n^3) factorization per iteration is the safer trade).
class HessianApprox {
 public:
  // B0 = max(1, 2*delta) * I, so lambda_min(B0) > delta for any delta >= 0.
  // `absolute_guard` switches the skip guard from relative (1e-10 * ||v||^2)
  // to absolute (1e-14): used by the non-regularized delta=0, gamma=0 mode,
  // where the relative guard would mask the behavior under study while the
  // absolute one still blocks division by zero.
  static HessianApprox init(Eigen::Index n, double delta, bool absolute_guard = false) {
    if (n < 1) throw std::invalid_argument("HessianApprox::init: dimension must be >= 1");
    if (delta < 0.0 || !std::isfinite(delta))
      throw std::invalid_argument("HessianApprox::init: delta must be >= 0");
    const double scale = std::max(1.0, 2.0 * delta);
    return HessianApprox(scale * Matrix::Identity(n, n), delta, absolute_guard);
  }

  // Adopt an existing matrix; validates symmetry and the eigenvalue floor.
  static HessianApprox from_matrix(Matrix B, double delta, bool absolute_guard = false) {
    if (B.rows() != B.cols() || B.rows() < 1)
      throw std::invalid_argument("HessianApprox::from_matrix: matrix must be square");
    if (delta < 0.0 || !std::isfinite(delta))
      throw std::invalid_argument("HessianApprox::from_matrix: delta must be >= 0");
    if (!B.allFinite())
      throw std::invalid_argument("HessianApprox::from_matrix: non-finite entries");
    const double scale = std::max(1.0, B.cwiseAbs().maxCoeff());
    if ((B - B.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
      throw std::invalid_argument("HessianApprox::from_matrix: matrix not symmetric");
    HessianApprox h(std::move(B), delta, absolute_guard);
    if (h.min_eigenvalue() < delta - 1e-9)
      throw std::invalid_argument("HessianApprox::from_matrix: eigenvalue floor violated");
    return h;
  }

  UpdateOutcome update(const Vector& v, const Vector& r_hat) {
    if (v.size() != dim() || r_hat.size() != dim())
      throw std::invalid_argument("HessianApprox::update: dimension mismatch");
    if (!v.allFinite() || !r_hat.allFinite())
      throw NumericalFault("HessianApprox::update: non-finite variation input");

    CurvaturePair pair{v, r_hat, r_hat - delta_ * v};
    const double rv = pair.r_tilde.dot(v);
    const double threshold = absolute_guard_ ? 1e-14 : 1e-10 * v.squaredNorm();
    if (!(rv > threshold)) return {UpdateStatus::skipped, std::move(pair)};

    const Vector bv = B_ * v;
    const double vbv = v.dot(bv);
    if (!(vbv > 0.0))
      throw NumericalFault("HessianApprox::update: matrix lost positive definiteness (v'Bv = " +
                           std::to_string(vbv) + ")");

    B_ += pair.r_tilde * pair.r_tilde.transpose() / rv - bv * bv.transpose() / vbv;
    B_.diagonal().array() += delta_;
    B_ = ((B_ + B_.transpose()) * 0.5).eval();
    if (!B_.allFinite())
      throw NumericalFault("HessianApprox::update: update produced non-finite entries");
    return {UpdateStatus::updated, std::move(pair)};
  }

  // (B^-1 + gamma*I) s via Cholesky solve; no explicit inverse.
  Vector descent_direction(double gamma, const Vector& s) const {
    if (s.size() != dim())
      throw std::invalid_argument("HessianApprox::descent_direction: dimension mismatch");
    if (gamma < 0.0 || !std::isfinite(gamma))
      throw std::invalid_argument("HessianApprox::descent_direction: gamma must be >= 0");
    Eigen::LLT<Matrix> llt(B_);
    if (llt.info() != Eigen::Success)
      throw NumericalFault(
          "HessianApprox::descent_direction: Cholesky factorization failed (invariant breach)");
    return llt.solve(s) + gamma * s;
  }

  // Smallest eigenvalue via symmetric eigensolve. Diagnostic only.
  double min_eigenvalue() const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(B_, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
  }

  const Matrix& matrix() const { return B_; }
  double delta() const { return delta_; }
  Eigen::Index dim() const { return B_.rows(); }

 private:
  HessianApprox(Matrix B, double delta, bool absolute_guard)
      : B_(std::move(B)), delta_(delta), absolute_guard_(absolute_guard) {}

  Matrix B_;
  double delta_;
  bool absolute_guard_;
};

// Row-major decimal dump for invariant auditing (behind a CLI debug flag).
inline void save_matrix_csv(const Matrix& m, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_matrix_csv: cannot open " + path.string());
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 < m.cols() ? "," : "");
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_matrix_csv: write failed for " + path.string());
}

}  // namespace ressvm
