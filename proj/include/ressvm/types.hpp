#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ressvm {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Raised when a computation leaves the numeric domain (non-finite iterate,
// loss of positive definiteness). Distinct from std::invalid_argument, which
// signals a caller error.
class NumericalFault : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One labeled training point: feature vector x with class label y in {-1,+1}.
struct Sample {
  Vector x;
  int y = 1;
};

// Immutable collection of samples sharing one feature dimension. Safe to share
// across threads once constructed.
class TrainingSet {
 public:
  TrainingSet() = default;

  explicit TrainingSet(std::vector<Sample> samples) : samples_(std::move(samples)) {
    if (samples_.empty()) return;
    dim_ = samples_.front().x.size();
    for (const auto& s : samples_) {
      if (s.x.size() != dim_)
        throw std::invalid_argument("TrainingSet: inconsistent feature dimension");
      if (!s.x.allFinite())
        throw std::invalid_argument("TrainingSet: non-finite feature component");
      if (s.y != 1 && s.y != -1)
        throw std::invalid_argument("TrainingSet: label must be -1 or +1");
    }
  }

  const std::vector<Sample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  Eigen::Index dim() const { return dim_; }
  bool empty() const { return samples_.empty(); }
  const Sample& operator[](std::size_t i) const { return samples_[i]; }

 private:
  std::vector<Sample> samples_;
  Eigen::Index dim_ = 0;
};

}  // namespace ressvm
