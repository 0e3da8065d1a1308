#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "ressvm/rng.hpp"
#include "ressvm/types.hpp"

namespace ressvm {

// Two-class synthetic model: each feature component i.i.d. uniform on
// neg_interval for y=-1 and on pos_interval for y=+1, N/2 samples per class.
struct SyntheticSpec {
  Eigen::Index n = 4;
  std::size_t N = 10000;  // must be even: half per class
  std::array<double, 2> neg_interval{-0.8, 0.2};
  std::array<double, 2> pos_interval{-0.2, 0.8};
  std::uint64_t seed = 0;
};

// Deterministic for a fixed spec: samples are generated interleaved
// (neg, pos, neg, pos, ...) and then Fisher-Yates shuffled by the same stream.
inline TrainingSet generate_synthetic(const SyntheticSpec& spec) {
  if (spec.N % 2 != 0)
    throw std::invalid_argument("generate_synthetic: N must be even (half per class)");
  if (spec.n < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
  if (spec.neg_interval[0] > spec.neg_interval[1] || spec.pos_interval[0] > spec.pos_interval[1])
    throw std::invalid_argument("generate_synthetic: malformed interval");

  Rng rng(spec.seed);
  std::vector<Sample> samples;
  samples.reserve(spec.N);
  const auto draw = [&](const std::array<double, 2>& iv, int label) {
    Vector x(spec.n);
    for (Eigen::Index j = 0; j < spec.n; ++j) x[j] = rng.uniform(iv[0], iv[1]);
    samples.push_back(Sample{std::move(x), label});
  };
  for (std::size_t i = 0; i < spec.N / 2; ++i) {
    draw(spec.neg_interval, -1);
    draw(spec.pos_interval, +1);
  }
  for (std::size_t i = samples.size(); i > 1; --i) {
    std::swap(samples[i - 1], samples[rng.uniform_index(i)]);
  }
  return TrainingSet(std::move(samples));
}

// L i.i.d. uniform draws over the set, with replacement.
inline std::vector<Sample> sample_minibatch(const TrainingSet& set, std::size_t batch_size,
                                            Rng& rng) {
  if (set.empty()) throw std::invalid_argument("sample_minibatch: empty training set");
  if (batch_size == 0) throw std::invalid_argument("sample_minibatch: batch size must be >= 1");
  std::vector<Sample> batch;
  batch.reserve(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) batch.push_back(set[rng.uniform_index(set.size())]);
  return batch;
}

// Fraction of samples with sign(w'x) == y. Ties (w'x == 0) count as incorrect.
inline double evaluate_accuracy(const Vector& w, const TrainingSet& set) {
  if (set.empty()) throw std::invalid_argument("evaluate_accuracy: empty set");
  if (set.dim() != w.size())
    throw std::invalid_argument("evaluate_accuracy: dimension mismatch");
  std::size_t correct = 0;
  for (const Sample& s : set.samples()) {
    const double d = w.dot(s.x);
    if ((d > 0.0 && s.y == 1) || (d < 0.0 && s.y == -1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(set.size());
}

// Accuracy of the classifier sign(sum_j x_j) under the synthetic model with the
// default intervals: 1 - F_IH(0.2*n; n), where F_IH is the Irwin-Hall CDF
//   F_IH(x; n) = (1/n!) sum_{k=0}^{floor(x)} (-1)^k C(n,k) (x-k)^n.
// The all-ones direction is accuracy-optimal by the model's exchangeable
// symmetry, so this is the clairvoyant benchmark. Evaluated in long double;
// n up to 30 keeps the alternating sum well conditioned.
inline double clairvoyant_accuracy(int n) {
  if (n < 1 || n > 30)
    throw std::invalid_argument("clairvoyant_accuracy: n must be in [1, 30]");
  const long double x = 0.2L * n;
  const int kmax = static_cast<int>(x);  // x < n always holds here
  long double sum = 0.0L;
  long double binom = 1.0L;  // C(n, k)
  for (int k = 0; k <= kmax; ++k) {
    const long double term = binom * std::pow(x - k, static_cast<long double>(n));
    sum += (k % 2 == 0) ? term : -term;
    binom = binom * (n - k) / (k + 1);
  }
  long double fact = 1.0L;
  for (int k = 2; k <= n; ++k) fact *= k;
  return static_cast<double>(1.0L - sum / fact);
}

namespace detail {

// Shortest decimal form that round-trips a double exactly.
inline std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

// CSV row format: "label,feat_1,...,feat_n" with label in {-1,1}. Values are
// emitted at 17 significant digits so the round trip is lossless.
inline void save_csv(const TrainingSet& set, const std::filesystem::path& path,
                     bool header = false) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open " + path.string());
  if (header) {
    out << "label";
    for (Eigen::Index j = 0; j < set.dim(); ++j) out << ",feat_" << (j + 1);
    out << '\n';
  }
  for (const Sample& s : set.samples()) {
    out << s.y;
    for (Eigen::Index j = 0; j < s.x.size(); ++j) out << ',' << detail::format_g17(s.x[j]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_csv: write failed for " + path.string());
}

inline TrainingSet load_csv(const std::filesystem::path& path, bool header = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
  std::vector<Sample> samples;
  std::string line;
  std::size_t lineno = 0;
  Eigen::Index dim = -1;
  const auto fail = [&](const std::string& what) {
    throw std::runtime_error("load_csv: " + path.string() + ":" + std::to_string(lineno) + ": " +
                             what);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (header && lineno == 1) continue;
    if (line.empty()) continue;
    std::vector<double> fields;
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p) fail("malformed numeric field");
      fields.push_back(v);
      p = end;
      if (*p == ',') {
        ++p;
      } else if (*p == '\0' || *p == '\r') {
        break;
      } else {
        fail("unexpected character in row");
      }
    }
    if (fields.size() < 2) fail("row needs a label and at least one feature");
    if (dim < 0) dim = static_cast<Eigen::Index>(fields.size()) - 1;
    if (static_cast<Eigen::Index>(fields.size()) - 1 != dim) fail("wrong field count");
    if (fields[0] != 1.0 && fields[0] != -1.0) fail("label must be -1 or 1");
    Vector x(dim);
    for (Eigen::Index j = 0; j < dim; ++j) {
      if (!std::isfinite(fields[static_cast<std::size_t>(j) + 1])) fail("non-finite feature");
      x[j] = fields[static_cast<std::size_t>(j) + 1];
    }
    samples.push_back(Sample{std::move(x), static_cast<int>(fields[0])});
  }
  return TrainingSet(std::move(samples));
}

}  // namespace ressvm
