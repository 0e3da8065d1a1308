#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <vector>

#include "ressvm/dataset.hpp"
#include "ressvm/rng.hpp"

using namespace ressvm;

namespace {

namespace fs = std::filesystem;

fs::path temp_file(const char* name) {
  const fs::path p = fs::temp_directory_path() / name;
  fs::remove(p);
  return p;
}

bool sets_equal(const TrainingSet& a, const TrainingSet& b) {
  if (a.size() != b.size() || a.dim() != b.dim()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].y != b[i].y) return false;
    if (a[i].x != b[i].x) return false;  // bitwise: round trip must be lossless
  }
  return true;
}

}  // namespace

TEST_CASE("synthetic generation respects class structure") {
  SyntheticSpec spec;
  spec.n = 4;
  spec.N = 10000;
  spec.seed = 1;
  const TrainingSet set = generate_synthetic(spec);

  REQUIRE(set.size() == 10000);
  std::size_t neg = 0;
  for (const Sample& s : set.samples()) {
    if (s.y == -1) {
      ++neg;
      CHECK(s.x.minCoeff() >= -0.8);
      CHECK(s.x.maxCoeff() <= 0.2);
    } else {
      CHECK(s.x.minCoeff() >= -0.2);
      CHECK(s.x.maxCoeff() <= 0.8);
    }
  }
  CHECK(neg == 5000);
}

TEST_CASE("synthetic generation minimal and error cases") {
  SyntheticSpec spec;
  spec.n = 1;
  spec.N = 2;
  const TrainingSet set = generate_synthetic(spec);
  REQUIRE(set.size() == 2);
  CHECK(set[0].y + set[1].y == 0);  // one per class

  SyntheticSpec odd = spec;
  odd.N = 3;
  CHECK_THROWS_AS(generate_synthetic(odd), std::invalid_argument);
}

TEST_CASE("synthetic generation is deterministic in the seed") {
  SyntheticSpec spec;
  spec.n = 6;
  spec.N = 200;
  spec.seed = 99;
  CHECK(sets_equal(generate_synthetic(spec), generate_synthetic(spec)));

  SyntheticSpec other = spec;
  other.seed = 100;
  CHECK_FALSE(sets_equal(generate_synthetic(spec), generate_synthetic(other)));
}

TEST_CASE("class-conditional component means match the model") {
  SyntheticSpec spec;
  spec.n = 4;
  spec.N = 10000;
  spec.seed = 2;
  const TrainingSet set = generate_synthetic(spec);

  double neg_sum = 0.0, pos_sum = 0.0;
  std::size_t neg_count = 0, pos_count = 0;
  for (const Sample& s : set.samples()) {
    if (s.y == -1) {
      neg_sum += s.x.sum();
      neg_count += s.x.size();
    } else {
      pos_sum += s.x.sum();
      pos_count += s.x.size();
    }
  }
  // Uniform on an interval of width 1: sd = 1/sqrt(12).
  const double five_sigma = 5.0 / std::sqrt(12.0 * static_cast<double>(neg_count));
  CHECK(std::abs(neg_sum / neg_count - (-0.3)) <= five_sigma);
  CHECK(std::abs(pos_sum / pos_count - 0.3) <= five_sigma);
}

TEST_CASE("minibatch draws are uniform with replacement") {
  SyntheticSpec spec;
  spec.n = 2;
  spec.N = 10000;
  spec.seed = 3;
  const TrainingSet set = generate_synthetic(spec);

  // Count index frequencies through an independent tally of the rng stream.
  std::vector<std::size_t> counts(set.size(), 0);
  const std::size_t draws = 100000;
  {
    Rng replay(12345);
    for (std::size_t i = 0; i < draws; ++i) ++counts[replay.uniform_index(set.size())];
  }
  const double expected = static_cast<double>(draws) / static_cast<double>(set.size());
  const double five_sigma = 5.0 * std::sqrt(expected * (1.0 - 1.0 / set.size()));
  for (const std::size_t c : counts) {
    CHECK(std::abs(static_cast<double>(c) - expected) <= five_sigma);
  }

  // Same stream, same batch.
  Rng r1(777), r2(777);
  const auto b1 = sample_minibatch(set, 50, r1);
  const auto b2 = sample_minibatch(set, 50, r2);
  REQUIRE(b1.size() == 50);
  for (std::size_t i = 0; i < b1.size(); ++i) CHECK(b1[i].x == b2[i].x);

  const TrainingSet single(std::vector<Sample>{set[0]});
  Rng r3(1);
  const auto b3 = sample_minibatch(single, 1, r3);
  REQUIRE(b3.size() == 1);
  CHECK(b3[0].x == set[0].x);

  Rng r4(1);
  CHECK_THROWS_AS(sample_minibatch(TrainingSet{}, 1, r4), std::invalid_argument);
}

TEST_CASE("accuracy counts strict sign matches only") {
  SyntheticSpec spec;
  spec.n = 4;
  spec.N = 10000;
  spec.seed = 4;
  const TrainingSet set = generate_synthetic(spec);

  CHECK(evaluate_accuracy(Vector::Zero(4), set) == 0.0);  // all ties -> incorrect

  // The all-ones direction is the clairvoyant hyperplane for this model.
  const double acc = evaluate_accuracy(Vector::Ones(4), set);
  CHECK(std::abs(acc - 0.983) < 0.005);

  // Perfectly separated toy set.
  std::vector<Sample> toy;
  Vector xp(1), xn(1);
  xp << 1.0;
  xn << -1.0;
  toy.push_back(Sample{xp, +1});
  toy.push_back(Sample{xn, -1});
  Vector w1(1);
  w1 << 3.0;
  CHECK(evaluate_accuracy(w1, TrainingSet(toy)) == 1.0);

  CHECK_THROWS_AS(evaluate_accuracy(Vector::Zero(3), set), std::invalid_argument);
}

TEST_CASE("clairvoyant accuracy closed form") {
  // n = 4: 1 - 0.8^4 / 24.
  CHECK(clairvoyant_accuracy(4) ==
        Catch::Approx(1.0 - std::pow(0.8, 4) / 24.0).epsilon(1e-14));
  CHECK(clairvoyant_accuracy(1) == Catch::Approx(0.8).epsilon(1e-14));

  for (int n = 1; n < 10; ++n) CHECK(clairvoyant_accuracy(n) < clairvoyant_accuracy(n + 1));

  CHECK_THROWS_AS(clairvoyant_accuracy(0), std::invalid_argument);
  CHECK_THROWS_AS(clairvoyant_accuracy(31), std::invalid_argument);
}

TEST_CASE("clairvoyant accuracy agrees with Monte Carlo") {
  // Positive-class sums: accuracy = P(sum of n U[-0.2,0.8] > 0).
  const int n = 4;
  const std::size_t trials = 1000000;
  Rng rng(2024);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < trials; ++i) {
    double sum = 0.0;
    for (int j = 0; j < n; ++j) sum += rng.uniform(-0.2, 0.8);
    if (sum > 0.0) ++correct;
  }
  const double mc = static_cast<double>(correct) / static_cast<double>(trials);
  const double p = clairvoyant_accuracy(n);
  const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  CHECK(std::abs(mc - p) <= 3.0 * se);
}

TEST_CASE("csv round trip is lossless") {
  SyntheticSpec spec;
  spec.n = 5;
  spec.N = 64;
  spec.seed = 8;
  const TrainingSet set = generate_synthetic(spec);

  const fs::path plain = temp_file("ressvm_roundtrip.csv");
  save_csv(set, plain);
  CHECK(sets_equal(load_csv(plain), set));

  const fs::path with_header = temp_file("ressvm_roundtrip_header.csv");
  save_csv(set, with_header, /*header=*/true);
  CHECK(sets_equal(load_csv(with_header, /*header=*/true), set));
  fs::remove(plain);
  fs::remove(with_header);
}

TEST_CASE("csv parsing accepts the documented row format and rejects bad rows") {
  const fs::path p = temp_file("ressvm_rows.csv");
  {
    std::ofstream out(p);
    out << "1,-0.5,0.3\n-1,0.25,0.125\n";
  }
  const TrainingSet set = load_csv(p);
  REQUIRE(set.size() == 2);
  CHECK(set[0].y == 1);
  CHECK(set[0].x[0] == -0.5);
  CHECK(set[0].x[1] == 0.3);
  CHECK(set[1].y == -1);

  const auto expect_reject = [&](const char* row) {
    std::ofstream out(p);
    out << row;
    out.close();
    CHECK_THROWS_AS(load_csv(p), std::runtime_error);
  };
  expect_reject("0,1.0,2.0\n");      // invalid label
  expect_reject("1,0.5\n-1,1,2\n");  // inconsistent field count
  expect_reject("1,nan,0.5\n");      // non-finite value
  expect_reject("1,0.5,oops\n");     // trailing garbage
  CHECK_THROWS_AS(load_csv(temp_file("ressvm_missing.csv")), std::runtime_error);
  fs::remove(p);
}
