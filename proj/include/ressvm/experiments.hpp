#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "ressvm/config_io.hpp"
#include "ressvm/dataset.hpp"
#include "ressvm/optimizer.hpp"

// Seeded re-creations of the reference experiments: convergence trajectories,
// accuracy histograms across replications, and the regularization ablation.
// Replications and seeds are independent streams (see derive_seed), so they
// can execute in any order or across a worker pool with identical results.

namespace ressvm {

namespace detail {

template <typename Fn>
void parallel_for_index(std::size_t count, std::size_t jobs, Fn&& fn) {
  if (jobs == 0) jobs = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  jobs = std::min(jobs, count);
  if (jobs <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::mutex error_mutex;
  std::exception_ptr first_error;
  std::vector<std::thread> workers;
  workers.reserve(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < count; i += jobs) fn(i);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// Recording granularity in samples: a multiple of every batch size involved
// (so entries align on samples_processed), coarsened to keep each trajectory
// around <= 500 entries.
inline std::size_t auto_record_samples(std::size_t budget, std::size_t l_a, std::size_t l_b) {
  const std::size_t base = std::lcm(l_a, l_b);
  const std::size_t target_entries = 500;
  const std::size_t factor = budget / (target_entries * base);
  return base * std::max<std::size_t>(1, factor);
}

}  // namespace detail

// One RES + one SGD trajectory per seed, both on the training set generated
// for that seed, aligned on samples processed (L*t). budget_samples must be
// divisible by both batch sizes.
inline std::vector<TrajectoryLog> convergence_experiment(
    Eigen::Index n, std::size_t data_count, ResConfig res_cfg, ResConfig sgd_cfg,
    std::size_t budget_samples, const std::vector<std::uint64_t>& seeds, std::size_t jobs = 0) {
  res_cfg.validate();
  sgd_cfg.validate();
  if (budget_samples % res_cfg.batch_size != 0 || budget_samples % sgd_cfg.batch_size != 0)
    throw std::invalid_argument(
        "convergence_experiment: budget_samples must be divisible by each batch size");

  const std::size_t granularity =
      detail::auto_record_samples(budget_samples, res_cfg.batch_size, sgd_cfg.batch_size);
  std::vector<TrajectoryLog> logs(2 * seeds.size());
  detail::parallel_for_index(seeds.size(), jobs, [&](std::size_t i) {
    SyntheticSpec data_spec;
    data_spec.n = n;
    data_spec.N = data_count;
    data_spec.seed = derive_seed(seeds[i], 0);
    const TrainingSet set = generate_synthetic(data_spec);

    ResConfig rc = res_cfg;
    rc.seed = derive_seed(seeds[i], 1);
    rc.max_iters = budget_samples / rc.batch_size;
    logs[2 * i] = run(rc, set, Method::res, granularity / rc.batch_size);
    logs[2 * i].seed = seeds[i];

    ResConfig sc = sgd_cfg;
    sc.seed = derive_seed(seeds[i], 2);
    sc.max_iters = budget_samples / sc.batch_size;
    logs[2 * i + 1] = run(sc, set, Method::sgd, granularity / sc.batch_size);
    logs[2 * i + 1].seed = seeds[i];
  });
  return logs;
}

// Distribution of correct-classification fractions across replications.
// accuracies[r] belongs to replication r (train seed base_seed + r); faulted
// replications score 0 and carry a marker. Bins are 2% wide over [0,1].
struct HistogramResult {
  Method method = Method::res;
  std::vector<double> accuracies;
  std::vector<std::uint8_t> faulted;
  std::vector<double> bin_edges;
  std::vector<std::size_t> counts;
  double mean = 0.0;
  std::size_t replications = 0;
  ResConfig config_snapshot;
  std::uint64_t base_seed = 0;
};

inline HistogramResult histogram_experiment(Eigen::Index n, std::size_t train_count,
                                            std::size_t test_count, ResConfig cfg, Method method,
                                            std::size_t replications, std::uint64_t base_seed,
                                            std::size_t jobs = 0) {
  cfg.validate();
  if (replications < 1)
    throw std::invalid_argument("histogram_experiment: replications must be >= 1");
  if (train_count % cfg.batch_size != 0 || train_count == 0)
    throw std::invalid_argument(
        "histogram_experiment: train_count must be a positive multiple of batch_size");

  HistogramResult result;
  result.method = method;
  result.replications = replications;
  result.config_snapshot = cfg;
  result.base_seed = base_seed;
  result.accuracies.assign(replications, 0.0);
  result.faulted.assign(replications, 0);

  detail::parallel_for_index(replications, jobs, [&](std::size_t r) {
    const std::uint64_t rep_seed = base_seed + r;
    SyntheticSpec train_spec;
    train_spec.n = n;
    train_spec.N = train_count;
    train_spec.seed = rep_seed;
    const TrainingSet train = generate_synthetic(train_spec);

    ResConfig run_cfg = cfg;
    run_cfg.seed = derive_seed(rep_seed, 1);
    run_cfg.max_iters = train_count / cfg.batch_size;
    const RunResult rr = run_with_state(run_cfg, train, method, run_cfg.max_iters);
    if (rr.log.fault) {
      result.faulted[r] = 1;  // scored as 0: failed to compute a working classifier
      return;
    }
    SyntheticSpec test_spec;
    test_spec.n = n;
    test_spec.N = test_count;
    test_spec.seed = derive_seed(rep_seed, 2);
    result.accuracies[r] = evaluate_accuracy(rr.final_w(), generate_synthetic(test_spec));
  });

  constexpr std::size_t kBins = 50;  // 2% wide over [0,1]
  result.bin_edges.resize(kBins + 1);
  for (std::size_t b = 0; b <= kBins; ++b)
    result.bin_edges[b] = static_cast<double>(b) / static_cast<double>(kBins);
  result.counts.assign(kBins, 0);
  long double acc_sum = 0.0L;
  for (const double a : result.accuracies) {
    const auto bin = std::min<std::size_t>(static_cast<std::size_t>(a * kBins), kBins - 1);
    ++result.counts[bin];
    acc_sum += a;
  }
  result.mean = static_cast<double>(acc_sum / static_cast<long double>(replications));
  return result;
}

// Fig.-4-style comparison on one shared training set with a constant step:
// SGD (L=1), regularized RES (delta=1e-3, Gamma=1e-4, L=5), and
// non-regularized stochastic BFGS (delta=0, Gamma=0, L=5), in that order.
// Excursions and faults are first-class results and are retained in the logs.
inline std::vector<TrajectoryLog> regularization_ablation(Eigen::Index n, std::size_t data_count,
                                                          std::size_t budget_samples,
                                                          std::uint64_t base_seed,
                                                          std::size_t jobs = 0) {
  constexpr double kConstantStep = 1e-1;
  constexpr std::size_t kResBatch = 5;
  if (budget_samples % kResBatch != 0)
    throw std::invalid_argument("regularization_ablation: budget must be a multiple of 5");

  SyntheticSpec data_spec;
  data_spec.n = n;
  data_spec.N = data_count;
  data_spec.seed = derive_seed(base_seed, 0);
  const TrainingSet set = generate_synthetic(data_spec);

  ResConfig sgd_cfg;
  sgd_cfg.batch_size = 1;
  sgd_cfg.schedule = StepSchedule::constant(kConstantStep);
  sgd_cfg.max_iters = budget_samples;
  sgd_cfg.seed = derive_seed(base_seed, 1);

  ResConfig res_cfg;
  res_cfg.batch_size = kResBatch;
  res_cfg.schedule = StepSchedule::constant(kConstantStep);
  res_cfg.max_iters = budget_samples / kResBatch;
  res_cfg.seed = derive_seed(base_seed, 2);

  ResConfig unreg_cfg = res_cfg;
  unreg_cfg.delta = 0.0;
  unreg_cfg.gamma = 0.0;
  unreg_cfg.seed = derive_seed(base_seed, 3);

  const std::size_t granularity = detail::auto_record_samples(budget_samples, kResBatch, 1);
  const std::array<std::pair<ResConfig, Method>, 3> runs{
      std::pair{sgd_cfg, Method::sgd},
      std::pair{res_cfg, Method::res},
      std::pair{unreg_cfg, Method::res_unregularized}};

  std::vector<TrajectoryLog> logs(3);
  detail::parallel_for_index(3, jobs, [&](std::size_t i) {
    logs[i] = run(runs[i].first, set, runs[i].second, granularity / runs[i].first.batch_size);
    logs[i].seed = base_seed;
  });
  return logs;
}

enum class EmitFormat { csv, json };

inline EmitFormat emit_format_from_string(std::string_view s) {
  if (s == "csv") return EmitFormat::csv;
  if (s == "json") return EmitFormat::json;
  throw std::invalid_argument("unknown emit format: " + std::string(s));
}

// Trajectory CSV schema: method,seed,t,samples_processed,objective.
inline void emit_results(std::span<const TrajectoryLog> logs, const std::filesystem::path& path,
                         EmitFormat format) {
  if (format == EmitFormat::json) {
    json j = json::array();
    for (const TrajectoryLog& log : logs) j.push_back(log);
    write_json_file(j, path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_results: cannot open " + path.string());
  out << "method,seed,t,samples_processed,objective\n";
  for (const TrajectoryLog& log : logs) {
    for (const TrajectoryEntry& e : log.entries) {
      out << to_string(log.method) << ',' << log.seed << ',' << e.t << ',' << e.samples_processed
          << ',' << detail::format_g17(e.objective) << '\n';
    }
  }
  if (!out) throw std::runtime_error("emit_results: write failed for " + path.string());
}

inline json histogram_sidecar(const HistogramResult& h) {
  return json{{"method", std::string(to_string(h.method))},
              {"mean", h.mean},
              {"replications", h.replications},
              {"base_seed", h.base_seed},
              {"config", h.config_snapshot},
              {"accuracies", h.accuracies},
              {"faulted", h.faulted}};
}

// Histogram CSV schema: bin_lo,bin_hi,count. The CSV form writes a JSON
// sidecar (<path>.json) carrying the mean, config, and per-replication data.
inline void emit_results(const HistogramResult& h, const std::filesystem::path& path,
                         EmitFormat format) {
  if (format == EmitFormat::json) {
    json j = histogram_sidecar(h);
    j["bin_edges"] = h.bin_edges;
    j["counts"] = h.counts;
    write_json_file(j, path);
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("emit_results: cannot open " + path.string());
  out << "bin_lo,bin_hi,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    out << detail::format_g17(h.bin_edges[b]) << ',' << detail::format_g17(h.bin_edges[b + 1])
        << ',' << h.counts[b] << '\n';
  }
  if (!out) throw std::runtime_error("emit_results: write failed for " + path.string());
  write_json_file(histogram_sidecar(h), path.string() + ".json");
}

// One file per log under dir, named <method>_seed<seed>.csv. Returns paths.
inline std::vector<std::filesystem::path> emit_run_directory(std::span<const TrajectoryLog> logs,
                                                             const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> paths;
  for (const TrajectoryLog& log : logs) {
    std::ostringstream name;
    name << to_string(log.method) << "_seed" << log.seed << ".csv";
    const std::filesystem::path p = dir / name.str();
    emit_results(std::span<const TrajectoryLog>(&log, 1), p, EmitFormat::csv);
    paths.push_back(p);
  }
  return paths;
}

struct TrajectoryRow {
  std::string method;
  std::uint64_t seed = 0;
  std::size_t t = 0;
  std::size_t samples_processed = 0;
  double objective = 0.0;
};

inline std::vector<TrajectoryRow> load_trajectory_rows(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_trajectory_rows: cannot open " + path.string());
  std::vector<TrajectoryRow> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first) {  // header
      first = false;
      continue;
    }
    if (line.empty()) continue;
    std::istringstream ss(line);
    TrajectoryRow row;
    std::string field;
    std::getline(ss, row.method, ',');
    std::getline(ss, field, ',');
    row.seed = std::stoull(field);
    std::getline(ss, field, ',');
    row.t = std::stoull(field);
    std::getline(ss, field, ',');
    row.samples_processed = std::stoull(field);
    std::getline(ss, field, ',');
    row.objective = std::stod(field);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ressvm
