#pragma once

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "ressvm/config_io.hpp"
#include "ressvm/experiments.hpp"
#include "ressvm/version.hpp"

// Command-line front end. Exit codes: 0 success, 1 runtime fault (non-finite
// iterates still emit partial logs), 2 usage error. Option precedence:
// built-in defaults < --config JSON file < individual flags. Progress goes to
// standard error; data goes to files and standard output only. Every run
// writes a manifest (resolved config, seeds, generator identity, tool
// version) and prints its path on completion.

namespace ressvm {
namespace cli_detail {

namespace fs = std::filesystem;

inline fs::path default_outdir() {
  if (const char* env = std::getenv("RESSVM_OUT")) return fs::path(env);
  return fs::path("out");
}

// --config is applied before flag parsing so flags can override it; scan the
// raw arguments for it up front.
inline std::optional<fs::path> find_config_arg(int argc, const char* const* argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string_view a = argv[i];
    if (a == "--config" && i + 1 < argc) return fs::path(argv[i + 1]);
    if (a.rfind("--config=", 0) == 0) return fs::path(a.substr(9));
  }
  return std::nullopt;
}

struct FileConfig {
  ResConfig res;
  SyntheticSpec synthetic;
};

inline FileConfig load_file_config(const fs::path& path) {
  const json j = read_json_file(path);
  FileConfig fc;
  fc.res = j.get<ResConfig>();
  if (j.contains("synthetic")) fc.synthetic = j.at("synthetic").get<SyntheticSpec>();
  return fc;
}

inline void save_model_csv(const Vector& w, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_model_csv: cannot open " + path.string());
  for (Eigen::Index j = 0; j < w.size(); ++j)
    out << (j ? "," : "") << detail::format_g17(w[j]);
  out << '\n';
  if (!out) throw std::runtime_error("save_model_csv: write failed for " + path.string());
}

inline Vector load_model_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_model_csv: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw std::runtime_error("load_model_csv: empty model file " + path.string());
  std::vector<double> vals;
  const char* p = line.c_str();
  while (true) {
    char* end = nullptr;
    vals.push_back(std::strtod(p, &end));
    if (end == p) throw std::runtime_error("load_model_csv: malformed number in " + path.string());
    p = end;
    if (*p == ',') {
      ++p;
    } else {
      break;
    }
  }
  Vector w(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) w[static_cast<Eigen::Index>(i)] = vals[i];
  return w;
}

inline void finish_manifest(json manifest, const fs::path& path) {
  write_json_file(manifest, path);
  std::cout << path.string() << '\n';
}

// Shared flag block for everything that configures a ResConfig.
inline void add_res_options(CLI::App* cmd, ResConfig& cfg, std::string& schedule_kind,
                            std::string& loss_name) {
  cmd->add_option("--lambda", cfg.lambda, "Regularization weight lambda")
      ->capture_default_str();
  cmd->add_option("--delta", cfg.delta, "Curvature eigenvalue floor delta")
      ->capture_default_str();
  cmd->add_option("--gamma", cfg.gamma, "Minimum-progress bias Gamma")->capture_default_str();
  cmd->add_option("--batch-size", cfg.batch_size, "Minibatch size L")->capture_default_str();
  cmd->add_option("--epsilon0", cfg.schedule.eps0, "Decaying schedule eps0")
      ->capture_default_str();
  cmd->add_option("--tau", cfg.schedule.tau, "Decaying schedule tau")->capture_default_str();
  cmd->add_option("--step", cfg.schedule.eps, "Constant schedule step size")
      ->capture_default_str();
  cmd->add_option("--schedule", schedule_kind, "Step schedule: decaying | constant")
      ->check(CLI::IsMember({"decaying", "constant"}))
      ->capture_default_str();
  cmd->add_option("--seed", cfg.seed, "Run seed")->capture_default_str();
  cmd->add_option("--loss", loss_name, "Loss: squared_hinge | log")
      ->check(CLI::IsMember({"squared_hinge", "log"}))
      ->capture_default_str();
}

inline void apply_string_options(ResConfig& cfg, const std::string& schedule_kind,
                                 const std::string& loss_name) {
  cfg.schedule.kind = schedule_kind == "constant" ? StepSchedule::Kind::constant
                                                  : StepSchedule::Kind::decaying;
  cfg.loss = loss_kind_from_string(loss_name);
}

}  // namespace cli_detail

inline int run_cli(int argc, const char* const* argv) {
  namespace fs = std::filesystem;
  using cli_detail::finish_manifest;

  CLI::App app{"Regularized stochastic BFGS (RES) SVM trainer and benchmark suite"};
  app.require_subcommand(1);
  int exit_code = 0;

  // Values shared by the subcommand handlers. The config file, when present,
  // overwrites these defaults before flags are parsed.
  ResConfig cfg;
  SyntheticSpec synth;
  std::string schedule_kind = "decaying";
  std::string loss_name = "squared_hinge";
  std::string config_path;
  if (const auto config_file = cli_detail::find_config_arg(argc, argv)) {
    const cli_detail::FileConfig fc = cli_detail::load_file_config(*config_file);
    cfg = fc.res;
    synth = fc.synthetic;
    schedule_kind =
        cfg.schedule.kind == StepSchedule::Kind::constant ? "constant" : "decaying";
    loss_name = std::string(to_string(cfg.loss));
  }

  std::string outdir = cli_detail::default_outdir().string();
  std::size_t jobs = 0;

  // ---- generate ----
  auto* gen = app.add_subcommand("generate", "Generate a synthetic training set CSV");
  std::string gen_out;
  bool gen_header = false;
  gen->add_option("--n", synth.n, "Feature dimension")->capture_default_str();
  gen->add_option("--N", synth.N, "Sample count (even; half per class)")->capture_default_str();
  gen->add_option("--seed", synth.seed, "Generation seed")->capture_default_str();
  gen->add_option("--neg-interval", synth.neg_interval, "Negative-class component interval")
      ->expected(2);
  gen->add_option("--pos-interval", synth.pos_interval, "Positive-class component interval")
      ->expected(2);
  gen->add_option("--out", gen_out, "Output CSV path (default <outdir>/dataset.csv)");
  gen->add_flag("--header", gen_header, "Write a header row");
  gen->add_option("--config", config_path, "JSON config file");
  gen->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  gen->callback([&] {
    const fs::path out =
        gen_out.empty() ? fs::path(outdir) / "dataset.csv" : fs::path(gen_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    const TrainingSet set = generate_synthetic(synth);
    save_csv(set, out, gen_header);
    std::cerr << "wrote " << set.size() << " samples to " << out.string() << '\n';
    json manifest = manifest_base();
    manifest["command"] = "generate";
    manifest["synthetic"] = synth;
    manifest["output"] = out.string();
    finish_manifest(manifest, out.string() + ".manifest.json");
  });

  // ---- train ----
  auto* train = app.add_subcommand("train", "Train one classifier and log its trajectory");
  std::string train_data;
  std::string train_method = "res";
  std::string dump_hessian;
  std::size_t record_every = 10;
  bool train_header = false;
  train->add_option("--data", train_data, "Training CSV (otherwise synthetic data is generated)");
  train->add_flag("--header", train_header, "Input CSV has a header row");
  train->add_option("--n", synth.n, "Synthetic feature dimension")->capture_default_str();
  train->add_option("--N", synth.N, "Synthetic sample count")->capture_default_str();
  train->add_option("--data-seed", synth.seed, "Synthetic generation seed")
      ->capture_default_str();
  train->add_option("--method", train_method, "Optimizer: res | sgd")
      ->check(CLI::IsMember({"res", "sgd"}))
      ->capture_default_str();
  cli_detail::add_res_options(train, cfg, schedule_kind, loss_name);
  train->add_option("--iters", cfg.max_iters, "Iteration count")->capture_default_str();
  train->add_option("--record-every", record_every, "Record objective every k iterations")
      ->capture_default_str();
  train->add_option("--dump-hessian", dump_hessian,
                    "Debug: dump the final curvature matrix to this CSV path");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  train->callback([&] {
    cli_detail::apply_string_options(cfg, schedule_kind, loss_name);
    cfg.validate();
    const TrainingSet set =
        train_data.empty() ? generate_synthetic(synth) : load_csv(train_data, train_header);
    const Method method = method_from_string(train_method);
    const fs::path dir = fs::path(outdir) / "train";
    fs::create_directories(dir);

    std::cerr << "training " << train_method << " for " << cfg.max_iters << " iterations on "
              << set.size() << " samples (n=" << set.dim() << ")\n";
    const RunResult rr = run_with_state(cfg, set, method, record_every);
    emit_results(std::span<const TrajectoryLog>(&rr.log, 1), dir / "trajectory.csv",
                 EmitFormat::csv);
    cli_detail::save_model_csv(rr.final_w(), dir / "model.csv");
    if (!dump_hessian.empty()) save_matrix_csv(rr.state.H.matrix(), dump_hessian);

    json manifest = manifest_base();
    manifest["command"] = "train";
    manifest["method"] = train_method;
    manifest["config"] = cfg;
    if (train_data.empty()) {
      manifest["synthetic"] = synth;
    } else {
      manifest["data"] = train_data;
    }
    manifest["record_every"] = record_every;
    manifest["skip_count"] = rr.state.skip_count;
    manifest["final_objective"] =
        rr.log.entries.empty() ? json() : json(rr.log.entries.back().objective);
    manifest["outputs"] = {(dir / "trajectory.csv").string(), (dir / "model.csv").string()};
    if (rr.log.fault) {
      manifest["fault"] = *rr.log.fault;
      std::cerr << "fault at iteration " << rr.log.fault->iteration << ": "
                << rr.log.fault->reason << " (partial trajectory emitted)\n";
      exit_code = 1;
    }
    finish_manifest(manifest, dir / "manifest.json");
  });

  // ---- eval ----
  auto* eval = app.add_subcommand("eval", "Evaluate a model CSV against a data set");
  std::string eval_model;
  std::string eval_data;
  bool eval_header = false;
  eval->add_option("--model", eval_model, "Model CSV (one row of weights)")->required();
  eval->add_option("--data", eval_data, "Evaluation CSV")->required();
  eval->add_flag("--header", eval_header, "Input CSV has a header row");
  eval->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  eval->callback([&] {
    const Vector w = cli_detail::load_model_csv(eval_model);
    const TrainingSet set = load_csv(eval_data, eval_header);
    const double acc = evaluate_accuracy(w, set);
    std::cout << detail::format_g17(acc) << '\n';
    const fs::path dir = fs::path(outdir) / "eval";
    fs::create_directories(dir);
    json manifest = manifest_base();
    manifest["command"] = "eval";
    manifest["model"] = eval_model;
    manifest["data"] = eval_data;
    manifest["accuracy"] = acc;
    finish_manifest(manifest, dir / "manifest.json");
  });

  // ---- bench-convergence ----
  auto* conv = app.add_subcommand("bench-convergence",
                                  "RES vs SGD convergence trajectories across seeds");
  std::size_t conv_budget = 2500;
  std::size_t conv_seeds = 10;
  std::uint64_t base_seed = 0;
  std::size_t sgd_batch = 1;
  conv->add_option("--n", synth.n, "Feature dimension")->capture_default_str();
  conv->add_option("--N", synth.N, "Training set size")->capture_default_str();
  conv->add_option("--budget", conv_budget, "Sample budget L*t per run")->capture_default_str();
  conv->add_option("--seeds", conv_seeds, "Number of seeds")->capture_default_str();
  conv->add_option("--base-seed", base_seed, "First seed")->capture_default_str();
  conv->add_option("--sgd-batch-size", sgd_batch, "SGD minibatch size")->capture_default_str();
  cli_detail::add_res_options(conv, cfg, schedule_kind, loss_name);
  conv->add_option("--jobs", jobs, "Worker threads (0 = hardware)")->capture_default_str();
  conv->add_option("--config", config_path, "JSON config file");
  conv->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  conv->callback([&] {
    cli_detail::apply_string_options(cfg, schedule_kind, loss_name);
    ResConfig sgd_cfg = cfg;
    sgd_cfg.batch_size = sgd_batch;
    std::vector<std::uint64_t> seeds(conv_seeds);
    for (std::size_t i = 0; i < conv_seeds; ++i) seeds[i] = base_seed + i;

    std::cerr << "convergence benchmark: n=" << synth.n << " N=" << synth.N
              << " budget=" << conv_budget << " seeds=" << conv_seeds << '\n';
    const std::vector<TrajectoryLog> logs =
        convergence_experiment(synth.n, synth.N, cfg, sgd_cfg, conv_budget, seeds, jobs);
    const fs::path dir = fs::path(outdir) / "convergence";
    const auto paths = emit_run_directory(logs, dir);

    json manifest = manifest_base();
    manifest["command"] = "bench-convergence";
    manifest["n"] = synth.n;
    manifest["N"] = synth.N;
    manifest["budget_samples"] = conv_budget;
    manifest["seeds"] = seeds;
    manifest["res_config"] = cfg;
    manifest["sgd_config"] = sgd_cfg;
    manifest["outputs"] = json::array();
    for (const auto& p : paths) manifest["outputs"].push_back(p.string());
    finish_manifest(manifest, dir / "manifest.json");
  });

  // ---- bench-histogram ----
  auto* hist = app.add_subcommand("bench-histogram",
                                  "Accuracy histograms across training replications");
  std::size_t train_count = 2500;
  std::size_t test_count = 1000;
  std::size_t replications = 100;
  bool paper_scale = false;
  std::string hist_method = "both";
  hist->add_option("--n", synth.n, "Feature dimension")->capture_default_str();
  hist->add_option("--train-N", train_count, "Training samples per replication")
      ->capture_default_str();
  hist->add_option("--test-N", test_count, "Test samples per replication")
      ->capture_default_str();
  hist->add_option("--replications", replications, "Replication count")->capture_default_str();
  hist->add_flag("--paper-scale", paper_scale,
                 "Full scale: 1000 replications, 10000 test samples");
  hist->add_option("--method", hist_method, "res | sgd | both")
      ->check(CLI::IsMember({"res", "sgd", "both"}))
      ->capture_default_str();
  hist->add_option("--base-seed", base_seed, "First replication seed")->capture_default_str();
  cli_detail::add_res_options(hist, cfg, schedule_kind, loss_name);
  hist->add_option("--sgd-batch-size", sgd_batch, "SGD minibatch size")->capture_default_str();
  hist->add_option("--jobs", jobs, "Worker threads (0 = hardware)")->capture_default_str();
  hist->add_option("--config", config_path, "JSON config file");
  hist->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  hist->callback([&] {
    cli_detail::apply_string_options(cfg, schedule_kind, loss_name);
    if (paper_scale) {
      replications = 1000;
      test_count = 10000;
    }
    const fs::path dir = fs::path(outdir) / "histogram";
    fs::create_directories(dir);
    json manifest = manifest_base();
    manifest["command"] = "bench-histogram";
    manifest["n"] = synth.n;
    manifest["train_N"] = train_count;
    manifest["test_N"] = test_count;
    manifest["replications"] = replications;
    manifest["base_seed"] = base_seed;
    manifest["outputs"] = json::array();

    const auto run_one = [&](Method method, const ResConfig& mc) {
      std::cerr << "histogram: method=" << to_string(method) << " replications=" << replications
                << '\n';
      const HistogramResult h = histogram_experiment(synth.n, train_count, test_count, mc, method,
                                                     replications, base_seed, jobs);
      const fs::path p = dir / (std::string(to_string(method)) + "_hist.csv");
      emit_results(h, p, EmitFormat::csv);
      manifest["outputs"].push_back(p.string());
      manifest["outputs"].push_back(p.string() + ".json");
      manifest[std::string(to_string(method)) + "_mean_accuracy"] = h.mean;
      manifest[std::string(to_string(method)) + "_config"] = mc;
    };
    if (hist_method == "res" || hist_method == "both") run_one(Method::res, cfg);
    if (hist_method == "sgd" || hist_method == "both") {
      ResConfig sgd_cfg = cfg;
      sgd_cfg.batch_size = sgd_batch;
      run_one(Method::sgd, sgd_cfg);
    }
    finish_manifest(manifest, dir / "manifest.json");
  });

  // ---- bench-ablation ----
  auto* abl = app.add_subcommand(
      "bench-ablation", "Constant-step comparison: SGD vs RES vs non-regularized BFGS");
  std::size_t abl_budget = 10000;
  std::size_t abl_seeds = 20;
  Eigen::Index abl_n = 10;
  abl->add_option("--n", abl_n, "Feature dimension")->capture_default_str();
  abl->add_option("--N", synth.N, "Training set size")->capture_default_str();
  abl->add_option("--budget", abl_budget, "Sample budget per run")->capture_default_str();
  abl->add_option("--seeds", abl_seeds, "Number of base seeds")->capture_default_str();
  abl->add_option("--base-seed", base_seed, "First seed")->capture_default_str();
  abl->add_option("--jobs", jobs, "Worker threads (0 = hardware)")->capture_default_str();
  abl->add_option("--config", config_path, "JSON config file");
  abl->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  abl->callback([&] {
    const fs::path dir = fs::path(outdir) / "ablation";
    std::vector<TrajectoryLog> all_logs;
    std::size_t fault_count = 0;
    std::cerr << "ablation: n=" << abl_n << " budget=" << abl_budget << " seeds=" << abl_seeds
              << '\n';
    for (std::size_t i = 0; i < abl_seeds; ++i) {
      auto logs = regularization_ablation(abl_n, synth.N, abl_budget, base_seed + i, jobs);
      for (auto& log : logs) {
        if (log.fault) ++fault_count;
        all_logs.push_back(std::move(log));
      }
    }
    const auto paths = emit_run_directory(all_logs, dir);
    json manifest = manifest_base();
    manifest["command"] = "bench-ablation";
    manifest["n"] = abl_n;
    manifest["N"] = synth.N;
    manifest["budget_samples"] = abl_budget;
    manifest["base_seed"] = base_seed;
    manifest["seeds"] = abl_seeds;
    manifest["faulted_runs"] = fault_count;
    manifest["outputs"] = json::array();
    for (const auto& p : paths) manifest["outputs"].push_back(p.string());
    finish_manifest(manifest, dir / "manifest.json");
  });

  // ---- diagnostics ----
  auto* diag = app.add_subcommand("diagnostics",
                                  "Empirical eigenvalue/gradient bounds and rate condition");
  std::size_t probes = 100;
  diag->add_option("--n", synth.n, "Feature dimension")->capture_default_str();
  diag->add_option("--N", synth.N, "Training set size")->capture_default_str();
  diag->add_option("--data-seed", synth.seed, "Synthetic generation seed")
      ->capture_default_str();
  diag->add_option("--probes", probes, "Probe points")->capture_default_str();
  cli_detail::add_res_options(diag, cfg, schedule_kind, loss_name);
  diag->add_option("--config", config_path, "JSON config file");
  diag->add_option("--outdir", outdir, "Output directory root (env RESSVM_OUT)")
      ->capture_default_str();
  diag->callback([&] {
    cli_detail::apply_string_options(cfg, schedule_kind, loss_name);
    const TrainingSet set = generate_synthetic(synth);
    Rng rng(derive_seed(cfg.seed, 1000));
    const ConvergenceDiagnostics d = estimate_diagnostics(cfg, set, probes, rng);
    std::cout << "m_tilde " << detail::format_g17(d.m_tilde) << '\n'
              << "M_tilde " << detail::format_g17(d.M_tilde) << '\n'
              << "s_sq_estimate " << detail::format_g17(d.s_sq_estimate) << '\n'
              << "rate_condition_ok " << (d.rate_condition_ok ? "true" : "false") << '\n';
    const fs::path dir = fs::path(outdir) / "diagnostics";
    fs::create_directories(dir);
    json manifest = manifest_base();
    manifest["command"] = "diagnostics";
    manifest["config"] = cfg;
    manifest["synthetic"] = synth;
    manifest["probes"] = probes;
    manifest["m_tilde"] = d.m_tilde;
    manifest["M_tilde"] = d.M_tilde;
    manifest["s_sq_estimate"] = d.s_sq_estimate;
    manifest["rate_condition_ok"] = d.rate_condition_ok;
    finish_manifest(manifest, dir / "manifest.json");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return exit_code;
}

}  // namespace ressvm
