#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>

#include "ressvm/dataset.hpp"
#include "ressvm/optimizer.hpp"
#include "ressvm/rng.hpp"
#include "ressvm/version.hpp"

// JSON (de)serialization for configs and logs. Field names mirror the type
// definitions one-to-one; deserialization starts from the type's defaults and
// overrides only the keys present, so partial config files compose with flag
// overrides.

namespace ressvm {

using nlohmann::json;

inline void to_json(json& j, const StepSchedule& s) {
  if (s.kind == StepSchedule::Kind::decaying) {
    j = json{{"variant", "decaying"}, {"eps0", s.eps0}, {"tau", s.tau}};
  } else {
    j = json{{"variant", "constant"}, {"eps", s.eps}};
  }
}

inline void from_json(const json& j, StepSchedule& s) {
  const std::string variant = j.value("variant", "decaying");
  if (variant == "decaying") {
    s.kind = StepSchedule::Kind::decaying;
    s.eps0 = j.value("eps0", s.eps0);
    s.tau = j.value("tau", s.tau);
  } else if (variant == "constant") {
    s.kind = StepSchedule::Kind::constant;
    s.eps = j.value("eps", s.eps);
  } else {
    throw std::invalid_argument("StepSchedule: unknown variant '" + variant + "'");
  }
}

inline void to_json(json& j, const ResConfig& c) {
  j = json{{"lambda", c.lambda},       {"delta", c.delta},
           {"gamma", c.gamma},         {"batch_size", c.batch_size},
           {"schedule", c.schedule},   {"max_iters", c.max_iters},
           {"seed", c.seed},           {"loss", std::string(to_string(c.loss))}};
}

inline void from_json(const json& j, ResConfig& c) {
  c.lambda = j.value("lambda", c.lambda);
  c.delta = j.value("delta", c.delta);
  c.gamma = j.value("gamma", c.gamma);
  c.batch_size = j.value("batch_size", c.batch_size);
  if (j.contains("schedule")) c.schedule = j.at("schedule").get<StepSchedule>();
  c.max_iters = j.value("max_iters", c.max_iters);
  c.seed = j.value("seed", c.seed);
  if (j.contains("loss")) c.loss = loss_kind_from_string(j.at("loss").get<std::string>());
}

inline void to_json(json& j, const SyntheticSpec& s) {
  j = json{{"n", s.n},
           {"N", s.N},
           {"neg_interval", s.neg_interval},
           {"pos_interval", s.pos_interval},
           {"seed", s.seed}};
}

inline void from_json(const json& j, SyntheticSpec& s) {
  s.n = j.value("n", s.n);
  s.N = j.value("N", s.N);
  s.neg_interval = j.value("neg_interval", s.neg_interval);
  s.pos_interval = j.value("pos_interval", s.pos_interval);
  s.seed = j.value("seed", s.seed);
}

inline void to_json(json& j, const TrajectoryEntry& e) {
  j = json{{"t", e.t}, {"samples_processed", e.samples_processed}, {"objective", e.objective}};
}

inline void to_json(json& j, const RunFault& f) {
  j = json{{"iteration", f.iteration}, {"reason", f.reason}};
}

inline void to_json(json& j, const TrajectoryLog& log) {
  j = json{{"method", std::string(to_string(log.method))},
           {"seed", log.seed},
           {"config_snapshot", log.config_snapshot},
           {"entries", log.entries}};
  if (log.fault) {
    j["fault"] = *log.fault;
  } else {
    j["fault"] = nullptr;
  }
}

// Common manifest stem: tool identity plus the generator behind every stream.
inline json manifest_base() {
  return json{{"tool", kToolName}, {"version", kToolVersion}, {"generator", kGeneratorId}};
}

inline void write_json_file(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_json_file: cannot open " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write_json_file: write failed for " + path.string());
}

inline json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_json_file: cannot open " + path.string());
  json j;
  in >> j;
  return j;
}

}  // namespace ressvm
