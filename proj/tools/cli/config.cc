// Copyright 2026 The LMI Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli/config.h"

#include <cstdlib>
#include <fstream>
#include <set>

#include "lmi/error.h"

#ifndef LMI_DEFAULT_PRESET_DIR
#define LMI_DEFAULT_PRESET_DIR "presets"
#endif

namespace lmi::cli {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kInvalidArgument, path + ": " + what);
}

// Reads the members of one JSON object and rejects any it was not asked
// about.
class ObjectReader {
 public:
  ObjectReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) fail(display(), "expected an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return obj_.contains(key);
  }

  std::string field(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return obj_.at(key);
  }

  void number(const std::string& key, double& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_number()) fail(field(key), "expected a number");
    out = v.get<double>();
  }

  template <typename Int>
  void integer(const std::string& key, Int& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (v.is_number_unsigned()) {
      out = static_cast<Int>(v.get<std::uint64_t>());
    } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      out = static_cast<Int>(v.get<std::int64_t>());
    } else {
      fail(field(key), "expected a non-negative integer");
    }
  }

  void string(const std::string& key, std::string& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_string()) fail(field(key), "expected a string");
    out = v.get<std::string>();
  }

  void boolean(const std::string& key, bool& out) {
    if (!has(key)) return;
    const json& v = obj_.at(key);
    if (!v.is_boolean()) fail(field(key), "expected true or false");
    out = v.get<bool>();
  }

  void finish() const {
    for (const auto& [key, value] : obj_.items()) {
      if (!seen_.contains(key)) fail(field(key), "unknown key");
    }
  }

 private:
  std::string display() const { return path_.empty() ? "<root>" : path_; }

  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

// Runs `check` and prefixes any validation message with `path`.
template <typename F>
void validated(const std::string& path, F&& check) {
  try {
    check();
  } catch (const Error& e) {
    fail(path, e.message());
  }
}

template <typename T, typename Parse>
T parse_enum(ObjectReader& r, const std::string& key, T fallback, Parse&& parse) {
  std::string text;
  r.string(key, text);
  if (text.empty()) return fallback;
  try {
    return parse(text);
  } catch (const Error& e) {
    fail(r.field(key), e.message());
  }
}

void read_setup(const json& j, SetupConfig& s) {
  ObjectReader r(j, "setup");
  s.topology = parse_enum(r, "topology", s.topology, parse_topology);
  r.number("t1", s.t1);
  r.number("t2", s.t2);
  r.number("v_thermal", s.v_thermal);
  r.number("r_amp", s.r_amp);
  r.number("probe_phase", s.probe_phase);
  r.finish();
  validated("setup", [&] { s.validate(); });
}

void read_process(const json& j, ProcessParams& p) {
  ObjectReader r(j, "process");
  r.number("phi", p.phi);
  if (r.has("q") && r.has("w")) fail("process", "give either q or w, not both");
  if (r.has("q")) {
    double q = 1.0;
    r.number("q", q);
    if (!(q > 0)) fail("process.q", "must be positive");
    p.w = std::log(q);
  }
  r.number("w", p.w);
  r.number("alpha", p.alpha);
  r.number("d", p.d);
  r.number("beta", p.beta);
  r.finish();
  validated("process", [&] { p.validate(); });
}

NoiseParams read_noise(const json& j) {
  NoiseParams n;
  ObjectReader r(j, "noise");
  r.number("t_c", n.t_c);
  r.number("v_c", n.v_c);
  r.finish();
  validated("noise", [&] { n.validate(); });
  return n;
}

void read_measurement(const json& j, MeasurementPlan& plan) {
  ObjectReader r(j, "measurement");
  plan.scheme = parse_enum(r, "scheme", plan.scheme, parse_scheme);
  r.integer("n_samples", plan.n_samples);
  r.integer("seed", plan.seed);
  r.finish();
  validated("measurement", [&] { plan.validate(); });
}

void read_monte_carlo(const json& j, MonteCarloConfig& mc) {
  ObjectReader r(j, "monte_carlo");
  r.integer("m_reps", mc.m_reps);
  r.integer("base_seed", mc.base_seed);
  r.boolean("exact_moments", mc.exact_moments);
  r.integer("jackknife_blocks", mc.jackknife_blocks);
  r.integer("threads", mc.threads);
  if (r.has("estimators")) {
    const json& list = r.raw("estimators");
    if (!list.is_array()) fail("monte_carlo.estimators", "expected an array of names");
    mc.estimators.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string path = "monte_carlo.estimators[" + std::to_string(i) + "]";
      if (!list[i].is_string()) fail(path, "expected a string");
      try {
        mc.estimators.push_back(EstimatorSpec::parse(list[i].get<std::string>()));
      } catch (const Error& e) {
        fail(path, e.message());
      }
    }
  }
  r.finish();
  if (mc.m_reps < 2) fail("monte_carlo.m_reps", "must be at least 2");
}

}  // namespace

RunConfig parse_run_config(const json& doc) {
  RunConfig cfg;
  cfg.mc.m_reps = 500;
  cfg.mc.estimators = {EstimatorSpec::parse("cov"), EstimatorSpec::parse("mean")};
  cfg.estimate_method = EstimatorSpec::parse("cov");

  ObjectReader root(doc, "");
  if (root.has("setup")) read_setup(root.raw("setup"), cfg.mc.setup);
  if (root.has("process")) read_process(root.raw("process"), cfg.mc.process);
  if (root.has("noise")) cfg.mc.noise = read_noise(root.raw("noise"));
  if (root.has("measurement")) read_measurement(root.raw("measurement"), cfg.mc.plan);
  if (root.has("monte_carlo")) read_monte_carlo(root.raw("monte_carlo"), cfg.mc);
  if (root.has("sweep")) {
    ObjectReader r(root.raw("sweep"), "sweep");
    cfg.axis = parse_enum(r, "axis", std::optional<SweepAxis>{},
                          [](std::string_view s) { return std::optional(parse_axis(s)); });
    r.string("grid", cfg.grid);
    r.finish();
    validated("sweep.grid", [&] { parse_grid(cfg.grid); });
  }
  if (root.has("estimate")) {
    ObjectReader r(root.raw("estimate"), "estimate");
    cfg.estimate_method = parse_enum(r, "method", cfg.estimate_method, EstimatorSpec::parse);
    r.finish();
  }
  if (root.has("fisher")) {
    ObjectReader r(root.raw("fisher"), "fisher");
    if (r.has("parameters")) {
      const json& list = r.raw("parameters");
      if (!list.is_array() || list.empty()) fail("fisher.parameters", "expected a non-empty array");
      cfg.fisher_parameters.clear();
      for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string path = "fisher.parameters[" + std::to_string(i) + "]";
        static const std::set<std::string> kKnown = {"phi", "w", "q", "alpha", "d", "beta"};
        if (!list[i].is_string() || !kKnown.contains(list[i].get<std::string>())) {
          fail(path, "expected one of phi, w, q, alpha, d, beta");
        }
        cfg.fisher_parameters.push_back(list[i].get<std::string>());
      }
    }
    r.finish();
  }
  root.string("output", cfg.output);
  root.finish();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kInvalidArgument, "cannot open config '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, path.string() + ": " + e.what());
  }
  return parse_run_config(doc);
}

std::filesystem::path preset_dir() {
  if (const char* env = std::getenv("LMI_PRESET_DIR"); env != nullptr && *env != '\0') {
    return env;
  }
  return LMI_DEFAULT_PRESET_DIR;
}

std::filesystem::path resolve_preset(std::string_view name) {
  std::filesystem::path p(name);
  if (p.has_extension() && std::filesystem::exists(p)) return p;
  p = preset_dir() / (std::string(name) + ".json");
  if (!std::filesystem::exists(p)) {
    throw Error(ErrorCode::kInvalidArgument, "unknown preset '" + std::string(name) + "'");
  }
  return p;
}

}  // namespace lmi::cli
