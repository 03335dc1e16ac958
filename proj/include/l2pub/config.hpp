#pragma once

// JSON experiment files. One file fully determines a run; see README for the
// schema. Every rejection is a ConfigError whose field() is a dotted path
// such as "price.sigma" or "policies[1].n".

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "l2pub/cost_model.hpp"
#include "l2pub/dp_oracle.hpp"
#include "l2pub/policies.hpp"
#include "l2pub/simulator.hpp"

namespace l2pub {

struct PolicySpec {
  std::string name;
  std::string kind;
  nlohmann::json params;
  std::string field;  // location in the config, for error messages
};

struct RunConfig {
  SimConfig sim;
  std::int64_t episodes = 100;
  std::vector<PolicySpec> policies;
  std::optional<std::string> compare_a;
  std::optional<std::string> compare_b;
  std::optional<std::filesystem::path> trace_path;
  nlohmann::json oracle;  // null when absent
};

// `base_dir` resolves relative trace paths. Reading a trace that is missing
// throws IoError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::filesystem::path& base_dir);
RunConfig load_run_config(const std::filesystem::path& path);

DelayCostSpec parse_delay(const nlohmann::json& j, const std::string& field);
LatticePriceProcess parse_lattice(const nlohmann::json& j, const std::string& field);

// Builds the policy against the simulator settings it will run under.
PolicyPtr build_policy(const PolicySpec& spec, const SimConfig& sim);

const PolicySpec& find_policy(const RunConfig& cfg, const std::string& name);

}  // namespace l2pub
