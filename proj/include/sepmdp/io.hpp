#pragma once

#include "sepmdp/sepmdp.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sepmdp::io {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kVersion = "0.1.0";

/// Model file could not be parsed or fails validation; one message per problem.
class ModelError : public InvalidModel {
 public:
  explicit ModelError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

SeparableSpec<double> spec_from_json(const json& j);
json spec_to_json(const SeparableSpec<double>& spec);

/// Parses model text; syntax errors report the byte offset.
SeparableSpec<double> parse_model(std::string_view text);
SeparableSpec<double> load_model(const std::filesystem::path& path);
void save_model(const SeparableSpec<double>& spec, const std::filesystem::path& path);

/// `log:A:B:K` (K log-spaced points) or `lin:A:B:K`.
std::vector<double> parse_eps_grid(std::string_view text);

/// `const:a` or a comma-separated action list of length n_states.
Policy parse_policy(std::string_view text, Index n_states, Index n_actions);

/// Everything needed to re-run a command.
struct RunManifest {
  std::string command;
  json input;       // {"model": path} or {"sampler": {...}}
  json parameters;  // fully resolved
  std::string timestamp;
  std::string version{kVersion};
};

json to_json(const RunManifest& m);

/// UTC ISO-8601 time, taken from SOURCE_DATE_EPOCH when set.
std::string current_timestamp();

json baseline_report(const RunManifest& manifest, const SeparableSpec<double>& spec,
                     const BaselineSolution<double>& baseline, double acoe_norm, const Policy& profile,
                     const std::optional<PolicySolution<double>>& brute);
json sweep_report(const RunManifest& manifest, const SweepReport<double>& report);
std::string sweep_csv(const SweepReport<double>& report);
json expansion_report(const RunManifest& manifest, const ExpansionReport<double>& report);
json simulation_report(const RunManifest& manifest, const Policy& pi, const SimEstimate<double>& est);

/// Serialized report text, newline-terminated.
std::string dump(const json& j);

}  // namespace sepmdp::io
