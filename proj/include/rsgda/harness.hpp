#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "rsgda/errors.hpp"
#include "rsgda/optimizers.hpp"

namespace rsgda::harness {

const char* version() noexcept;

/// Process exit codes shared by the CLI and the C API.
enum ExitCode : int {
  kExitOk = 0,
  kExitGeneric = 1,
  kExitConfig = 2,
  kExitConstraint = 3,
  kExitCheck = 4,
};

int exit_code_for(ErrorKind kind) noexcept;

struct CliOptions {
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::vector<std::uint64_t>> seeds;
  bool waive_constraints = false;
};

struct OptimizerSpec {
  std::string label;
  OptKind kind;
  nlohmann::json raw;    // the optimizer object as configured
  nlohmann::json steps;  // effective steps object (entry override or top level)
};

struct RunConfig {
  nlohmann::json problem;  // {"name": ..., "params": {...}}
  std::vector<OptimizerSpec> optimizers;
  std::int64_t iters = 0;
  std::vector<std::uint64_t> seeds;
  std::string seeds_source;  // "config", "cli" or "default"
  DiagConfig diag;
  std::optional<std::filesystem::path> output_dir;
  bool waive_constraints = false;
  nlohmann::json init;  // null or {"x": [...], "y": [...]} / {"x_csv": ..., "y_csv": ...}
  nlohmann::json extra;  // command-specific sections: compare, pselect, check
  std::filesystem::path base_dir;  // directory of the config file
  std::string hash;  // FNV-1a over the canonical effective config
};

/// Parses and validates a config document. Every failure is a config error.
RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                       const CliOptions& cli);
RunConfig load_config(const std::filesystem::path& path, const CliOptions& cli);

/// Builds the problem named in the config. Relative data paths resolve
/// against base_dir.
ProblemPtr build_problem(const nlohmann::json& spec, const std::filesystem::path& base_dir);

OptKind build_optimizer(const nlohmann::json& spec);

/// The step plan for `opt` on `problem`, including p for RSGDA.
StepPlan build_plan(const nlohmann::json& steps, const OptimizerSpec& opt, const Problem& problem);

JointPoint build_init(const nlohmann::json& init, const Problem& problem, std::uint64_t seed,
                      const std::filesystem::path& base_dir);

/// Stream ids used per seed.
inline constexpr std::uint64_t kStreamOptimizer = 1;
inline constexpr std::uint64_t kStreamInit = 2;
inline constexpr std::uint64_t kStreamCheck = 3;

std::filesystem::path resolve_out_dir(const RunConfig& cfg);

/// Trace CSV: provenance comment line, fixed header, one row per record.
std::string trace_csv(const std::vector<TraceRecord>& trace, const std::string& config_hash,
                      std::uint64_t seed);
inline constexpr const char* kTraceHeader = "k,branch,alpha,eta,p,grad_x_norm,grad_y_norm,h,V,dist,loss";

/// %.17g formatting used for every float written to disk.
std::string format_double(double v);

void write_text(const std::filesystem::path& path, const std::string& text);
/// Pretty JSON with sorted keys and a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

nlohmann::json cmd_run(const std::filesystem::path& config_path, const CliOptions& cli);
nlohmann::json cmd_compare(const std::filesystem::path& config_path, const CliOptions& cli);
nlohmann::json cmd_pselect(const std::filesystem::path& config_path, const CliOptions& cli);
/// Returns the report; report["passed"] is false when any check failed.
nlohmann::json cmd_check(const std::filesystem::path& config_path, const CliOptions& cli);

}  // namespace rsgda::harness
