#pragma once

#include "geoinv/cli/config.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

namespace geoinv::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitSchema = 2;

struct RunOptions {
    /// Overrides the config's "output" entry when set.
    std::optional<std::filesystem::path> out;
    std::size_t jobs = 1;
    /// Overrides the config's "seed" entry when set.
    std::optional<std::uint64_t> seed;
};

/// Runs one experiment. Artifacts, manifest.json and (on failure) error.json go
/// to the output directory; the error record is also written to `err`.
int run(const std::filesystem::path& config_path, const RunOptions& options, std::ostream& log, std::ostream& err);

/// Same, from an already loaded config (used by the acceptance suite).
int run_config(const Json& config, const RunOptions& options, std::ostream& log, std::ostream& err,
               const std::string& config_label = "<memory>");

/// Prints a JSON violation report. Exit 0 whenever the file could be read and
/// parsed as JSON, 2 otherwise; validity is the report's "valid" field.
int validate(const std::filesystem::path& config_path, const std::optional<std::filesystem::path>& cache_dir,
             std::ostream& out);

/// Expands the cartesian product of the config's plan.vary lists into one
/// config per combination (out/plan_NNN.json) plus out/plan.csv.
int plan(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, std::ostream& log,
         std::ostream& err);

}  // namespace geoinv::cli
