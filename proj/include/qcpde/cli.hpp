#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace qcpde::cli {

enum class Command { SolveBeltrami, SolveSemilinear, SolvePoisson, Map, Verify, Export };

const char* to_string(Command c);
Command parse_command(const std::string& name);  // ConfigError on unknown names

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;

inline constexpr std::uint64_t kDefaultSeed = 20240607;

/// One job: the parsed config document plus the resolved output directory.
/// Relative file paths inside the document are resolved against base_dir.
struct JobConfig {
    Command command = Command::SolveBeltrami;
    nlohmann::json doc;
    std::filesystem::path base_dir;
    std::filesystem::path out_dir;
    std::uint64_t seed = kDefaultSeed;
    std::string format = "csv";

    /// Reads the JSON document at `config`; `out` and `seed` override the
    /// document's "output" and "seed" keys.
    static JobConfig load(Command command, const std::filesystem::path& config,
                          const std::filesystem::path& out, std::optional<std::uint64_t> seed);
};

/// Runs a job and returns its exit status.  Diagnostics go to `diag`, one
/// JSON object per line.
int run(const JobConfig& job, std::ostream& diag);

/// `<tool> <command> --config path [--out dir] [--seed u64] [--format csv]`.
int run(const std::vector<std::string>& args, std::ostream& diag);

}  // namespace qcpde::cli
