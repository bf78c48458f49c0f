#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kramers/io.hpp"

namespace kramers {

struct Command {
  std::string subcommand;
  std::optional<std::filesystem::path> config_path;
  std::optional<std::filesystem::path> out_dir;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
};

inline constexpr const char* kOutDirEnv = "KRAMERS_OUT_DIR";
inline constexpr const char* kSeedEnv = "KRAMERS_SEED";

const std::vector<std::string>& subcommands();

/// Defaults < KRAMERS_SEED < config file < --set < --seed/--workers; the grid
/// step is then aligned to the memory delays.
Json resolve_config(const Command& cmd);

/// Output directory: --out, else $KRAMERS_OUT_DIR, else ./kramers-out.
std::filesystem::path resolve_out_dir(const Command& cmd);

/// Runs one command. Returns the process exit status; on failure prints a
/// JSON error object to `err` and removes the files this run created.
int dispatch(const Command& cmd, std::ostream& out, std::ostream& err);

/// Parses argv (CLI11) and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kramers
