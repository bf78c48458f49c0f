#pragma once

#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "kramers/dde.hpp"
#include "kramers/exit_theory.hpp"
#include "kramers/levy.hpp"
#include "kramers/sdde.hpp"

namespace kramers {

using Json = nlohmann::ordered_json;

/// Shortest round-trip decimal; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double v);

/// Comma-separated file with a header row. Throws IoError on failure.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::vector<std::string> header);
  void row(const std::vector<std::string>& cells);
  void row(std::initializer_list<double> values);
  void close();

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

void write_path_csv(const std::filesystem::path& path, const GridPath& path_values, bool from_zero = false);

// Configuration documents. Every section has a complete default; user files
// and --set overrides may only touch keys that exist in the defaults.
Json default_config();
/// Recursive merge of `overlay` into `base`; throws ConfigError naming the
/// first unknown key.
void merge_config(Json& base, const Json& overlay, const std::string& where = "");
/// Applies "dotted.key=value"; the value is parsed as JSON, falling back to a
/// plain string.
void apply_override(Json& config, const std::string& assignment);
Json load_config_file(const std::filesystem::path& path);

MemoryMeasure measure_from_json(const Json& j);
Json to_json(const MemoryMeasure& m);
NoiseSpec noise_from_json(const Json& j);
Json to_json(const NoiseSpec& s);
DiffusionCoefficient coefficient_from_json(const Json& j);
SimParams sim_from_json(const Json& j);

/// {e_minus, e_plus, nu_bar_E, lambda_eps, mean_pred, Pi: [a_jump, a_cont, b_cont, b_jump], G, branch}.
Json prediction_report(const Thresholds& th, const ExitPrediction& p, const LocationMixture& mix,
                       const std::optional<GaussianComparison>& gauss);

}  // namespace kramers
