#pragma once

#include <string>
#include <string_view>

#include "json.hpp"

#include "kfat/simulate.hpp"
#include "kfat/tuner.hpp"

namespace kfat {

using json = nlohmann::json;

/// Raised for malformed configuration documents.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

MatrixXd matrix_from_json(const json& j, std::string_view name);
json matrix_to_json(const MatrixXd& m);

/// Either {"preset": "tracking_1d" | "tracking_2d", "sensor_kind"?: ...} or
/// explicit {"A", "G", "Gamma", "H", "sensor_kind"} with row-major nested
/// arrays. sensor_kind is "integrating" or "non_integrating".
ContinuousModel model_from_json(const json& j);
json model_to_json(const ContinuousModel& m);

NoiseIntensities noise_from_json(const json& j);
json noise_to_json(const NoiseIntensities& n);

/// Ground-truth intensities used when a config omits them: V=1, W=0.1 for
/// the 1D tracker and V=(1,2), W=(0.2,0.1) for the 2D tracker.
NoiseIntensities default_truth(const ContinuousModel& model);

/// Reads {"system": ..., "scenario": ...}. Missing scenario fields take the
/// ScenarioConfig defaults; candidate_noise defaults to true_noise.
ScenarioConfig scenario_from_json(const json& root);
/// Inverse of scenario_from_json (always writes explicit matrices).
json scenario_to_json(const ScenarioConfig& s);

/// Reads {"system", "scenario", "tuner"}.
TuneConfig tune_config_from_json(const json& root);
json tune_config_to_json(const TuneConfig& cfg);

json tune_result_to_json(const TuneResult& r);

/// One row per evaluation: iteration, q_0..q_{d-1}, cost_dt=<dt>..., cost.
std::string history_csv(const TuneResult& r, const std::vector<double>& dt_list);

/// 17 significant digits, '.' as decimal separator, locale independent.
std::string format_double(double v);

json load_json_file(const std::string& path);

}  // namespace kfat
