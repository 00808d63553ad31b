#include "kfat/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace kfat {

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

VectorXd vector_from_json(const json& j, std::string_view name) {
  if (!j.is_array()) throw ConfigError(std::string(name) + " must be an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(std::string(name) + " must contain only numbers");
    v[static_cast<Index>(i)] = j[i].get<double>();
  }
  return v;
}

json vector_to_json(const VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

SensorKind sensor_kind_from_string(const std::string& s) {
  if (s == "integrating") return SensorKind::Integrating;
  if (s == "non_integrating") return SensorKind::NonIntegrating;
  throw ConfigError("sensor_kind must be \"integrating\" or \"non_integrating\", got \"" + s + "\"");
}

const char* to_string(SensorKind k) {
  return k == SensorKind::Integrating ? "integrating" : "non_integrating";
}

CostKind metric_from_string(const std::string& s) {
  if (s == "jnees") return CostKind::JNEES;
  if (s == "jnis") return CostKind::JNIS;
  throw ConfigError("metric must be jnees or jnis, got " + s);
}

const char* to_string(CostKind k) { return k == CostKind::JNIS ? "jnis" : "jnees"; }

SurrogateFamily family_from_string(const std::string& s) {
  if (s == "gp") return SurrogateFamily::GP;
  if (s == "tp") return SurrogateFamily::TP;
  throw ConfigError("surrogate must be gp or tp, got " + s);
}

Smoothness smoothness_from_string(const std::string& s) {
  if (s == "matern32") return Smoothness::Matern32;
  if (s == "matern52") return Smoothness::Matern52;
  throw ConfigError("smoothness must be matern32 or matern52, got " + s);
}

Acquisition acquisition_from_string(const std::string& s) {
  if (s == "ei") return Acquisition::ExpectedImprovement;
  if (s == "ucb") return Acquisition::UpperConfidenceBound;
  throw ConfigError("acquisition must be ei or ucb, got " + s);
}

// {"V": [lo, hi], "W": [lo, hi]} broadcast per channel, or {"lo": [...], "hi": [...]}.
Bounds bounds_from_json(const json& j, const ContinuousModel& model) {
  Bounds b = default_bounds(model);
  if (j.contains("lo") || j.contains("hi")) {
    b.lo = vector_from_json(j.at("lo"), "tuner.bounds.lo");
    b.hi = vector_from_json(j.at("hi"), "tuner.bounds.hi");
    return b;
  }
  auto pair = [&](const char* key, Index offset, Index count) {
    if (!j.contains(key)) return;
    const VectorXd p = vector_from_json(j.at(key), key);
    if (p.size() != 2) throw ConfigError(std::string("tuner.bounds.") + key + " must be [lo, hi]");
    b.lo.segment(offset, count).setConstant(p[0]);
    b.hi.segment(offset, count).setConstant(p[1]);
  };
  pair("V", 0, model.nw());
  pair("W", model.nw(), model.nz());
  return b;
}

}  // namespace

MatrixXd matrix_from_json(const json& j, std::string_view name) {
  if (!j.is_array() || j.empty()) throw ConfigError(std::string(name) + " must be a nonempty nested array");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].is_array() ? j[0].size() : 0;
  if (cols == 0) throw ConfigError(std::string(name) + " rows must be nonempty arrays");
  MatrixXd m(static_cast<Index>(rows), static_cast<Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw ConfigError(std::string(name) + " is ragged");
    }
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(std::string(name) + " must contain only numbers");
      m(static_cast<Index>(r), static_cast<Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const MatrixXd& m) {
  json rows = json::array();
  for (Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

ContinuousModel model_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("system must be an object");
  ContinuousModel m;
  if (j.contains("preset")) {
    const auto preset = j.at("preset").get<std::string>();
    if (preset == "tracking_1d") {
      m = tracking_1d();
    } else if (preset == "tracking_2d") {
      m = tracking_2d();
    } else {
      throw ConfigError("unknown system preset: " + preset);
    }
  } else {
    m.A = matrix_from_json(j.at("A"), "A");
    m.G = matrix_from_json(j.at("G"), "G");
    m.Gamma = matrix_from_json(j.at("Gamma"), "Gamma");
    m.H = matrix_from_json(j.at("H"), "H");
  }
  if (j.contains("sensor_kind")) m.sensor_kind = sensor_kind_from_string(j.at("sensor_kind").get<std::string>());
  try {
    m.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
  return m;
}

json model_to_json(const ContinuousModel& m) {
  return {{"A", matrix_to_json(m.A)},
          {"G", matrix_to_json(m.G)},
          {"Gamma", matrix_to_json(m.Gamma)},
          {"H", matrix_to_json(m.H)},
          {"sensor_kind", to_string(m.sensor_kind)}};
}

NoiseIntensities noise_from_json(const json& j) {
  if (!j.is_object() || !j.contains("V") || !j.contains("W")) {
    throw ConfigError("noise intensities need \"V\" and \"W\" arrays");
  }
  return {vector_from_json(j.at("V"), "V"), vector_from_json(j.at("W"), "W")};
}

json noise_to_json(const NoiseIntensities& n) { return {{"V", vector_to_json(n.V)}, {"W", vector_to_json(n.W)}}; }

NoiseIntensities default_truth(const ContinuousModel& model) {
  if (model.nw() == 2 && model.nz() == 2) {
    return {(VectorXd(2) << 1.0, 2.0).finished(), (VectorXd(2) << 0.2, 0.1).finished()};
  }
  return {VectorXd::Constant(model.nw(), 1.0), VectorXd::Constant(model.nz(), 0.1)};
}

ScenarioConfig scenario_from_json(const json& root) {
  ScenarioConfig s;
  s.model = model_from_json(root.value("system", json{{"preset", "tracking_1d"}}));
  const json sc = root.value("scenario", json::object());
  s.true_noise = sc.contains("true_noise") ? noise_from_json(sc.at("true_noise")) : default_truth(s.model);
  s.candidate_noise = sc.contains("candidate_noise") ? noise_from_json(sc.at("candidate_noise")) : s.true_noise;
  s.dt = get_or<double>(sc, "dt", s.dt);
  s.steps = get_or<Index>(sc, "steps", s.steps);
  s.runs = get_or<Index>(sc, "runs", s.runs);
  s.master_seed = get_or<std::uint64_t>(sc, "seed", s.master_seed);
  s.dt_min = get_or<double>(sc, "dt_min", s.dt_min);
  s.dt_max = get_or<double>(sc, "dt_max", s.dt_max);
  if (sc.contains("x0")) s.x0 = vector_from_json(sc.at("x0"), "x0");
  if (sc.contains("P0")) s.P0 = matrix_from_json(sc.at("P0"), "P0");
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  return s;
}

json scenario_to_json(const ScenarioConfig& s) {
  json sc = {{"true_noise", noise_to_json(s.true_noise)},
             {"candidate_noise", noise_to_json(s.candidate_noise)},
             {"dt", s.dt},
             {"steps", s.steps},
             {"runs", s.runs},
             {"seed", s.master_seed},
             {"dt_min", s.dt_min},
             {"dt_max", s.dt_max}};
  if (s.x0.size() > 0) sc["x0"] = vector_to_json(s.x0);
  if (s.P0.size() > 0) sc["P0"] = matrix_to_json(s.P0);
  return {{"system", model_to_json(s.model)}, {"scenario", sc}};
}

TuneConfig tune_config_from_json(const json& root) {
  TuneConfig c;
  c.scenario = scenario_from_json(root);
  const json t = root.value("tuner", json::object());
  c.bounds = bounds_from_json(t.value("bounds", json::object()), c.scenario.model);
  if (t.contains("dt_list")) {
    const VectorXd d = vector_from_json(t.at("dt_list"), "dt_list");
    c.dt_list.assign(d.data(), d.data() + d.size());
  }
  c.metric = metric_from_string(get_or<std::string>(t, "metric", "jnees"));
  c.n_seed = get_or<int>(t, "n_seed", c.n_seed);
  c.n_iter = get_or<int>(t, "n_iter", c.n_iter);
  c.family = family_from_string(get_or<std::string>(t, "surrogate", "gp"));
  c.tp_dof = get_or<double>(t, "tp_dof", c.tp_dof);
  c.smoothness = smoothness_from_string(get_or<std::string>(t, "smoothness", "matern32"));
  c.acquisition = acquisition_from_string(get_or<std::string>(t, "acquisition", "ei"));
  c.ucb_kappa = get_or<double>(t, "ucb_kappa", c.ucb_kappa);
  c.seed = get_or<std::uint64_t>(t, "seed", c.scenario.master_seed);
  c.relearn_interval = get_or<int>(t, "relearn_interval", c.relearn_interval);
  c.hyper_restarts = get_or<int>(t, "hyper_restarts", c.hyper_restarts);
  c.acquisition_candidates = get_or<int>(t, "acquisition_candidates", c.acquisition_candidates);
  c.acquisition_polish = get_or<int>(t, "acquisition_polish", c.acquisition_polish);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("tuner: ") + e.what());
  }
  return c;
}

json tune_config_to_json(const TuneConfig& c) {
  json root = scenario_to_json(c.scenario);
  json dts = json::array();
  for (double d : c.dt_list) dts.push_back(d);
  root["tuner"] = {{"bounds", {{"lo", vector_to_json(c.bounds.lo)}, {"hi", vector_to_json(c.bounds.hi)}}},
                   {"dt_list", dts},
                   {"metric", to_string(c.metric)},
                   {"n_seed", c.n_seed},
                   {"n_iter", c.n_iter},
                   {"surrogate", c.family == SurrogateFamily::TP ? "tp" : "gp"},
                   {"tp_dof", c.tp_dof},
                   {"smoothness", c.smoothness == Smoothness::Matern52 ? "matern52" : "matern32"},
                   {"acquisition", c.acquisition == Acquisition::UpperConfidenceBound ? "ucb" : "ei"},
                   {"ucb_kappa", c.ucb_kappa},
                   {"seed", c.seed},
                   {"relearn_interval", c.relearn_interval},
                   {"hyper_restarts", c.hyper_restarts},
                   {"acquisition_candidates", c.acquisition_candidates},
                   {"acquisition_polish", c.acquisition_polish}};
  return root;
}

json tune_result_to_json(const TuneResult& r) {
  json history = json::array();
  for (const auto& e : r.history) {
    json row = {{"iteration", e.iteration}, {"q", vector_to_json(e.q)}, {"failed", e.failed}};
    if (e.failed) {
      row["cost"] = nullptr;
      row["error"] = e.error;
    } else {
      row["cost"] = e.cost;
      row["per_dt"] = e.per_dt;
    }
    history.push_back(std::move(row));
  }
  json out = {{"method", r.method},
              {"q_star", noise_to_json(r.q_star)},
              {"y_star", r.y_star},
              {"wall_time", r.wall_time},
              {"history", std::move(history)}};
  if (!r.surrogate_snapshots.empty()) {
    json snaps = json::array();
    for (const auto& k : r.surrogate_snapshots) {
      snaps.push_back({{"log_lengthscales", vector_to_json(k.log_lengthscales)},
                       {"log_signal_variance", k.log_signal_variance},
                       {"log_noise_variance", k.log_noise_variance}});
    }
    out["surrogate_snapshots"] = std::move(snaps);
  }
  return out;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string history_csv(const TuneResult& r, const std::vector<double>& dt_list) {
  std::ostringstream os;
  const Index d = r.history.empty() ? 0 : r.history.front().q.size();
  os << "iteration";
  for (Index i = 0; i < d; ++i) os << ",q" << i;
  for (double dt : dt_list) os << ",cost_dt=" << format_double(dt);
  os << ",cost\n";
  for (const auto& e : r.history) {
    os << e.iteration;
    for (Index i = 0; i < d; ++i) os << ',' << format_double(e.q[i]);
    for (std::size_t k = 0; k < dt_list.size(); ++k) {
      os << ',';
      if (!e.failed && k < e.per_dt.size()) os << format_double(e.per_dt[k]);
    }
    os << ',';
    if (!e.failed) os << format_double(e.cost);
    os << '\n';
  }
  return os.str();
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

}  // namespace kfat
