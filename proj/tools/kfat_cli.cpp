#include "kfat_cli.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "kfat/config.hpp"
#include "kfat/oracle.hpp"
#include "kfat/parallel.hpp"
#include "kfat/tuner.hpp"

namespace kfat {

namespace fs = std::filesystem;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CommonOptions {
  std::string config_path;
  std::string out_dir = "kfat_out";
  std::optional<std::uint64_t> seed;
  std::optional<long> runs;
  std::optional<long> steps;
  std::string dt_list;
  std::string metric;
  std::string sensor_kind;
};

std::vector<double> parse_doubles(const std::string& text, char sep, const std::string& what) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(item, &used);
    } catch (const std::exception&) {
      throw UsageError(what + ": cannot parse '" + item + "'");
    }
    if (used != item.size() || !std::isfinite(x)) throw UsageError(what + ": cannot parse '" + item + "'");
    v.push_back(x);
  }
  if (v.empty()) throw UsageError(what + " is empty");
  return v;
}

LogAxis parse_axis(const std::string& text, const std::string& what) {
  const auto p = parse_doubles(text, ':', what);
  if (p.size() != 3 || p[2] < 1 || p[2] != std::floor(p[2])) {
    throw UsageError(what + " must be lo:hi:n");
  }
  LogAxis a{p[0], p[1], static_cast<Index>(p[2])};
  if (!(a.lo > 0.0 && a.hi > a.lo)) throw UsageError(what + " needs 0 < lo < hi");
  return a;
}

GridSpec parse_grid(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw UsageError("--grid must be Vlo:Vhi:n,Wlo:Whi:n");
  return {parse_axis(text.substr(0, comma), "--grid V axis"), parse_axis(text.substr(comma + 1), "--grid W axis")};
}

// Short label for file names: shortest text that reads back as the same value.
std::string label(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

class Csv {
 public:
  explicit Csv(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  Csv& row(const std::vector<double>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os_ << (i ? "," : "") << format_double(cells[i]);
    os_ << '\n';
    return *this;
  }
  std::string str() const { return os_.str(); }

 private:
  std::ostringstream os_;
};

struct Context {
  std::string command;
  std::vector<std::string> argv;
  CommonOptions common;
  TuneConfig cfg;
  fs::path out;
};

TuneConfig resolve_config(const CommonOptions& o) {
  json root = o.config_path.empty() ? json::object() : load_json_file(o.config_path);
  TuneConfig c = tune_config_from_json(root);
  if (o.seed) {
    c.scenario.master_seed = *o.seed;
    c.seed = *o.seed;
  }
  if (o.runs) {
    if (*o.runs < 1) throw UsageError("--runs must be >= 1");
    c.scenario.runs = *o.runs;
  }
  if (o.steps) {
    if (*o.steps < 1) throw UsageError("--steps must be >= 1");
    c.scenario.steps = *o.steps;
  }
  if (!o.dt_list.empty()) c.dt_list = parse_doubles(o.dt_list, ',', "--dt-list");
  if (!o.metric.empty()) {
    if (o.metric == "jnees") c.metric = CostKind::JNEES;
    else if (o.metric == "jnis") c.metric = CostKind::JNIS;
    else throw UsageError("--metric must be jnees or jnis");
  }
  if (!o.sensor_kind.empty()) {
    if (o.sensor_kind == "integrating") c.scenario.model.sensor_kind = SensorKind::Integrating;
    else if (o.sensor_kind == "non_integrating") c.scenario.model.sensor_kind = SensorKind::NonIntegrating;
    else throw UsageError("--sensor-kind must be integrating or non_integrating");
  }
  try {
    c.scenario.validate();
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

void write_manifest(const Context& ctx) {
  json m = {{"command", ctx.command},
            {"config_path", ctx.common.config_path},
            {"output_dir", ctx.common.out_dir},
            {"seed", ctx.cfg.seed},
            {"tool_version", KFAT_VERSION},
            {"timestamp", utc_timestamp()},
            {"argv", ctx.argv},
            {"resolved_config", tune_config_to_json(ctx.cfg)}};
  write_json(ctx.out / "manifest.json", m);
}

OracleOptions oracle_options(const TuneConfig& cfg, NeesForm form = NeesForm::Predicted) {
  OracleOptions o;
  o.P0 = cfg.scenario.initial_covariance();
  o.form = form;
  return o;
}

const std::vector<std::string> kOracleColumns{"V", "W", "dt", "expected_nees", "jnees", "logdet_P", "logdet_Sigma"};

std::vector<double> oracle_row(const ScanPoint& p) {
  return {p.V, p.W, p.dt, p.expected_nees, p.jnees, p.logdet_P, p.logdet_Sigma};
}

// Monte Carlo cost surface, one file per sample time plus the worst case.
void cmd_scan(Context& ctx, const GridSpec& grid, std::ostream& out) {
  const auto vs = grid.V.values();
  const auto ws = grid.W.values();
  std::vector<Csv> per_dt;
  for (std::size_t k = 0; k < ctx.cfg.dt_list.size(); ++k) per_dt.emplace_back(std::vector<std::string>{"V", "W", "dt", "cost"});
  Csv combined({"V", "W", "cost"});
  double best = INFINITY;
  std::pair<double, double> argmin{0, 0};
  for (double V : vs) {
    for (double W : ws) {
      const auto q = uniform_intensities(ctx.cfg.scenario.model, V, W);
      const CostEvaluation c = multi_dt_cost(q, ctx.cfg, ctx.cfg.scenario.master_seed);
      for (std::size_t k = 0; k < per_dt.size(); ++k) per_dt[k].row({V, W, ctx.cfg.dt_list[k], c.per_dt[k]});
      combined.row({V, W, c.cost});
      if (c.cost < best) {
        best = c.cost;
        argmin = {V, W};
      }
    }
  }
  for (std::size_t k = 0; k < per_dt.size(); ++k) {
    write_text(ctx.out / ("scan_dt_" + label(ctx.cfg.dt_list[k]) + ".csv"), per_dt[k].str());
  }
  write_text(ctx.out / "scan_combined.csv", combined.str());
  out << "scan: " << vs.size() * ws.size() << " points, min cost " << best << " at V=" << argmin.first
      << " W=" << argmin.second << "\n";
}

void cmd_oracle(Context& ctx, const GridSpec& grid, const std::string& mode, const std::string& band_text,
                const std::string& form_text, double sweep_V, double sweep_W, const std::string& dt_range,
                std::ostream& out) {
  NeesForm form = NeesForm::Predicted;
  if (form_text == "posterior") form = NeesForm::Posterior;
  else if (form_text != "predicted") throw UsageError("--form must be predicted or posterior");
  const OracleOptions opts = oracle_options(ctx.cfg, form);
  const auto& model = ctx.cfg.scenario.model;
  const auto& truth = ctx.cfg.scenario.true_noise;

  if (mode == "surface") {
    const auto surf = multi_dt_surface(model, grid, ctx.cfg.dt_list, truth, opts);
    for (double dt : ctx.cfg.dt_list) {
      Csv csv(kOracleColumns);
      for (const auto& p : oracle_scan(model, grid, truth, dt, opts)) csv.row(oracle_row(p));
      write_text(ctx.out / ("oracle_dt_" + label(dt) + ".csv"), csv.str());
    }
    Csv combined({"V", "W", "jnees"});
    const SurfacePoint* best = &surf.front();
    for (const auto& p : surf) {
      combined.row({p.V, p.W, p.jnees});
      if (p.jnees < best->jnees) best = &p;
    }
    write_text(ctx.out / "oracle_combined.csv", combined.str());
    out << "oracle surface: min jnees " << best->jnees << " at V=" << best->V << " W=" << best->W << "\n";
  } else if (mode == "line") {
    const auto b = parse_doubles(band_text, ':', "--band");
    if (b.size() != 2 || !(b[0] < b[1])) throw UsageError("--band must be lo:hi");
    for (double dt : ctx.cfg.dt_list) {
      Csv csv(kOracleColumns);
      const auto line = nees_line_scan(model, grid, truth, dt, {b[0], b[1]}, opts);
      for (const auto& p : line) csv.row(oracle_row(p));
      write_text(ctx.out / ("nees_line_dt_" + label(dt) + ".csv"), csv.str());
      out << "nees line dt=" << dt << ": " << line.size() << " points\n";
    }
  } else if (mode == "dt-sweep") {
    const auto r = parse_doubles(dt_range, ':', "--dt-range");
    if (r.size() != 3 || r[2] < 2 || r[2] != std::floor(r[2]) || !(r[0] < r[1])) {
      throw UsageError("--dt-range must be lo:hi:n with n >= 2");
    }
    const auto n = static_cast<int>(r[2]);
    const NoiseIntensities cand = uniform_intensities(model, sweep_V, sweep_W);
    Csv csv(kOracleColumns);
    for (int i = 0; i < n; ++i) {
      const double dt = r[0] + (r[1] - r[0]) * i / (n - 1);
      const OracleResult res = expected_nees(model, cand, truth, dt, opts);
      csv.row({sweep_V, sweep_W, dt, res.expected_nees, res.jnees, std::log(res.P_filter.determinant()),
               std::log(res.Sigma_true.determinant())});
    }
    write_text(ctx.out / "dt_sweep.csv", csv.str());
    out << "dt sweep: " << n << " points\n";
  } else {
    throw UsageError("--mode must be surface, line or dt-sweep");
  }
}

std::string param_name(char kind, Index i, Index n) {
  return n == 1 ? std::string(1, kind) : std::string(1, kind) + std::to_string(i);
}

void cmd_tune(Context& ctx, const std::string& method, int trials, std::optional<int> n_seed,
              std::optional<int> n_iter, const std::string& objective_kind, std::ostream& out) {
  if (trials < 1) throw UsageError("--trials must be >= 1");
  TuneConfig cfg = ctx.cfg;
  if (n_seed) cfg.n_seed = *n_seed;
  if (n_iter) cfg.n_iter = *n_iter;
  if (method == "gpbo") cfg.family = SurrogateFamily::GP;
  else if (method == "tpbo") cfg.family = SurrogateFamily::TP;
  else if (method != "nelder-mead") throw UsageError("--method must be gpbo, tpbo or nelder-mead");
  if (objective_kind != "mc" && objective_kind != "oracle") throw UsageError("--objective must be mc or oracle");
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  ctx.cfg = cfg;

  const Index d = cfg.bounds.lo.size();
  std::mt19937_64 start_rng(stream_seed(cfg.seed, 0x4e4dULL));
  const MatrixXd starts = latin_hypercube(trials, d, start_rng);
  const std::uint64_t base_seed = cfg.seed;
  MatrixXd q_stars(trials, d);
  for (int t = 0; t < trials; ++t) {
    TuneConfig tc = cfg;
    tc.seed = stream_seed(base_seed, static_cast<std::uint64_t>(t));
    const Objective f = objective_kind == "oracle" ? oracle_objective(tc) : monte_carlo_objective(tc);
    const TuneResult r = method == "nelder-mead" ? nelder_mead_minimize(f, tc, starts.row(t).transpose())
                                                 : bayesopt_minimize(f, tc);
    json j = tune_result_to_json(r);
    j["trial"] = t;
    j["seed"] = tc.seed;
    j.erase("wall_time");
    write_json(ctx.out / "results" / ("trial_" + std::to_string(t) + ".json"), j);
    write_text(ctx.out / ("history_trial_" + std::to_string(t) + ".csv"), history_csv(r, tc.dt_list));
    q_stars.row(t) = to_vector(r.q_star).transpose();
    out << method << " trial " << t << ": cost " << r.y_star << " q* = [" << q_stars.row(t) << "]\n";
  }

  std::ostringstream csv;
  csv << "method,param,mean,variance\n";
  const Index nw = cfg.scenario.model.nw();
  for (Index i = 0; i < d; ++i) {
    const VectorXd col = q_stars.col(i);
    const double mean = col.mean();
    const double var = trials > 1 ? (col.array() - mean).square().sum() / (trials - 1) : 0.0;
    const std::string name = i < nw ? param_name('V', i, nw) : param_name('W', i - nw, d - nw);
    csv << method << ',' << name << ',' << format_double(mean) << ',' << format_double(var) << '\n';
  }
  write_text(ctx.out / "summary.csv", csv.str());
}

void cmd_validate(Context& ctx, const std::string& V_text, const std::string& W_text, double confidence,
                  std::ostream& out) {
  ScenarioConfig sc = ctx.cfg.scenario;
  sc.candidate_noise = sc.true_noise;
  if (!V_text.empty()) {
    const auto v = parse_doubles(V_text, ',', "--V");
    sc.candidate_noise.V = Eigen::Map<const VectorXd>(v.data(), static_cast<Index>(v.size()));
  }
  if (!W_text.empty()) {
    const auto w = parse_doubles(W_text, ',', "--W");
    sc.candidate_noise.W = Eigen::Map<const VectorXd>(w.data(), static_cast<Index>(w.size()));
  }
  if (!(confidence > 0.0 && confidence < 1.0)) throw UsageError("--confidence must be in (0, 1)");
  try {
    sc.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  const MonteCarloResult mc = monte_carlo(sc, {.keep_errors = true});
  const json report = validation_report(sc, confidence, mc);
  write_json(ctx.out / "results" / "validate.json", report);

  const Index nx = sc.model.nx();
  std::vector<std::string> header{"k", "t", "nees_mean", "nees_pred_mean", "nis_mean"};
  for (Index j = 0; j < nx; ++j) header.push_back("err" + std::to_string(j));
  for (Index j = 0; j < nx; ++j) header.push_back("two_sigma" + std::to_string(j));
  Csv steps(header);
  for (Index k = 0; k < sc.steps; ++k) {
    std::vector<double> row{static_cast<double>(k + 1), static_cast<double>(k + 1) * sc.dt, mc.nees.col(k).mean(),
                            mc.nees_pred.col(k).mean(), mc.nis.col(k).mean()};
    for (Index j = 0; j < nx; ++j) row.push_back(mc.errors[0](k, j));
    for (Index j = 0; j < nx; ++j) row.push_back(2.0 * std::sqrt(mc.schedule.P_post[static_cast<std::size_t>(k)](j, j)));
    steps.row(row);
  }
  write_text(ctx.out / "validate_steps.csv", steps.str());
  out << "validate: NEES " << report["nees"]["mean"].get<double>() << (report["nees"]["pass"].get<bool>() ? " pass" : " FAIL")
      << ", NIS " << report["nis"]["mean"].get<double>() << (report["nis"]["pass"].get<bool>() ? " pass" : " FAIL")
      << ", 2-sigma coverage " << report["coverage"]["overall"].get<double>() << "\n";
}

json error_record(const std::string& kind, const std::string& command, const std::string& message) {
  return {{"error", {{"kind", kind}, {"command", command}, {"message", message}}}};
}

}  // namespace

json validation_report(const ScenarioConfig& sc, double confidence, const MonteCarloResult& mc) {
  const auto nx = static_cast<double>(sc.model.nx());
  const auto nz = static_cast<double>(sc.model.nz());
  auto block = [&](const MatrixXd& s, double dof, CostKind kind) {
    const auto band = chi_square_band(dof, s.rows(), confidence);
    const double mean = s.mean();
    return json{{"mean", mean},
                {"second_moment", s.array().square().mean()},
                {"dof", dof},
                {"j", j_cost(s, dof, kind, sc.dt).value},
                {"band", {band.first, band.second}},
                {"confidence", confidence},
                {"pass", mean >= band.first && mean <= band.second}};
  };
  VectorXd per = VectorXd::Zero(sc.model.nx());
  for (const auto& e : mc.errors) per += two_sigma_coverage_per_component(e, mc.schedule.P_post);
  if (!mc.errors.empty()) per /= static_cast<double>(mc.errors.size());
  std::vector<double> per_v(per.data(), per.data() + per.size());
  return {{"candidate", noise_to_json(sc.candidate_noise)},
          {"truth", noise_to_json(sc.true_noise)},
          {"dt", sc.dt},
          {"runs", sc.runs},
          {"steps", sc.steps},
          {"seed", sc.master_seed},
          {"nees", block(mc.nees, nx, CostKind::JNEES)},
          {"nees_predicted", block(mc.nees_pred, nx, CostKind::JNEES)},
          {"nis", block(mc.nis, nz, CostKind::JNIS)},
          {"coverage", {{"per_component", per_v}, {"overall", per.size() ? per.mean() : 0.0}}}};
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Kalman filter noise tuning by multi-interval consistency", "kfat"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "JSON config (system, scenario, tuner)");
    sub->add_option("--out", common.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--seed", common.seed, "Master seed");
    sub->add_option("--runs", common.runs, "Monte Carlo runs");
    sub->add_option("--steps", common.steps, "Steps per run");
    sub->add_option("--dt-list", common.dt_list, "Comma-separated sample times");
    sub->add_option("--metric", common.metric, "jnees or jnis");
    sub->add_option("--sensor-kind", common.sensor_kind, "integrating or non_integrating");
  };

  std::string grid_text = "0.1:5:20,0.01:0.5:20";
  auto* scan = app.add_subcommand("scan", "Monte Carlo cost surface over a (V, W) grid");
  add_common(scan);
  scan->add_option("--grid", grid_text, "Vlo:Vhi:n,Wlo:Whi:n (log spaced)")->capture_default_str();

  std::string mode = "surface", band = "1.995:2.005", form = "predicted", dt_range = "0.1:1:10";
  double sweep_V = 0.5, sweep_W = 0.2;
  auto* oracle = app.add_subcommand("oracle", "Steady-state NEES oracle: surface, NEES line or dt sweep");
  add_common(oracle);
  oracle->add_option("--grid", grid_text, "Vlo:Vhi:n,Wlo:Whi:n (log spaced)")->capture_default_str();
  oracle->add_option("--mode", mode, "surface, line or dt-sweep")->capture_default_str();
  oracle->add_option("--band", band, "NEES band lo:hi for line mode")->capture_default_str();
  oracle->add_option("--form", form, "predicted or posterior")->capture_default_str();
  oracle->add_option("--V", sweep_V, "Candidate V for dt-sweep")->capture_default_str();
  oracle->add_option("--W", sweep_W, "Candidate W for dt-sweep")->capture_default_str();
  oracle->add_option("--dt-range", dt_range, "lo:hi:n, linear, for dt-sweep")->capture_default_str();

  std::string method = "gpbo", objective_kind = "mc";
  int trials = 1;
  std::optional<int> n_seed, n_iter;
  auto* tune = app.add_subcommand("tune", "Tune (V, W) with GPBO, TPBO or Nelder-Mead");
  add_common(tune);
  tune->add_option("--method", method, "gpbo, tpbo or nelder-mead")->capture_default_str();
  tune->add_option("--trials", trials, "Independent trials")->capture_default_str();
  tune->add_option("--n-seed", n_seed, "Initial design size");
  tune->add_option("--n-iter", n_iter, "Optimizer iterations");
  tune->add_option("--objective", objective_kind, "mc or oracle")->capture_default_str();

  std::string V_text, W_text;
  double confidence = 0.95;
  auto* validate = app.add_subcommand("validate", "Monte Carlo consistency report at given intensities");
  add_common(validate);
  validate->add_option("--V", V_text, "Comma-separated V (default: truth)");
  validate->add_option("--W", W_text, "Comma-separated W (default: truth)");
  validate->add_option("--confidence", confidence, "Chi-square band confidence")->capture_default_str();

  std::string manifest_path, replay_out;
  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("manifest", manifest_path, "manifest.json")->required();
  replay->add_option("--out", replay_out, "Output directory")->required();

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::string command = "kfat";
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << error_record("usage", command, e.what()).dump() << "\n";
    return kUsageError;
  }

  if (replay->parsed()) {
    try {
      const json m = load_json_file(manifest_path);
      std::vector<std::string> rerun{args.empty() ? "kfat" : args[0]};
      const auto old = m.at("argv").get<std::vector<std::string>>();
      fs::create_directories(replay_out);
      const fs::path cfg_path = fs::path(replay_out) / "replay_config.json";
      write_json(cfg_path, m.at("resolved_config"));
      for (std::size_t i = 0; i < old.size(); ++i) {
        if ((old[i] == "--out" || old[i] == "--config") && i + 1 < old.size()) {
          ++i;
          continue;
        }
        if (old[i].rfind("--out=", 0) == 0 || old[i].rfind("--config=", 0) == 0) continue;
        rerun.push_back(old[i]);
      }
      rerun.insert(rerun.end(), {"--config", cfg_path.string(), "--out", replay_out});
      return run_cli(rerun, out, err);
    } catch (const std::exception& e) {
      err << error_record("config", "replay", e.what()).dump() << "\n";
      return kConfigError;
    }
  }

  Context ctx;
  ctx.common = common;
  ctx.argv.assign(args.begin() + 1, args.end());
  for (auto* sub : {scan, oracle, tune, validate}) {
    if (sub->parsed()) ctx.command = sub->get_name();
  }
  command = ctx.command;
  ctx.out = common.out_dir;

  auto fail = [&](const std::string& kind, const std::string& msg, int code) {
    const json rec = error_record(kind, command, msg);
    err << rec.dump() << "\n";
    try {
      fs::create_directories(ctx.out);
      write_json(ctx.out / "error.json", rec);
    } catch (const std::exception&) {
    }
    return code;
  };

  try {
    ctx.cfg = resolve_config(common);
    fs::create_directories(ctx.out);
    std::error_code ec;
    fs::remove(ctx.out / "error.json", ec);
    if (command == "scan") {
      cmd_scan(ctx, parse_grid(grid_text), out);
    } else if (command == "oracle") {
      cmd_oracle(ctx, parse_grid(grid_text), mode, band, form, sweep_V, sweep_W, dt_range, out);
    } else if (command == "tune") {
      cmd_tune(ctx, method, trials, n_seed, n_iter, objective_kind, out);
    } else {
      cmd_validate(ctx, V_text, W_text, confidence, out);
    }
    write_manifest(ctx);
  } catch (const UsageError& e) {
    return fail("usage", e.what(), kUsageError);
  } catch (const ConfigError& e) {
    return fail("config", e.what(), kConfigError);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), kRuntimeError);
  }
  return kOk;
}

}  // namespace kfat
