// Acceptance suite: one PASS/FAIL line per criterion, with its runtime.
// Select a subset with KFAT_ACCEPTANCE="1,3,7".

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kfat/chi_square.hpp"
#include "kfat/config.hpp"
#include "kfat/metrics.hpp"
#include "kfat/oracle.hpp"
#include "kfat/simulate.hpp"
#include "kfat/surrogate.hpp"
#include "kfat/tuner.hpp"
#include "kfat_cli.hpp"

using namespace kfat;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double time_limit_s;
  std::function<Outcome()> run;
  // Set when the criterion is known not to be reachable as stated.
  const char* known_failure = nullptr;
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

const NoiseIntensities kTruth1d{VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 0.1)};

NoiseIntensities q1d(double V, double W) { return {VectorXd::Constant(1, V), VectorXd::Constant(1, W)}; }

ScenarioConfig scenario_1d() {
  ScenarioConfig s;
  s.model = tracking_1d();
  s.true_noise = kTruth1d;
  s.candidate_noise = kTruth1d;
  return s;
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double sample_variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// ---------------------------------------------------------------------------

Outcome matched_identity() {
  double worst = 0.0;
  for (double dt : {0.1, 0.5, 1.0}) {
    const OracleResult r = expected_nees(tracking_1d(), kTruth1d, kTruth1d, dt);
    worst = std::max({worst, std::fabs(r.expected_nees - 2.0), r.jnees});
  }
  return {worst <= 1e-9, fmt("max |E[NEES]-2|, J = %.3g (tol 1e-9)", worst)};
}

Outcome point_check() {
  const OracleResult r = expected_nees(tracking_1d(), q1d(1.045, 0.95), kTruth1d, 0.1);
  std::ostringstream os;
  os << "J(1.045, 0.95) = " << r.jnees << ", E[NEES] = " << r.expected_nees << " (target 0.0018 +- 1e-3)";
  const OracleResult alt = expected_nees(tracking_1d(), q1d(1.045, 0.095), kTruth1d, 0.1);
  os << "; at W=0.095: J = " << alt.jnees << ", E[NEES] = " << alt.expected_nees;
  return {std::fabs(r.jnees - 0.0018) <= 1e-3, os.str()};
}

Outcome nees_line_intersection() {
  GridSpec g;
  g.V = {0.1, 5.0, 200};
  g.W = {0.01, 0.5, 200};
  const auto a = nees_line_scan(tracking_1d(), g, kTruth1d, 0.1);
  const auto b = nees_line_scan(tracking_1d(), g, kTruth1d, 0.5);
  std::set<std::pair<Index, Index>> sa;
  for (const auto& p : a) sa.insert({p.iv, p.iw});
  const Index tv = g.V.nearest(1.0);
  const Index tw = g.W.nearest(0.1);
  std::size_t common = 0, outside = 0;
  std::ostringstream os;
  for (const auto& p : b) {
    if (!sa.count({p.iv, p.iw})) continue;
    ++common;
    if (std::abs(p.iv - tv) > 1 || std::abs(p.iw - tw) > 1) ++outside;
    os << " (" << p.V << ", " << p.W << ")";
  }
  std::ostringstream d;
  d << a.size() << " / " << b.size() << " line cells, " << common << " shared, " << outside
    << " outside the 3x3 block at cell (" << tv << ", " << tw << "); shared:" << os.str();
  return {common > 0 && outside == 0, d.str()};
}

Outcome multi_dt_minimum() {
  GridSpec g;
  const auto surf = multi_dt_surface(tracking_1d(), g, {0.1, 0.5}, kTruth1d);
  const auto best = std::min_element(surf.begin(), surf.end(),
                                     [](const SurfacePoint& x, const SurfacePoint& y) { return x.jnees < y.jnees; });
  const Index tv = g.V.nearest(1.0);
  const Index tw = g.W.nearest(0.1);
  std::ostringstream os;
  os << "argmin (" << best->V << ", " << best->W << ") cell (" << best->iv << ", " << best->iw << ") vs truth cell ("
     << tv << ", " << tw << "), J = " << best->jnees;
  for (std::size_t k = 0; k < 2; ++k) {
    const auto s = std::min_element(surf.begin(), surf.end(), [k](const SurfacePoint& x, const SurfacePoint& y) {
      return x.per_dt[k] < y.per_dt[k];
    });
    os << "; dt=" << (k ? 0.5 : 0.1) << " alone: (" << s->V << ", " << s->W << ")";
  }
  return {std::abs(best->iv - tv) <= 1 && std::abs(best->iw - tw) <= 1, os.str()};
}

Outcome monte_carlo_consistency() {
  ScenarioConfig s = scenario_1d();
  s.runs = 200;
  s.steps = 200;
  s.dt = 0.1;
  const MonteCarloResult mc = monte_carlo(s, {.keep_errors = true});
  const json rep = validation_report(s, 0.95, mc);
  const double mean = rep["nees"]["mean"].get<double>();
  const double cov = rep["coverage"]["overall"].get<double>();
  const bool in_band = rep["nees"]["pass"].get<bool>();
  std::ostringstream os;
  os << "mean NEES " << mean << " in [" << rep["nees"]["band"][0].get<double>() << ", "
     << rep["nees"]["band"][1].get<double>() << "]: " << (in_band ? "yes" : "no") << "; 2-sigma coverage " << cov
     << " (need [0.90, 0.99])";
  return {in_band && cov >= 0.90 && cov <= 0.99, os.str()};
}

Outcome oracle_mc_equivalence() {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lv(std::log(0.1), std::log(5.0));
  std::uniform_real_distribution<double> lw(std::log(0.01), std::log(0.5));
  const Index runs = 2000, steps = 300, window = 150;
  std::ostringstream os;
  bool all = true;
  for (int i = 0; i < 5; ++i) {
    NoiseIntensities q;
    // Mismatched: at least 25% off the truth in one coordinate.
    do {
      q = q1d(std::exp(lv(rng)), std::exp(lw(rng)));
    } while (std::fabs(std::log(q.V[0])) < 0.22 && std::fabs(std::log(q.W[0] / 0.1)) < 0.22);
    const double dt = i % 2 ? 0.5 : 0.1;
    ScenarioConfig s = scenario_1d();
    s.candidate_noise = q;
    s.dt = dt;
    s.runs = runs;
    s.steps = steps;
    s.master_seed = 500 + static_cast<std::uint64_t>(i);
    const double mc = monte_carlo(s).nees_pred.rightCols(window).mean();
    const double ora = expected_nees(tracking_1d(), q, kTruth1d, dt).expected_nees;
    const auto band = chi_square_band(2.0, runs, 0.99);
    const double lo = ora * band.first / 2.0;
    const double hi = ora * band.second / 2.0;
    const bool ok = mc >= lo && mc <= hi;
    all &= ok;
    os << (i ? "; " : "") << "(" << fmt("%.3g", q.V[0]) << ", " << fmt("%.3g", q.W[0]) << ", dt " << dt
       << "): MC " << fmt("%.4f", mc) << " oracle " << fmt("%.4f", ora) << " band [" << fmt("%.4f", lo) << ", "
       << fmt("%.4f", hi) << "]" << (ok ? "" : " OUT");
  }
  return {all, os.str()};
}

TuneConfig desk_config(std::vector<double> dts) {
  TuneConfig c;
  c.scenario = scenario_1d();
  c.scenario.runs = 100;
  c.scenario.steps = 200;
  c.dt_list = std::move(dts);
  c.n_seed = 20;
  c.n_iter = 100;
  return c;
}

struct TrialSet {
  std::vector<double> V, W;
};

TrialSet gpbo_trials(const std::vector<double>& dts) {
  TrialSet t;
  for (std::uint64_t k = 0; k < 10; ++k) {
    TuneConfig c = desk_config(dts);
    c.seed = 7000 + k;
    const TuneResult r = bayesopt_tune(c);
    t.V.push_back(r.q_star.V[0]);
    t.W.push_back(r.q_star.W[0]);
  }
  return t;
}

// Shared between criteria 7 and 8 so the GPBO trials run once.
const TrialSet& two_dt_gpbo() {
  static const TrialSet t = gpbo_trials({0.1, 0.5});
  return t;
}

Outcome desk_gpbo() {
  const TrialSet& two = two_dt_gpbo();
  const TrialSet one = gpbo_trials({0.1});
  const double mv = median(two.V), mw = median(two.W);
  const double mv1 = median(one.V), mw1 = median(one.W);
  const double err2 = std::fabs(mv - 1.0) + std::fabs(mw - 0.1);
  const double err1 = std::fabs(mv1 - 1.0) + std::fabs(mw1 - 0.1);
  const bool band = mv >= 0.6 && mv <= 1.6 && mw >= 0.07 && mw <= 0.25;
  std::ostringstream os;
  os << "dt {0.1,0.5}: median V " << mv << ", W " << mw << " (need [0.6,1.6] x [0.07,0.25]); dt {0.1}: median V " << mv1
     << ", W " << mw1 << "; |dV|+|dW| " << err2 << " vs " << err1;
  return {band && err1 > err2, os.str()};
}

Outcome nelder_mead_contrast() {
  const TrialSet& gp = two_dt_gpbo();
  TuneConfig base = desk_config({0.1, 0.5});
  std::mt19937_64 rng(99);
  const MatrixXd starts = latin_hypercube(10, 2, rng);
  TrialSet nm;
  for (Index k = 0; k < 10; ++k) {
    TuneConfig c = base;
    c.seed = 8000 + static_cast<std::uint64_t>(k);
    const TuneResult r = nelder_mead_tune(c, starts.row(k).transpose());
    nm.V.push_back(r.q_star.V[0]);
    nm.W.push_back(r.q_star.W[0]);
  }
  const double vg = sample_variance(gp.V), wg = sample_variance(gp.W);
  const double vn = sample_variance(nm.V), wn = sample_variance(nm.W);
  std::ostringstream os;
  os << "var V, W: Nelder-Mead " << vn << ", " << wn << "; GPBO " << vg << ", " << wg;
  return {vn > vg && wn > wg, os.str()};
}

Outcome property_suites() {
  std::vector<std::string> failed;
  std::mt19937_64 rng(31);

  // Van Loan Q against the closed form for the double integrator.
  for (double dt : {0.01, 0.1, 0.5, 2.0}) {
    for (double V : {0.1, 1.0, 5.0}) {
      const DiscreteModel m = discretize(tracking_1d(), q1d(V, 0.1), dt);
      MatrixXd Q(2, 2);
      Q << dt * dt * dt / 3, dt * dt / 2, dt * dt / 2, dt;
      Q *= V;
      if ((m.Q - Q).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, Q.cwiseAbs().maxCoeff())) {
        failed.push_back("van-loan");
      }
    }
  }

  // GP interpolation and nonnegative variance.
  std::uniform_real_distribution<double> u(0.0, 1.0);
  MatrixXd X(15, 2);
  for (Index i = 0; i < X.size(); ++i) X.data()[i] = u(rng);
  VectorXd y(15);
  for (Index i = 0; i < 15; ++i) y[i] = std::sin(5 * X(i, 0)) + X(i, 1);
  Kernel k = Kernel::defaults(2);
  k.log_noise_variance = std::log(1e-9);
  const SurrogateState gp(X, y, k);
  for (Index i = 0; i < 15; ++i) {
    const Prediction p = gp.posterior(X.row(i).transpose());
    if (std::fabs(p.mean - y[i]) > 1e-4 || p.variance > 1e-4) failed.push_back("gp-interpolation");
  }
  for (int i = 0; i < 200; ++i) {
    VectorXd x(2);
    x << u(rng) * 3 - 1, u(rng) * 3 - 1;
    if (gp.posterior(x).variance < 0.0) failed.push_back("gp-variance");
  }

  // LML gradient against central differences.
  for (SurrogateFamily fam : {SurrogateFamily::GP, SurrogateFamily::TP}) {
    Kernel kk = Kernel::defaults(2);
    kk.log_lengthscales << std::log(0.4), std::log(0.7);
    kk.log_noise_variance = std::log(1e-2);
    const VectorXd g = SurrogateState(X, y, kk, fam).lml_gradient();
    const VectorXd p0 = kk.params();
    for (Index i = 0; i < p0.size(); ++i) {
      Kernel a = kk, b = kk;
      VectorXd pa = p0, pb = p0;
      pa[i] += 1e-5;
      pb[i] -= 1e-5;
      a.set_params(pa);
      b.set_params(pb);
      const double fd = (SurrogateState(X, y, a, fam).log_marginal_likelihood() -
                         SurrogateState(X, y, b, fam).log_marginal_likelihood()) /
                        2e-5;
      if (std::fabs(fd - g[i]) > 1e-5 * std::max(1.0, std::fabs(fd))) failed.push_back("lml-gradient");
    }
  }

  // EI closed form: at mean == best it equals sigma / sqrt(2 pi).
  for (double s : {0.1, 1.0, 3.0}) {
    if (std::fabs(expected_improvement(0.5, s * s, 0.5) - s / std::sqrt(2 * M_PI)) > 1e-12) failed.push_back("ei");
  }
  if (expected_improvement(0.0, 0.0, 1.0) != 0.0) failed.push_back("ei-zero-variance");
  if (std::fabs(expected_improvement(-10.0, 1e-6, 0.0) - 10.0) > 1e-9) failed.push_back("ei-limit");

  // Worst-case cost dominates each single-dt cost.
  TuneConfig c;
  c.scenario = scenario_1d();
  c.scenario.runs = 20;
  c.scenario.steps = 60;
  c.validate();
  for (int i = 0; i < 10; ++i) {
    const VectorXd uq = latin_hypercube(1, 2, rng).row(0).transpose();
    const auto q = to_intensities(unit_to_q(uq, c.bounds), c.scenario.model);
    const CostEvaluation e = multi_dt_cost(q, c, 40 + static_cast<std::uint64_t>(i));
    for (double v : e.per_dt) {
      if (e.cost < v) failed.push_back("max-dominance");
    }
  }

  // Full tuning run is deterministic under a fixed seed.
  c.n_seed = 6;
  c.n_iter = 4;
  c.acquisition_candidates = 100;
  const TuneResult r1 = bayesopt_tune(c);
  const TuneResult r2 = bayesopt_tune(c);
  bool same = r1.history.size() == r2.history.size();
  for (std::size_t i = 0; same && i < r1.history.size(); ++i) {
    same = r1.history[i].q == r2.history[i].q && r1.history[i].cost == r2.history[i].cost;
  }
  if (!same) failed.push_back("determinism");

  std::string d = failed.empty() ? "van-loan, gp, lml-gradient, ei, max-dominance, determinism all hold" : "failed:";
  for (const auto& f : failed) d += " " + f;
  return {failed.empty(), d};
}

Outcome smoke_2d() {
  TuneConfig c;
  c.scenario.model = tracking_2d();
  c.scenario.true_noise = default_truth(c.scenario.model);
  c.scenario.candidate_noise = c.scenario.true_noise;
  c.scenario.runs = 50;
  c.scenario.steps = 200;
  c.n_seed = 120;
  c.n_iter = 150;
  c.seed = 2;
  const TuneResult r = bayesopt_tune(c);

  ScenarioConfig s = c.scenario;
  s.candidate_noise = r.q_star;
  s.dt = 0.1;
  s.master_seed = 77;
  const MonteCarloResult mc = monte_carlo(s, {.keep_errors = true});
  const json rep = validation_report(s, 0.99, mc);
  std::ostringstream os;
  os << "q* V = [" << r.q_star.V.transpose() << "], W = [" << r.q_star.W.transpose() << "], cost " << r.y_star
     << "; mean NIS " << rep["nis"]["mean"].get<double>() << " in [" << rep["nis"]["band"][0].get<double>() << ", "
     << rep["nis"]["band"][1].get<double>() << "]";
  return {rep["nis"]["pass"].get<bool>(), os.str()};
}

std::set<int> selected() {
  std::set<int> ids;
  if (const char* env = std::getenv("KFAT_ACCEPTANCE")) {
    std::stringstream ss(env);
    std::string item;
    while (std::getline(ss, item, ',')) ids.insert(std::stoi(item));
  }
  return ids;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "oracle matched identity", 1.0, matched_identity},
      {2, "oracle point check", 1.0, point_check,
       "the printed W=0.95 does not give J=0.0018 under any steady-state convention; W=0.095 does"},
      {3, "NEES-line intersection", 60.0, nees_line_intersection},
      {4, "multi-dt surface minimum", 30.0, multi_dt_minimum},
      {5, "Monte Carlo consistency", 30.0, monte_carlo_consistency},
      {6, "oracle/Monte Carlo equivalence", 300.0, oracle_mc_equivalence},
      {7, "GPBO desk-scale tuning", 1800.0, desk_gpbo},
      {8, "Nelder-Mead contrast", 900.0, nelder_mead_contrast},
      {9, "property suites", 60.0, property_suites},
      {10, "2D smoke", 2700.0, smoke_2d},
  };
  const std::set<int> only = selected();
  int unexpected = 0, known = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.time_limit_s;
    const bool pass = o.pass && in_time;
    std::printf("[%s] criterion %2d  %-32s %8.2fs (limit %.0fs)  %s\n", pass ? "PASS" : "FAIL", c.id, c.name, secs,
                c.time_limit_s, o.detail.c_str());
    if (!in_time) std::printf("       criterion %d exceeded its time limit\n", c.id);
    if (!pass && c.known_failure) {
      std::printf("       known failure: %s\n", c.known_failure);
      ++known;
    } else if (!pass) {
      ++unexpected;
    }
    std::fflush(stdout);
  }
  std::printf("acceptance: %d unexpected failure(s), %d known failure(s)\n", unexpected, known);
  return unexpected == 0 ? 0 : 1;
}
