#include "kfat/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace kfat {

namespace {
struct BudgetExhausted {};
}  // namespace

NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& objective,
                             const VectorXd& x0, const VectorXd& lo, const VectorXd& hi,
                             const NelderMeadOptions& opts) {
  const Index n = x0.size();
  if (n < 1 || lo.size() != n || hi.size() != n) {
    throw std::invalid_argument("nelder_mead: dimension mismatch");
  }
  auto clamp = [&](VectorXd x) { return VectorXd(x.cwiseMax(lo).cwiseMin(hi)); };

  NelderMeadResult res;
  auto f = [&](const VectorXd& x) {
    if (res.evals >= opts.max_evals) throw BudgetExhausted{};
    ++res.evals;
    const double v = objective(x);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };

  std::vector<VectorXd> simplex;
  std::vector<double> values;
  try {
    simplex.push_back(clamp(x0));
    values.push_back(f(simplex[0]));
    for (Index i = 0; i < n; ++i) {
      VectorXd v = simplex[0];
      const double width = hi[i] - lo[i];
      double h = std::isfinite(width) ? opts.initial_step * width : opts.initial_step * std::max(1.0, std::fabs(v[i]));
      // Step away from a bound the start point sits on.
      if (v[i] + h > hi[i]) h = -h;
      v[i] += h;
      simplex.push_back(clamp(v));
      values.push_back(f(simplex.back()));
    }

    std::vector<std::size_t> order(simplex.size());
    auto diameter = [&] {
      double d = 0.0;
      for (std::size_t i = 1; i < simplex.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) d = std::max(d, (simplex[i] - simplex[j]).norm());
      }
      return d;
    };

    while (res.evals < opts.max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
      std::vector<VectorXd> s2;
      std::vector<double> v2;
      for (auto i : order) {
        s2.push_back(simplex[i]);
        v2.push_back(values[i]);
      }
      simplex = std::move(s2);
      values = std::move(v2);
      if (diameter() < opts.diameter_tol) break;

      const std::size_t worst = simplex.size() - 1;
      VectorXd centroid = VectorXd::Zero(n);
      for (std::size_t i = 0; i < worst; ++i) centroid += simplex[i];
      centroid /= static_cast<double>(worst);

      const VectorXd xr = clamp(centroid + opts.reflection * (centroid - simplex[worst]));
      const double fr = f(xr);
      if (fr < values[0]) {
        const VectorXd xe = clamp(centroid + opts.expansion * (xr - centroid));
        const double fe = f(xe);
        if (fe < fr) {
          simplex[worst] = xe;
          values[worst] = fe;
        } else {
          simplex[worst] = xr;
          values[worst] = fr;
        }
        continue;
      }
      if (fr < values[worst - 1]) {
        simplex[worst] = xr;
        values[worst] = fr;
        continue;
      }
      // Contraction: outside if the reflection improved on the worst point.
      const bool outside = fr < values[worst];
      const VectorXd xc = outside ? clamp(centroid + opts.contraction * (xr - centroid))
                                  : clamp(centroid + opts.contraction * (simplex[worst] - centroid));
      const double fc = f(xc);
      if (fc < (outside ? fr : values[worst])) {
        simplex[worst] = xc;
        values[worst] = fc;
        continue;
      }
      for (std::size_t i = 1; i < simplex.size(); ++i) {
        VectorXd xs = clamp(simplex[0] + opts.shrink * (simplex[i] - simplex[0]));
        values[i] = f(xs);
        simplex[i] = std::move(xs);
      }
    }
  } catch (const BudgetExhausted&) {
    // Points never evaluated keep no value; drop them.
    simplex.resize(values.size());
  }
  if (values.empty()) throw std::invalid_argument("nelder_mead: max_evals must be positive");

  const auto best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
  res.x_min = simplex[best];
  res.f_min = values[best];
  return res;
}

}  // namespace kfat
