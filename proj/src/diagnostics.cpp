#include "nlch/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include "nlch/error.hpp"

namespace nlch {

double discrete_energy(const Field& rho, const DiscreteKernel& kernel, const Potential& p,
                       ConvolutionMethod method) {
  const double h = rho.grid().h();
  double local = 0.0;
  for (std::size_t k = 0; k < rho.size(); ++k) {
    const Split s = eval_split(p, rho[k]);
    local += (s.convex - s.concave) + rho[k] * rho[k];
  }
  return h * h * local - inner_product(convolve(kernel, rho, method), rho);
}

double pseudo_energy(const Field& rho_next, const Field& rho_curr, const DiscreteKernel& kernel,
                     const Potential& p, ConvolutionMethod method) {
  const Field d = rho_next - rho_curr;
  return discrete_energy(rho_next, kernel, p, method) + inner_product(d, d) +
         inner_product(convolve(kernel, d, method), d);
}

StepReport check_step(const std::optional<StepReport>& prev, const StepState& before,
                      const StepState& after, StepReport partial, const DiscreteKernel& kernel,
                      const Potential& p, ConvolutionMethod method) {
  StepReport rep = std::move(partial);
  const Field& next = after.rho_curr;
  const Field& curr = before.rho_curr;
  rep.step_index = after.step_index;
  rep.time = after.time;
  rep.mass_raw = total_mass(next).raw;
  rep.max_abs_rho = next.max_abs();
  rep.energy = discrete_energy(next, kernel, p, method);
  const Field d = next - curr;
  rep.pseudo_energy = rep.energy + inner_product(d, d) + inner_product(convolve(kernel, d, method), d);
  rep.theorem2_lhs.reset();
  rep.theorem2_rhs.reset();
  if (before.rho_prev) {
    double previous;
    if (prev && prev->step_index == before.step_index) {
      previous = prev->pseudo_energy;
    } else {
      previous = pseudo_energy(curr, *before.rho_prev, kernel, p, method);
    }
    rep.theorem2_lhs = rep.pseudo_energy - previous;
    rep.theorem2_rhs = inner_product(d, d);
  }
  return rep;
}

SlopeFit fit_dissipation_slope(std::span<const EnergySample> series, double t_min, double t_max) {
  std::vector<EnergySample> window;
  for (const auto& s : series) {
    if (s.time >= t_min && s.time <= t_max && s.time > 0.0) window.push_back(s);
  }
  if (window.size() < 10) {
    throw ConfigError("slope fit: fewer than 10 samples in the window");
  }
  SlopeFit fit;
  fit.points = window.size();
  const auto [lo, hi] = std::minmax_element(
      window.begin(), window.end(),
      [](const EnergySample& a, const EnergySample& b) { return a.energy < b.energy; });
  if (!(lo->energy > 0.0)) {
    const double spread = hi->energy - lo->energy;
    fit.offset = -lo->energy + (spread > 0.0 ? 1e-3 * spread : 1.0);
  }
  std::vector<double> xs, ys;
  for (const auto& s : window) {
    const double y = std::log(s.energy + fit.offset);
    if (!std::isfinite(y)) throw ConfigError("slope fit: nonpositive energy after offset");
    xs.push_back(std::log(s.time));
    ys.push_back(y);
  }
  const double m = static_cast<double>(xs.size());
  double mean_x = 0.0, mean_y = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mean_x += xs[k];
    mean_y += ys[k];
  }
  mean_x /= m;
  mean_y /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mean_x) * (xs[k] - mean_x);
    sxy += (xs[k] - mean_x) * (ys[k] - mean_y);
  }
  if (!(sxx > 0.0)) throw ConfigError("slope fit: window has no spread in time");
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  return fit;
}

}  // namespace nlch
