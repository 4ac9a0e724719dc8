#include "cmj/stable_limit.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cmj/forest.hpp"

namespace cmj {

void StableParams::validate() const {
  if (!(gamma > 1.0) || !(gamma < 2.0))
    throw std::invalid_argument("stable params: gamma must lie in (1, 2)");
  if (!(a > 0.0)) throw std::invalid_argument("stable params: a must be positive");
}

double psi(double lambda, const StableParams& params) {
  params.validate();
  if (!(lambda >= 0.0)) throw std::invalid_argument("psi: lambda must be >= 0");
  // Gamma(1 - gamma) < 0 on (1, 2), so the prefactor is positive.
  return -std::tgamma(1.0 - params.gamma) * std::pow(lambda / params.a, params.gamma);
}

double stable_sigma(const StableParams& params) {
  params.validate();
  double g = params.gamma;
  double c = -std::tgamma(1.0 - g) * std::pow(params.a, -g);
  return std::pow(c * std::abs(std::cos(std::numbers::pi * g / 2.0)), 1.0 / g);
}

namespace {

// Chambers-Mallows-Stuck / Weron transform for a totally skewed (beta = +1)
// standard stable variate of index alpha in (1, 2), zero shift, centered so
// that E exp(-lambda X) = exp(lambda^alpha / |cos(pi alpha / 2)|).
double standard_skewed_stable(double alpha, Rng& rng) {
  constexpr double pi = std::numbers::pi;
  double xi0 = (pi / 2.0 - pi / alpha);  // arctan(tan(pi alpha / 2)) / alpha
  double u = pi * (rng.uniform() - 0.5);  // Uniform(-pi/2, pi/2)
  double w = rng.exponential(1.0);
  double d = std::pow(std::abs(std::cos(pi * alpha / 2.0)), -1.0 / alpha);
  double t = alpha * (u + xi0);
  return d * std::sin(t) / std::pow(std::cos(u), 1.0 / alpha) *
         std::pow(std::cos(u - t) / w, (1.0 - alpha) / alpha);
}

}  // namespace

double sample_stable_increment(const StableParams& params, double dt, Rng& rng) {
  params.validate();
  if (!(dt > 0.0))
    throw std::invalid_argument("sample_stable_increment: dt must be positive");
  return stable_sigma(params) * std::pow(dt, 1.0 / params.gamma) *
         standard_skewed_stable(params.gamma, rng);
}

LimitPathSample simulate_reflected_limit(const StableParams& params, double horizon,
                                         double mesh, Rng& rng) {
  params.validate();
  if (!(mesh > 0.0) || !(horizon / mesh >= 1000.0))
    throw std::invalid_argument("simulate_reflected_limit: need horizon/mesh >= 1000");
  std::int64_t steps = std::int64_t(std::llround(horizon / mesh));
  LimitPathSample out;
  out.grid.reserve(std::size_t(steps) + 1);
  out.values.reserve(std::size_t(steps) + 1);
  double scale = stable_sigma(params) * std::pow(mesh, 1.0 / params.gamma);
  double s = 0.0;
  out.grid.push_back(0.0);
  out.values.push_back(0.0);
  for (std::int64_t k = 1; k <= steps; ++k) {
    s += scale * standard_skewed_stable(params.gamma, rng);
    out.grid.push_back(double(k) * mesh);
    out.values.push_back(s);
  }
  out.reflected = reflect_above_infimum(
      std::span<const double>(out.values.data(), out.values.size()));
  return out;
}

double sample_Z_infinity_increment(const StableParams& params, double ds, Rng& rng) {
  params.validate();
  if (!(ds > 0.0))
    throw std::invalid_argument("sample_Z_infinity_increment: ds must be positive");
  constexpr double pi = std::numbers::pi;
  double b = params.gamma - 1.0;  // subordinator index in (0, 1)
  // Kanter's exact representation: E exp(-lambda X) = exp(-lambda^b).
  double u = rng.uniform_pos();
  double w = rng.exponential(1.0);
  double lx = std::log(std::sin(b * pi * u)) +
              (1.0 - b) / b * std::log(std::sin((1.0 - b) * pi * u)) -
              std::log(std::sin(pi * u)) / b - (1.0 - b) / b * std::log(w);
  return std::pow(ds, 1.0 / b) * std::exp(lx);
}

double sample_V_infinity(const StableParams& params, Rng& rng) {
  params.validate();
  return std::pow(rng.uniform_pos(), -1.0 / params.gamma);
}

}  // namespace cmj
