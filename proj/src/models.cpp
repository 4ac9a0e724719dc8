#include "cmj/models.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "cmj/mc.hpp"

namespace cmj {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double wilson_upper(std::int64_t k, std::int64_t n) {
  const double z = 1.959963984540054;
  double ph = double(k) / double(n), z2 = z * z;
  double denom = 1.0 + z2 / double(n);
  double center = ph + z2 / (2.0 * double(n));
  double rad = z * std::sqrt(ph * (1 - ph) / double(n) + z2 / (4.0 * double(n) * double(n)));
  return (center + rad) / denom;
}
double wilson_lower(std::int64_t k, std::int64_t n) {
  const double z = 1.959963984540054;
  double ph = double(k) / double(n), z2 = z * z;
  double denom = 1.0 + z2 / double(n);
  double center = ph + z2 / (2.0 * double(n));
  double rad = z * std::sqrt(ph * (1 - ph) / double(n) + z2 / (4.0 * double(n) * double(n)));
  double lo = (center - rad) / denom;
  return lo < 0 ? 0 : lo;
}

std::size_t step_markov(const std::vector<std::vector<double>>& P, std::size_t i, Rng& rng) {
  double u = rng.uniform();
  const auto& row = P[i];
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < row.size(); ++j) {
    acc += row[j];
    if (u < acc) return j;
  }
  return row.size() - 1;
}

std::size_t sample_from(const std::vector<double>& w, Rng& rng) {
  double u = rng.uniform();
  double acc = 0.0;
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    acc += w[j];
    if (u < acc) return j;
  }
  return w.size() - 1;
}

std::int64_t ceil_pareto(double gamma_prime, Rng& rng) {
  return std::int64_t(std::ceil(rng.pareto(gamma_prime, 1.0)));
}

}  // namespace

// ---- life law ----

double ParetoLife::tail(double x) const {
  return x <= x0 ? 1.0 : std::pow(x / x0, -gamma);
}

void ParetoLife::validate() const {
  if (!(gamma > 1.0 && gamma < 2.0))
    throw std::invalid_argument("life law: gamma must lie in (1,2)");
  if (!(x0 > 0.0) || !std::isfinite(x0))
    throw std::invalid_argument("life law: scale x0 must be positive");
}

// ---- small laws ----

std::int64_t OffspringCount::sample(Rng& rng) const {
  switch (kind) {
    case Kind::fixed:
      return std::llround(mean);
    case Kind::poisson: {
      std::poisson_distribution<std::int64_t> d(mean);
      return d(rng);
    }
    case Kind::geometric: {
      // P(k) = (1/(1+m)) (m/(1+m))^k on {0,1,...}
      double q = mean / (1.0 + mean);
      return std::int64_t(std::floor(std::log(rng.uniform_pos()) / std::log(q)));
    }
  }
  return 0;
}

void OffspringCount::validate() const {
  if (!(mean >= 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("offspring law: mean must be finite and >= 0");
  if (kind == Kind::fixed && std::abs(mean - std::round(mean)) > 1e-9)
    throw std::invalid_argument("offspring law: fixed count must be an integer");
}

double StepLaw::sample(Rng& rng) const {
  switch (kind) {
    case Kind::fixed: return mean;
    case Kind::exponential: return rng.exponential(mean);
    case Kind::uniform: return 2.0 * mean * rng.uniform_pos();
  }
  return mean;
}

void StepLaw::validate() const {
  if (!(mean > 0.0) || !std::isfinite(mean))
    throw std::invalid_argument("step law: mean must be positive");
}

// ---- spec ----

void CharacteristicSpec::validate() const {
  life.validate();
  std::visit(
      overloaded{
          [](const GaltonWatson& m) { m.offspring.validate(); },
          [](const BellmanHarris& m) { m.offspring.validate(); },
          [](const BinaryHomogeneous& m) {
            if (!(m.b > 0.0) || !std::isfinite(m.b))
              throw std::invalid_argument("binary model: rate b must be positive");
          },
          [](const RenewalOffspring& m) { m.step.validate(); },
          [](const SwitchingPoisson& m) {
            m.sigma.validate();
            if (m.levels.empty())
              throw std::invalid_argument("switching model: empty intensity set");
            double mx = 0;
            for (double l : m.levels) {
              if (!(l >= 0.0) || !std::isfinite(l))
                throw std::invalid_argument("switching model: intensities must be >= 0");
              mx = std::max(mx, l);
            }
            if (!(mx > 0.0))
              throw std::invalid_argument("switching model: all intensities are zero");
            if (m.transition.size() != m.levels.size())
              throw std::invalid_argument("switching model: transition size mismatch");
            for (const auto& row : m.transition) {
              if (row.size() != m.levels.size())
                throw std::invalid_argument("switching model: transition not square");
              double s = 0;
              for (double q : row) {
                if (!(q >= 0.0))
                  throw std::invalid_argument("switching model: negative transition entry");
                s += q;
              }
              if (std::abs(s - 1.0) > 1e-9)
                throw std::invalid_argument("switching model: transition rows must sum to 1");
            }
            (void)stationary_vector(m.transition);  // throws if not irreducible
          },
          [this](const Counterexample& m) {
            if (!(m.gamma_prime > 1.0 && m.gamma_prime < life.gamma))
              throw std::invalid_argument(
                  "counterexample: gamma' must lie in (1, gamma)");
          },
      },
      model);
}

const char* CharacteristicSpec::variant_name() const {
  return std::visit(
      overloaded{
          [](const GaltonWatson&) { return "galton_watson"; },
          [](const BellmanHarris&) { return "bellman_harris"; },
          [](const BinaryHomogeneous&) { return "binary_homogeneous"; },
          [](const RenewalOffspring&) { return "renewal"; },
          [](const SwitchingPoisson&) { return "switching_poisson"; },
          [](const Counterexample&) { return "counterexample"; },
      },
      model);
}

std::vector<double> stationary_vector(const std::vector<std::vector<double>>& P) {
  const std::size_t n = P.size();
  if (n == 0) throw std::invalid_argument("stationary_vector: empty matrix");
  // Solve pi^T P = pi^T with sum(pi) = 1: rows 0..n-2 from (P^T - I), last row
  // is the normalization.  Partial-pivot Gaussian elimination; n is tiny.
  std::vector<std::vector<double>> A(n, std::vector<double>(n + 1, 0.0));
  for (std::size_t i = 0; i + 1 < n; ++i)
    for (std::size_t j = 0; j < n; ++j) A[i][j] = P[j][i] - (i == j ? 1.0 : 0.0);
  for (std::size_t j = 0; j < n; ++j) A[n - 1][j] = 1.0;
  A[n - 1][n] = 1.0;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    if (std::abs(A[piv][col]) < 1e-14)
      throw std::invalid_argument("stationary_vector: singular system (chain not irreducible?)");
    std::swap(A[col], A[piv]);
    for (std::size_t r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c <= n; ++c) A[r][c] -= f * A[col][c];
    }
  }
  std::vector<double> pi(n);
  double sum = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pi[i] = A[i][n] / A[i][i];
    if (pi[i] < -1e-9)
      throw std::invalid_argument("stationary_vector: negative mass (chain not irreducible?)");
    pi[i] = std::max(pi[i], 0.0);
    sum += pi[i];
  }
  for (auto& x : pi) x /= sum;
  for (double x : pi)
    if (x < 1e-9)
      throw std::invalid_argument("stationary_vector: state with zero mass (chain not irreducible?)");
  return pi;
}

double stationary_mean_level(const SwitchingPoisson& sw) {
  auto pi = stationary_vector(sw.transition);
  double m = 0;
  for (std::size_t i = 0; i < pi.size(); ++i) m += pi[i] * sw.levels[i];
  return m;
}

double drift_a(const CharacteristicSpec& spec) {
  return std::visit(
      overloaded{
          [](const GaltonWatson&) -> double {
            throw std::invalid_argument("drift_a: undefined for Galton-Watson");
          },
          [](const BellmanHarris&) -> double {
            throw std::invalid_argument("drift_a: undefined for Bellman-Harris");
          },
          [](const BinaryHomogeneous& m) { return 1.0 / m.b; },
          [](const RenewalOffspring& m) { return m.step.mean; },
          [](const SwitchingPoisson& m) { return 1.0 / stationary_mean_level(m); },
          [](const Counterexample&) { return 1.0; },
      },
      spec.model);
}

double scaling_vp(const CharacteristicSpec& spec, double p) {
  if (std::holds_alternative<GaltonWatson>(spec.model))
    throw std::invalid_argument("scaling_vp: Galton-Watson has deterministic V");
  if (!(p >= 1.0)) throw std::invalid_argument("scaling_vp: p must be >= 1");
  return std::pow(p, -1.0 / spec.life.gamma) / spec.life.x0;
}

std::optional<double> mean_offspring_closed_form(const CharacteristicSpec& spec) {
  return std::visit(
      overloaded{
          [&](const GaltonWatson& m) -> std::optional<double> { return m.offspring.mean; },
          [&](const BellmanHarris& m) -> std::optional<double> { return m.offspring.mean; },
          [&](const BinaryHomogeneous& m) -> std::optional<double> {
            return m.b * spec.life.mean();
          },
          [&](const RenewalOffspring& m) -> std::optional<double> {
            // Exponential steps make mu a Poisson process: E mu(V) = E(V)/a.
            if (m.step.kind == StepLaw::Kind::exponential)
              return spec.life.mean() / m.step.mean;
            return std::nullopt;
          },
          [&](const SwitchingPoisson& m) -> std::optional<double> {
            // With exponential blocks the level process is a CTMC whose
            // time-stationary law equals the embedded one, so
            // E mu(t) = t E(Lambda_inf) exactly.
            if (m.sigma.kind == StepLaw::Kind::exponential)
              return stationary_mean_level(m) * spec.life.mean();
            return std::nullopt;
          },
          [&](const Counterexample& m) -> std::optional<double> {
            // E mu(V) = E[floor(V)] + E(tau) P(V >= 1/2)
            //         = zeta(g) x0^g + (1 + zeta(g')) (2 x0)^g     for x0 <= 1/2.
            double g = spec.life.gamma, x0 = spec.life.x0;
            if (x0 > 0.5) return std::nullopt;
            double zg = std::riemann_zeta(g);
            double zgp = std::riemann_zeta(m.gamma_prime);
            return zg * std::pow(x0, g) + (1.0 + zgp) * std::pow(2.0 * x0, g);
          },
      },
      spec.model);
}

// ---- sample_life ----

LifeSample sample_life(const CharacteristicSpec& spec, Rng& rng) {
  return std::visit(
      overloaded{
          [&](const GaltonWatson& m) {
            auto n = m.offspring.sample(rng);
            return LifeSample{1.0, AtomicMeasure::from_sorted(
                                       std::vector<double>(std::size_t(n), 1.0))};
          },
          [&](const BellmanHarris& m) {
            double v = spec.life.sample(rng);
            auto n = m.offspring.sample(rng);
            return LifeSample{v, AtomicMeasure::from_sorted(
                                     std::vector<double>(std::size_t(n), v))};
          },
          [&](const BinaryHomogeneous& m) {
            double v = spec.life.sample(rng);
            std::vector<double> atoms;
            double t = rng.exponential(1.0 / m.b);
            while (t <= v) {
              atoms.push_back(t);
              t += rng.exponential(1.0 / m.b);
            }
            return LifeSample{v, AtomicMeasure::from_sorted(std::move(atoms))};
          },
          [&](const RenewalOffspring& m) {
            double v = spec.life.sample(rng);
            std::vector<double> atoms;
            double t = m.step.sample(rng);
            while (t <= v) {
              atoms.push_back(t);
              t += m.step.sample(rng);
            }
            return LifeSample{v, AtomicMeasure::from_sorted(std::move(atoms))};
          },
          [&](const SwitchingPoisson& m) {
            double v = spec.life.sample(rng);
            auto pi = stationary_vector(m.transition);
            std::size_t lvl = sample_from(pi, rng);
            std::vector<double> atoms;
            double cur = 0.0, block_end = m.sigma.sample(rng);
            auto next_arrival = [&](double from) {
              double l = m.levels[lvl];
              return l > 0 ? from + rng.exponential(1.0 / l) : kInf;
            };
            double cand = next_arrival(0.0);
            while (true) {
              if (cand <= std::min(block_end, v)) {
                atoms.push_back(cand);
                cur = cand;
                cand = next_arrival(cur);
              } else if (block_end <= v) {
                lvl = step_markov(m.transition, lvl, rng);
                cur = block_end;
                block_end += m.sigma.sample(rng);
                cand = next_arrival(cur);
              } else {
                break;
              }
            }
            return LifeSample{v, AtomicMeasure::from_sorted(std::move(atoms))};
          },
          [&](const Counterexample& m) {
            double v = spec.life.sample(rng);
            std::int64_t tau = ceil_pareto(m.gamma_prime, rng);
            std::vector<double> atoms;
            if (v >= 0.5) atoms.assign(std::size_t(tau), 0.5);
            for (std::int64_t k = 1; k <= std::int64_t(v); ++k)
              atoms.push_back(double(k));
            return LifeSample{v, AtomicMeasure::from_sorted(std::move(atoms))};
          },
      },
      spec.model);
}

// ---- MuProcess ----

MuProcess::MuProcess(const CharacteristicSpec& spec, Rng& rng) {
  std::visit(
      overloaded{
          [&](const GaltonWatson& m) {
            kind_ = Kind::gw;
            gw_count_ = m.offspring.sample(rng);
          },
          [&](const BellmanHarris&) -> void {
            throw std::invalid_argument(
                "MuProcess: Bellman-Harris has no V-free measure");
          },
          [&](const BinaryHomogeneous& m) {
            kind_ = Kind::binary;
            rate_ = m.b;
            time_cursor_ = rng.exponential(1.0 / rate_);  // first arrival
          },
          [&](const RenewalOffspring& m) {
            kind_ = Kind::renewal;
            step_ = m.step;
            time_cursor_ = step_.sample(rng);
          },
          [&](const SwitchingPoisson& m) {
            kind_ = Kind::switching;
            step_ = m.sigma;
            levels_ = m.levels;
            transition_ = m.transition;
            level_idx_ = sample_from(stationary_vector(m.transition), rng);
            block_end_ = step_.sample(rng);
            double l = levels_[level_idx_];
            time_cursor_ = l > 0 ? rng.exponential(1.0 / l) : kInf;
          },
          [&](const Counterexample& m) {
            kind_ = Kind::counterexample;
            tau_ = ceil_pareto(m.gamma_prime, rng);
          },
      },
      spec.model);
}

void MuProcess::extend_to(double t, Rng& rng) {
  if (t <= horizon_) return;
  switch (kind_) {
    case Kind::gw:
    case Kind::counterexample:
      horizon_ = t;  // counts are closed form; atoms materialize on demand
      return;
    case Kind::binary:
    case Kind::renewal:
      // time_cursor_ is the next arrival, already drawn.
      while (time_cursor_ <= t) {
        atoms_.push_back(time_cursor_);
        time_cursor_ += kind_ == Kind::binary ? rng.exponential(1.0 / rate_)
                                              : step_.sample(rng);
      }
      horizon_ = t;
      return;
    case Kind::switching: {
      double last = atoms_.empty() ? 0.0 : atoms_.back();
      auto redraw = [&](double from) {
        double l = levels_[level_idx_];
        return l > 0 ? from + rng.exponential(1.0 / l) : kInf;
      };
      while (true) {
        if (time_cursor_ <= std::min(block_end_, t)) {
          atoms_.push_back(time_cursor_);
          last = time_cursor_;
          time_cursor_ = redraw(last);
        } else if (block_end_ <= t) {
          level_idx_ = step_markov(transition_, level_idx_, rng);
          double from = block_end_;
          block_end_ += step_.sample(rng);
          time_cursor_ = redraw(from);
        } else {
          break;
        }
      }
      horizon_ = t;
      return;
    }
  }
}

std::int64_t MuProcess::count(double t) const {
  if (t <= 0) return 0;
  switch (kind_) {
    case Kind::gw:
      return t >= 1.0 ? gw_count_ : 0;
    case Kind::counterexample:
      return std::int64_t(t) + (t >= 0.5 ? tau_ : 0);
    default:
      if (t > horizon_ * (1 + 1e-12) && t > horizon_ + 1e-12)
        throw std::logic_error("MuProcess::count: query beyond extended horizon");
      return count_up_to(atoms_, t);
  }
}

void MuProcess::ensure_materialized(double t) {
  if (kind_ != Kind::gw && kind_ != Kind::counterexample) return;
  if (t <= materialized_to_) return;
  if (kind_ == Kind::gw) {
    if (materialized_to_ < 1.0 && t >= 1.0)
      atoms_.assign(std::size_t(gw_count_), 1.0);
  } else {  // counterexample: tau atoms at 1/2, then one per integer
    if (t > 5e7)
      throw std::runtime_error("MuProcess: refusing to materialize > 5e7 atoms");
    if (materialized_to_ < 0.5 && t >= 0.5)
      atoms_.assign(std::size_t(tau_), 0.5);
    for (std::int64_t k = std::int64_t(materialized_to_) + 1; k <= std::int64_t(t); ++k)
      atoms_.push_back(double(k));
  }
  materialized_to_ = t;
}

std::span<const double> MuProcess::atoms() {
  ensure_materialized(horizon_);
  return atoms_;
}

// ---- StepSampler ----

StepSampler::StepSampler(const CharacteristicSpec& spec) : spec_(spec) {
  std::visit(
      overloaded{
          [&](const GaltonWatson&) { kind_ = Kind::gw; },
          [&](const BellmanHarris&) { kind_ = Kind::bellman_harris; },
          [&](const BinaryHomogeneous& m) {
            kind_ = Kind::binary;
            a_ = m.b;
          },
          [&](const RenewalOffspring&) { kind_ = Kind::renewal; },
          [&](const SwitchingPoisson& m) {
            kind_ = Kind::switching;
            stationary_ = stationary_vector(m.transition);
          },
          [&](const Counterexample&) { kind_ = Kind::counterexample; },
      },
      spec_.model);
  scratch_.reserve(64);
}

StepSampler::Step StepSampler::draw(Rng& rng) {
  double v = kind_ == Kind::gw ? 1.0 : spec_.life.sample(rng);
  return draw_given_v(v, rng);
}

StepSampler::Step StepSampler::draw_given_v(double v, Rng& rng) {
  switch (kind_) {
    case Kind::gw: {
      const auto& m = std::get<GaltonWatson>(spec_.model);
      last_ = {v, m.offspring.sample(rng)};
      break;
    }
    case Kind::bellman_harris: {
      const auto& m = std::get<BellmanHarris>(spec_.model);
      last_ = {v, m.offspring.sample(rng)};
      break;
    }
    case Kind::binary: {
      std::poisson_distribution<std::int64_t> d(a_ * v);
      last_ = {v, d(rng)};
      break;
    }
    case Kind::renewal: {
      const auto& m = std::get<RenewalOffspring>(spec_.model);
      scratch_.clear();
      double t = m.step.sample(rng);
      while (t <= v) {
        scratch_.push_back(t);
        t += m.step.sample(rng);
      }
      last_ = {v, std::int64_t(scratch_.size())};
      break;
    }
    case Kind::switching: {
      const auto& m = std::get<SwitchingPoisson>(spec_.model);
      scratch_.clear();
      std::size_t lvl = sample_from(stationary_, rng);
      double block_end = m.sigma.sample(rng);
      auto next = [&](double from) {
        double l = m.levels[lvl];
        return l > 0 ? from + rng.exponential(1.0 / l) : kInf;
      };
      double cand = next(0.0);
      while (true) {
        if (cand <= std::min(block_end, v)) {
          scratch_.push_back(cand);
          cand = next(cand);
        } else if (block_end <= v) {
          lvl = step_markov(m.transition, lvl, rng);
          double from = block_end;
          block_end += m.sigma.sample(rng);
          cand = next(from);
        } else {
          break;
        }
      }
      last_ = {v, std::int64_t(scratch_.size())};
      break;
    }
    case Kind::counterexample: {
      const auto& m = std::get<Counterexample>(spec_.model);
      tau_ = ceil_pareto(m.gamma_prime, rng);
      last_ = {v, std::int64_t(v) + (v >= 0.5 ? tau_ : 0)};
      break;
    }
  }
  return last_;
}

double StepSampler::atom(std::int64_t z, Rng& rng) const {
  if (z < 1 || z > last_.n)
    throw std::invalid_argument("StepSampler::atom: rank out of range");
  switch (kind_) {
    case Kind::gw:
      return 1.0;
    case Kind::bellman_harris:
      return last_.v;
    case Kind::binary: {
      // Order statistic of n uniforms on (0, V]: Beta(z, n - z + 1) scaled.
      std::gamma_distribution<double> g1(double(z), 1.0);
      std::gamma_distribution<double> g2(double(last_.n - z + 1), 1.0);
      double x = g1(rng), y = g2(rng);
      return last_.v * x / (x + y);
    }
    case Kind::renewal:
    case Kind::switching:
      return scratch_[std::size_t(z - 1)];
    case Kind::counterexample: {
      if (last_.v >= 0.5)
        return z <= tau_ ? 0.5 : double(z - tau_);
      return double(z);
    }
  }
  return 0.0;
}

std::int64_t StepSampler::atoms_below(double t, Rng& rng) const {
  if (!(t > 0) || last_.n == 0) return 0;
  switch (kind_) {
    case Kind::gw:
      return t > 1.0 ? last_.n : 0;
    case Kind::bellman_harris:
      return t > last_.v ? last_.n : 0;
    case Kind::binary: {
      if (t >= last_.v) return last_.n;
      std::binomial_distribution<std::int64_t> d(last_.n, t / last_.v);
      return d(rng);
    }
    case Kind::renewal:
    case Kind::switching:
      return std::lower_bound(scratch_.begin(), scratch_.end(), t) -
             scratch_.begin();
    case Kind::counterexample: {
      // Integer atoms 1, 2, ... plus tau copies at 1/2 when v >= 1/2.
      auto ints = std::int64_t(
          std::min(std::max(std::ceil(t) - 1.0, 0.0), double(last_.n)));
      if (last_.v >= 0.5)
        return (t > 0.5 ? tau_ : 0) + std::min(ints, last_.n - tau_);
      return std::min(ints, last_.n);
    }
  }
  return 0;
}

// ---- criticality ----

double estimate_mean_offspring(const CharacteristicSpec& spec, std::int64_t n,
                               std::uint64_t seed, int n_threads) {
  double sum = mc::accumulate_items_stateful(
      n, 4096, seed, n_threads, [&] { return StepSampler(spec); },
      [](std::int64_t, Rng& rng, StepSampler& s) { return double(s.draw(rng).n); });
  return sum / double(n);
}

namespace {

// Frozen-sample pool for common-random-numbers bisection: each sample owns its
// mu realization (lazily extended by its private stream) and a unit Pareto
// draw, so E-hat(x0) is a deterministic nondecreasing function of x0.
struct FrozenPool {
  struct Item {
    MuProcess mu;
    Rng rng;
    double u;  // unit uniform for V
  };
  std::vector<Item> items;
  double inv_gamma;

  FrozenPool(const CharacteristicSpec& spec, std::int64_t n, std::uint64_t seed)
      : inv_gamma(1.0 / spec.life.gamma) {
    items.reserve(std::size_t(n));
    for (std::int64_t i = 0; i < n; ++i) {
      Rng r(seed, std::uint64_t(i));
      double u = r.uniform_pos();
      items.push_back(Item{MuProcess(spec, r), std::move(r), u});
    }
  }

  double estimate(double x0) {
    double sum = 0;
    for (auto& it : items) {
      double v = x0 * std::pow(it.u, -inv_gamma);
      it.mu.extend_to(v, it.rng);
      sum += double(it.mu.count(v));
    }
    return sum / double(items.size());
  }
};

}  // namespace

CalibrationResult calibrate_criticality(const CharacteristicSpec& spec, double tol,
                                        std::int64_t budget, std::uint64_t seed) {
  spec.validate();
  if (!(tol > 0)) throw std::invalid_argument("calibrate_criticality: tol must be > 0");
  CalibrationResult out{spec, 0.0, 0, false};

  if (auto m = mean_offspring_closed_form(spec); m.has_value()) {
    out.used_closed_form = true;
    if (std::holds_alternative<GaltonWatson>(spec.model) ||
        std::holds_alternative<BellmanHarris>(spec.model)) {
      // No scale parameter acts on E(mu(V)); the offspring mean must already be 1.
      out.achieved_abs_err = std::abs(*m - 1.0);
      if (out.achieved_abs_err > tol)
        throw std::runtime_error("calibrate_criticality: offspring mean != 1 and no free scale");
      return out;
    }
    if (auto* bin = std::get_if<BinaryHomogeneous>(&out.spec.model)) {
      bin->b = 1.0 / spec.life.mean();  // E mu(V) = b E(V)
      return out;
    }
    // Remaining closed forms scale as x0^1 (renewal-exp, switching-exp:
    // E = E(V)/a_eff) or x0^gamma (counterexample); solve for x0 directly.
    if (std::holds_alternative<Counterexample>(out.spec.model)) {
      double g = spec.life.gamma;
      double gp = std::get<Counterexample>(out.spec.model).gamma_prime;
      double denom = std::riemann_zeta(g) + std::pow(2.0, g) * (1.0 + std::riemann_zeta(gp));
      out.spec.life.x0 = std::pow(denom, -1.0 / g);
      if (out.spec.life.x0 > 0.5)
        throw std::runtime_error("calibrate_criticality: counterexample scale left the closed-form regime");
      return out;
    }
    out.spec.life.x0 = spec.life.x0 / *m;  // E is linear in x0 here
    return out;
  }

  // Stochastic bisection with common random numbers.  E-hat is pathwise
  // nondecreasing in x0, so sign changes are genuine.
  if (budget < 100) throw std::invalid_argument("calibrate_criticality: budget too small");
  double a_guess = drift_a(spec);
  double g = spec.life.gamma;
  double x_ref = a_guess * (g - 1.0) / g;  // exact for a Poisson-like mu
  FrozenPool pool(spec, budget, seed);
  double lo = 0.25 * x_ref, hi = 4.0 * x_ref;
  int it = 0;
  double f_lo = pool.estimate(lo) - 1.0, f_hi = pool.estimate(hi) - 1.0;
  while (f_lo > 0 && it < 8) { lo *= 0.25; f_lo = pool.estimate(lo) - 1.0; ++it; }
  while (f_hi < 0 && it < 16) { hi *= 4.0; f_hi = pool.estimate(hi) - 1.0; ++it; }
  if (f_lo > 0 || f_hi < 0)
    throw std::runtime_error("calibrate_criticality: failed to bracket E(mu(V)) = 1");
  double mid = 0.5 * (lo + hi), f_mid = 0.0;
  for (; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    f_mid = pool.estimate(mid) - 1.0;
    if (std::abs(f_mid) <= 0.5 * tol || (hi - lo) < 1e-12 * x_ref) break;
    (f_mid < 0 ? lo : hi) = mid;
  }
  out.spec.life.x0 = mid;
  out.achieved_abs_err = std::abs(f_mid);
  out.iterations = it;
  return out;
}

// ---- assumption checkers ----

TestReport estimate_R1(const CharacteristicSpec& spec, std::span<const double> t_grid,
                       std::int64_t n_samples, std::uint64_t seed,
                       const R1Options& opts) {
  spec.validate();
  if (t_grid.empty()) throw std::invalid_argument("estimate_R1: empty grid");
  for (std::size_t i = 0; i < t_grid.size(); ++i)
    if (!(t_grid[i] > 0) || (i && t_grid[i] <= t_grid[i - 1]))
      throw std::invalid_argument("estimate_R1: grid must be positive increasing");
  const double a = drift_a(spec);
  const double inv_a = 1.0 / a;
  const double t_max = t_grid.back();
  const int k = int(t_grid.size());

  auto stats = mc::accumulate_stats(
      n_samples, 256, 2 * k, seed, opts.n_threads,
      [&](std::int64_t, Rng& rng, std::span<double> out) {
        MuProcess mu(spec, rng);
        mu.extend_to(t_max, rng);
        for (int j = 0; j < k; ++j) {
          double t = t_grid[std::size_t(j)];
          double dev = std::abs(double(mu.count(t)) / t - inv_a);
          out[std::size_t(j)] = dev;
          out[std::size_t(k + j)] = dev * dev;
        }
      });

  TestReport rep;
  rep.name = std::string("R1/") + spec.variant_name();
  rep.target = "E|mu(t)/t - 1/a| -> 0";
  rep.seed = seed;
  std::vector<double> est(static_cast<std::size_t>(k)), se(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    double m = stats[std::size_t(j)] / double(n_samples);
    double m2 = stats[std::size_t(k + j)] / double(n_samples);
    est[std::size_t(j)] = m;
    se[std::size_t(j)] = std::sqrt(std::max(m2 - m * m, 0.0) / double(n_samples));
  }
  bool pass = a * est.back() <= opts.threshold;
  for (int j = 0; j + 1 < k; ++j)
    if (est[std::size_t(j + 1)] >
        est[std::size_t(j)] + 2.0 * (se[std::size_t(j)] + se[std::size_t(j + 1)]))
      pass = false;
  rep.verdict = pass ? Verdict::pass : Verdict::fail;
  rep.details["t"] = std::vector<double>(t_grid.begin(), t_grid.end());
  rep.details["estimate"] = est;
  rep.details["se"] = se;
  rep.details["a"] = a;
  rep.details["scaled_estimate_at_tmax"] = a * est.back();
  rep.details["threshold"] = opts.threshold;
  rep.details["n_samples"] = n_samples;
  return rep;
}

TestReport estimate_R2(const CharacteristicSpec& spec, std::span<const double> p_grid,
                       double x, double a_prime, std::int64_t n_samples,
                       std::uint64_t seed, const R2Options& opts) {
  spec.validate();
  const double a = drift_a(spec);
  if (!(a_prime > 0 && a_prime < a))
    throw std::invalid_argument("estimate_R2: need 0 < a' < a");
  if (!(x > 0)) throw std::invalid_argument("estimate_R2: need x > 0");
  if (p_grid.empty()) throw std::invalid_argument("estimate_R2: empty grid");
  for (std::size_t i = 0; i < p_grid.size(); ++i)
    if (!(p_grid[i] >= 1) || (i && p_grid[i] <= p_grid[i - 1]))
      throw std::invalid_argument("estimate_R2: grid must be increasing, p >= 1");

  const int k = int(p_grid.size());
  std::vector<double> t_p(static_cast<std::size_t>(k)), thr(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    double vp = scaling_vp(spec, p_grid[std::size_t(j)]);
    t_p[std::size_t(j)] = x / vp;
    thr[std::size_t(j)] = x / (a_prime * vp);  // mu(t_p) >= thr  <=>  event
  }
  const double t_max = t_p.back();

  auto hits = mc::accumulate_stats(
      n_samples, 256, k, seed, opts.n_threads,
      [&](std::int64_t, Rng& rng, std::span<double> out) {
        MuProcess mu(spec, rng);
        mu.extend_to(t_max, rng);
        for (int j = 0; j < k; ++j)
          out[std::size_t(j)] =
              double(mu.count(t_p[std::size_t(j)])) >= thr[std::size_t(j)] ? 1.0 : 0.0;
      });

  TestReport rep;
  rep.name = std::string("R2/") + spec.variant_name();
  rep.target = "p P(v_p mu(x/v_p)/x >= 1/a') -> 0";
  rep.seed = seed;
  std::vector<double> est(static_cast<std::size_t>(k)), lo(static_cast<std::size_t>(k)), hi(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    auto kk = std::int64_t(std::llround(hits[std::size_t(j)]));
    double p = p_grid[std::size_t(j)];
    est[std::size_t(j)] = p * double(kk) / double(n_samples);
    lo[std::size_t(j)] = p * wilson_lower(kk, n_samples);
    hi[std::size_t(j)] = p * wilson_upper(kk, n_samples);
  }
  if (double(n_samples) < 10.0 * p_grid.back())
    rep.note("n_samples < 10 p: probabilities of order 1/p are unresolved");
  bool pass = hi.back() <= opts.threshold &&
              est.back() <= std::max(est.front(), opts.threshold);
  bool fail = lo.back() > opts.threshold;
  rep.verdict = fail ? Verdict::fail : (pass ? Verdict::pass : Verdict::inconclusive);
  rep.details["p"] = std::vector<double>(p_grid.begin(), p_grid.end());
  rep.details["estimate"] = est;
  rep.details["ci_lower"] = lo;
  rep.details["ci_upper"] = hi;
  rep.details["x"] = x;
  rep.details["a_prime"] = a_prime;
  rep.details["a"] = a;
  rep.details["threshold"] = opts.threshold;
  rep.details["n_samples"] = n_samples;
  return rep;
}

}  // namespace cmj
