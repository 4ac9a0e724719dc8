#include "cmj/ladder.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cmj {

LadderTriple ladder_decompose(const ForestPaths& forest, std::int64_t max_k) {
  if (max_k < 0) throw std::invalid_argument("ladder_decompose: max_k < 0");
  LadderTriple out;
  out.t_epochs.push_back(0);
  out.z_heights.push_back(0);
  out.r_ages.push_back(0.0);
  std::int64_t n = forest.size();
  std::int64_t cur_z = 0;
  double cur_r = 0.0;
  std::int64_t k = 0;
  for (std::int64_t l = 1; l <= n && k < max_k; ++l) {
    std::int64_t sl = forest.s[std::size_t(l)];
    if (sl >= cur_z) {
      std::int64_t dz = sl - cur_z;
      cur_r += atom_location(forest.offspring(l - 1), dz);
      cur_z = sl;
      out.t_epochs.push_back(l);
      out.z_heights.push_back(cur_z);
      out.r_ages.push_back(cur_r);
      ++k;
    }
  }
  out.truncated = k < max_k;
  return out;
}

CsvTable ladder_csv(const LadderTriple& lt) {
  CsvTable t;
  t.columns = {"k", "t_epoch", "z_height", "r_age"};
  for (std::size_t k = 0; k < lt.t_epochs.size(); ++k)
    t.rows.push_back({double(k), double(lt.t_epochs[k]), double(lt.z_heights[k]),
                      lt.r_ages[k]});
  return t;
}

// ---------------------------------------------------------------------------

double StepPath::operator()(double u) const {
  if (s.empty()) throw std::out_of_range("step path: empty");
  if (!(u >= s.front()) || u > end)
    throw std::out_of_range("step path: time outside domain");
  auto it = std::upper_bound(s.begin(), s.end(), u);
  return value[std::size_t(it - s.begin()) - 1];
}

LocalTimeResult local_time_inverse(const StepPath& t_scaled, double t) {
  if (t_scaled.s.empty() || t_scaled.s.size() != t_scaled.value.size())
    throw std::invalid_argument("local_time_inverse: malformed step path");
  // values are nondecreasing: binary search for the first value > t
  auto it = std::upper_bound(t_scaled.value.begin(), t_scaled.value.end(), t);
  if (it == t_scaled.value.end()) return {t_scaled.end, true};
  return {t_scaled.s[std::size_t(it - t_scaled.value.begin())], false};
}

StepPath scaled_ladder_time(const LadderTriple& lt, std::int64_t p, double v_p) {
  if (p < 1 || !(v_p > 0)) throw std::invalid_argument("scaled_ladder_time: bad scale");
  StepPath out;
  double grid = 1.0 / (double(p) * v_p);
  for (std::size_t j = 0; j < lt.t_epochs.size(); ++j) {
    out.s.push_back(double(j) * grid);
    out.value.push_back(double(lt.t_epochs[j]) / double(p));
  }
  out.end = double(lt.t_epochs.size()) * grid;
  return out;
}

ComposeResult ladder_compose_at(const LadderTriple& lt, std::int64_t p, double v_p,
                                double t) {
  if (p < 1 || !(v_p > 0)) throw std::invalid_argument("ladder_compose_at: bad scale");
  if (!(t >= 0)) throw std::invalid_argument("ladder_compose_at: t < 0");
  double pt = double(p) * t;
  // first ladder index with T(j) > p t; the left limit evaluates at j - 1
  auto it = std::upper_bound(
      lt.t_epochs.begin(), lt.t_epochs.end(), pt,
      [](double val, std::int64_t e) { return val < double(e); });
  if (it == lt.t_epochs.end()) {
    return {v_p * lt.r_ages.back(), v_p * double(lt.z_heights.back()), true};
  }
  std::size_t j = std::size_t(it - lt.t_epochs.begin());
  // j = 0 would need T(0) = 0 > p t, impossible for t >= 0
  std::size_t i = j - 1;
  return {v_p * lt.r_ages[i], v_p * double(lt.z_heights[i]), false};
}

// ---------------------------------------------------------------------------

FirstLadder first_ladder_sample(const CharacteristicSpec& spec, std::int64_t step_cap,
                                Rng& rng) {
  if (step_cap < 1) throw std::invalid_argument("first_ladder_sample: step_cap < 1");
  std::int64_t s = 0;
  for (std::int64_t step = 1; step <= step_cap; ++step) {
    LifeSample ls = sample_life(spec, rng);
    std::int64_t snew = s + ls.offspring.size() - 1;
    if (snew >= 0) {
      FirstLadder out;
      out.v = ls.v;
      out.z = snew;
      out.r = atom_location(ls.offspring.atoms(), snew);
      out.t = step;
      return out;
    }
    s = snew;
  }
  FirstLadder out;
  out.censored = true;
  out.t = step_cap;
  return out;
}

// ---------------------------------------------------------------------------

SizeBiasedTriple make_size_biased(double v, const AtomicMeasure& mu, double u) {
  if (!(u >= 0.0) || u >= 1.0)
    throw std::invalid_argument("make_size_biased: u outside [0, 1)");
  SizeBiasedTriple out;
  out.v = v;
  out.u = u;
  out.weight = double(mu.size());
  out.z_hat = std::int64_t(std::floor(u * double(mu.size())));
  out.r_hat = atom_location(mu.atoms(), out.z_hat);
  return out;
}

SizeBiasedSample size_biased_triple(const CharacteristicSpec& spec,
                                    std::int64_t n_samples, Rng& rng) {
  if (n_samples < 1) throw std::invalid_argument("size_biased_triple: n_samples < 1");
  SizeBiasedSample out;
  out.items.reserve(std::size_t(n_samples));
  double wsum = 0.0, w2sum = 0.0;
  for (std::int64_t i = 0; i < n_samples; ++i) {
    LifeSample ls = sample_life(spec, rng);
    double u = rng.uniform();
    out.items.push_back(make_size_biased(ls.v, ls.offspring, u));
    double w = out.items.back().weight;
    wsum += w;
    w2sum += w * w;
  }
  out.ess = w2sum > 0 ? wsum * wsum / w2sum : 0.0;
  out.low_ess = out.ess < double(n_samples) / 10.0;
  return out;
}

std::vector<SizeBiasedTriple> resample_by_weight(const SizeBiasedSample& sample,
                                                 std::int64_t m, Rng& rng) {
  std::vector<double> cum;
  cum.reserve(sample.items.size());
  double acc = 0.0;
  for (const auto& it : sample.items) {
    acc += it.weight;
    cum.push_back(acc);
  }
  if (!(acc > 0.0))
    throw std::invalid_argument("resample_by_weight: all weights are zero");
  std::vector<SizeBiasedTriple> out;
  out.reserve(std::size_t(m));
  for (std::int64_t i = 0; i < m; ++i) {
    double u = rng.uniform() * acc;
    std::size_t j = std::size_t(
        std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
    if (j >= cum.size()) j = cum.size() - 1;
    out.push_back(sample.items[j]);
  }
  return out;
}

}  // namespace cmj
