#pragma once
// Weak ascending ladder decomposition of the Lukasiewicz walk, local-time
// inversion, and the size-biased (V, Z-hat, R-hat) sampler that serves as an
// independent oracle for the first-ladder increment law.

#include <cstdint>
#include <vector>

#include "cmj/forest.hpp"
#include "cmj/measures.hpp"
#include "cmj/models.hpp"
#include "cmj/report.hpp"
#include "cmj/rng.hpp"

namespace cmj {

struct LadderTriple {
  // T(k): epochs, strictly increasing, T(0) = 0.
  std::vector<std::int64_t> t_epochs;
  // Z(k) = S(T(k)): nondecreasing (weak ladder, ties allowed).
  std::vector<std::int64_t> z_heights;
  // R(k): age renewal process, increments atom_location(P_{T(k)-1}, dZ(k)).
  std::vector<double> r_ages;
  // true when the walk ran out before max_k epochs (T(k+1) = infinity there).
  bool truncated = false;

  std::int64_t size() const { return std::ssize(t_epochs); }
};

// Single left-to-right pass; epochs use the weak inequality S(l) >= S(T(k)),
// so equality ties create epochs with dZ = 0 and zero R increment.
LadderTriple ladder_decompose(const ForestPaths& forest, std::int64_t max_k);

CsvTable ladder_csv(const LadderTriple& lt);

// Right-continuous nondecreasing step path: value[i] on [s[i], s[i+1]), the
// last value up to `end`.
struct StepPath {
  std::vector<double> s;
  std::vector<double> value;
  double end = 0.0;

  double operator()(double u) const;  // throws outside [s[0], end]
};

struct LocalTimeResult {
  double s = 0.0;
  bool truncated = false;  // no exceedance inside the path; s = right endpoint
};

// inf{ s : t_scaled(s) > t }, right-continuous in t.
LocalTimeResult local_time_inverse(const StepPath& t_scaled, double t);

// T_p(s) = (1/p) T([p v_p s]) as an explicit step path (jump grid j/(p v_p)).
StepPath scaled_ladder_time(const LadderTriple& lt, std::int64_t p, double v_p);

struct ComposeResult {
  double r_value = 0.0;
  double z_value = 0.0;
  bool truncated = false;
};

// (R_p, Z_p)(L_p(t)-) for Z_p(s) = v_p Z([p v_p s]), R_p(s) = v_p R([p v_p s]):
// the left limit lands on the ladder index preceding the first epoch with
// T(j) > p t.
ComposeResult ladder_compose_at(const LadderTriple& lt, std::int64_t p, double v_p,
                                double t);

// One fresh walk run to its first weak ascending epoch.
struct FirstLadder {
  double v = 0.0;        // V_{T(1)-1}
  std::int64_t z = 0;    // Z(1)
  double r = 0.0;        // R(1)
  std::int64_t t = 0;    // T(1)
  bool censored = false;  // step cap reached before the walk recovered
};

FirstLadder first_ladder_sample(const CharacteristicSpec& spec, std::int64_t step_cap,
                                Rng& rng);

// ---- size-biased oracle -----------------------------------------------------

struct SizeBiasedTriple {
  double v = 0.0;
  std::int64_t z_hat = 0;
  double r_hat = 0.0;
  double weight = 0.0;  // mu(V), the Radon-Nikodym weight
  double u = 0.0;       // the uniform behind z_hat, kept for invariant checks
};

// z_hat = floor(u * mu(v)), r_hat = atom_location(mu, z_hat), weight = mu(v).
SizeBiasedTriple make_size_biased(double v, const AtomicMeasure& mu, double u);

struct SizeBiasedSample {
  std::vector<SizeBiasedTriple> items;
  double ess = 0.0;     // (sum w)^2 / sum w^2
  bool low_ess = false;  // ess < n/10: heavy-tail weight degeneracy
};

SizeBiasedSample size_biased_triple(const CharacteristicSpec& spec,
                                    std::int64_t n_samples, Rng& rng);

// Multinomial resampling proportional to weights; output is unweighted.
std::vector<SizeBiasedTriple> resample_by_weight(const SizeBiasedSample& sample,
                                                 std::int64_t m, Rng& rng);

}  // namespace cmj
