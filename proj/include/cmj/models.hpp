#pragma once
// The model zoo generating (V, mu) characteristics: the three classic classes,
// the renewal and switching-Poisson models, and the counterexample measure
// mu = tau*delta_{1/2} + sum_k delta_k.  Also: criticality calibration, the
// scaling sequence v_p, and empirical checkers for the drift assumptions.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "cmj/measures.hpp"
#include "cmj/report.hpp"
#include "cmj/rng.hpp"

namespace cmj {

// ---- life law ----

// P(V >= x) = (x/x0)^(-gamma) for x >= x0.  Exact Pareto keeps v_p and all
// acceptance targets closed-form; gamma in (1,2) puts V in a stable domain of
// attraction with constant slowly varying part.
struct ParetoLife {
  double gamma = 1.5;
  double x0 = 1.0;

  double mean() const { return gamma * x0 / (gamma - 1.0); }
  double tail(double x) const;  // P(V >= x)
  double sample(Rng& rng) const {
    // gamma = 3/2 is the workhorse case and u^(-2/3) via cbrt is much cheaper
    // than pow on the 1e10-draw kernels.
    double u = rng.uniform_pos();
    if (gamma == 1.5) return x0 / std::cbrt(u * u);
    return x0 * std::pow(u, -1.0 / gamma);
  }
  void validate() const;
};

// ---- model variants ----

struct OffspringCount {  // law on {0, 1, 2, ...}
  enum class Kind { fixed, poisson, geometric };
  Kind kind = Kind::fixed;
  double mean = 1.0;
  std::int64_t sample(Rng& rng) const;
  void validate() const;
};

struct StepLaw {  // positive law with the given mean
  enum class Kind { fixed, exponential, uniform };  // uniform on (0, 2*mean)
  Kind kind = Kind::exponential;
  double mean = 1.0;
  double sample(Rng& rng) const;
  void validate() const;
};

struct GaltonWatson { OffspringCount offspring; };       // V = 1, P = |P| delta_1
struct BellmanHarris { OffspringCount offspring; };      // P = |P| delta_V
struct BinaryHomogeneous { double b = 1.0; };            // mu Poisson of rate b
struct RenewalOffspring { StepLaw step; };               // mu = sum delta_{xi_1+...+xi_n}
struct SwitchingPoisson {                                // Poisson with Markov-switched rate
  StepLaw sigma;                                         // block lengths
  std::vector<double> levels;
  std::vector<std::vector<double>> transition;
};
struct Counterexample { double gamma_prime = 1.2; };     // mu = tau delta_{1/2} + sum_k delta_k

using ModelVariant = std::variant<GaltonWatson, BellmanHarris, BinaryHomogeneous,
                                  RenewalOffspring, SwitchingPoisson, Counterexample>;

struct CharacteristicSpec {
  ModelVariant model;
  ParetoLife life;

  void validate() const;  // throws std::invalid_argument
  const char* variant_name() const;
};

// Stationary distribution of a finite stochastic matrix (direct solve);
// rejects non-irreducible-looking chains.
std::vector<double> stationary_vector(const std::vector<std::vector<double>>& transition);
double stationary_mean_level(const SwitchingPoisson& sw);  // E(Lambda_inf)

// Drift constant of the mu(t)/t -> 1/a law of large numbers.  Defined for
// binary homogeneous (1/b), renewal (E xi), switching (1/E Lambda_inf) and the
// counterexample (1); throws for the GW / Bellman-Harris classes.
double drift_a(const CharacteristicSpec& spec);

// v_p solving P(V >= 1/v_p) = 1/p; closed form for Pareto.  Throws for
// GaltonWatson (V is deterministic, outside the heavy-tail regime).
double scaling_vp(const CharacteristicSpec& spec, double p);

// E(mu(V)) in closed form where available (see models.cpp for the per-variant
// formulas); nullopt means the caller needs Monte Carlo.
std::optional<double> mean_offspring_closed_form(const CharacteristicSpec& spec);

// ---- sampling ----

struct LifeSample {
  double v = 0.0;
  AtomicMeasure offspring;  // P = mu|_V, every atom in (0, v]
};

LifeSample sample_life(const CharacteristicSpec& spec, Rng& rng);

// One realization of mu alone (independent of V), extended lazily to a
// horizon.  Undefined for BellmanHarris, whose measure is tied to V.
class MuProcess {
public:
  MuProcess(const CharacteristicSpec& spec, Rng& rng);

  void extend_to(double t, Rng& rng);
  // mu((0, t]); requires t <= horizon() unless the variant is closed-form.
  std::int64_t count(double t) const;
  // Materializes closed-form variants on first call, hence non-const.
  std::span<const double> atoms();
  double horizon() const { return horizon_; }

private:
  enum class Kind { gw, binary, renewal, switching, counterexample };
  Kind kind_;
  double horizon_ = 0.0;
  std::vector<double> atoms_;
  // cursors
  double rate_ = 0.0;           // binary
  StepLaw step_;                // renewal / switching sigma
  std::int64_t gw_count_ = 0;   // gw
  std::int64_t tau_ = 0;        // counterexample
  // switching state
  std::vector<double> levels_;
  std::vector<std::vector<double>> transition_;
  double block_end_ = 0.0;
  double time_cursor_ = 0.0;
  std::size_t level_idx_ = 0;
  // closed-form variants only store atoms when atoms() is called
  double materialized_to_ = 0.0;

  void ensure_materialized(double t);
};

// Flat walk-step sampler: draws (V, |P|) and resolves atom ranks of the last
// draw lazily.  This is the hot path for random-walk kernels; it allocates at
// construction only (scratch reused).
class StepSampler {
public:
  explicit StepSampler(const CharacteristicSpec& spec);

  struct Step {
    double v = 0.0;
    std::int64_t n = 0;  // |P| = mu(V); the walk increment is n - 1
  };
  Step draw(Rng& rng);
  // Conditional draw at a fixed life length: importance sampling on V tilts
  // the marginal only, the offspring mechanism given V is untouched.
  Step draw_given_v(double v, Rng& rng);
  // Location of atom z (1-based) of the last drawn step's offspring measure.
  double atom(std::int64_t z, Rng& rng) const;
  // Number of the last drawn step's atoms strictly below t.  Like atom() this
  // resolves sampled variants (binary: binomial thinning of the total) with
  // the right marginal law per call, not jointly across calls.
  std::int64_t atoms_below(double t, Rng& rng) const;

private:
  CharacteristicSpec spec_;
  enum class Kind { gw, bellman_harris, binary, renewal, switching, counterexample };
  Kind kind_;
  double a_ = 0.0;  // binary rate
  std::vector<double> stationary_;  // switching initial-level law
  // last-draw state
  Step last_;
  std::int64_t tau_ = 0;
  std::vector<double> scratch_;  // materialized atoms (renewal / switching)
};

// ---- criticality ----

struct CalibrationResult {
  CharacteristicSpec spec;
  double achieved_abs_err = 0.0;  // |E-hat(mu(V)) - 1|
  int iterations = 0;
  bool used_closed_form = false;
};

// Tunes the designated free parameter (life scale x0, or the rate b for the
// binary model) until E(mu(V)) = 1: closed form when available, otherwise
// common-random-numbers stochastic bisection over `budget` frozen samples.
CalibrationResult calibrate_criticality(const CharacteristicSpec& spec, double tol,
                                        std::int64_t budget, std::uint64_t seed);

// Fresh-sample Monte Carlo estimate of E(mu(V)) (diagnostic).
double estimate_mean_offspring(const CharacteristicSpec& spec, std::int64_t n,
                               std::uint64_t seed, int n_threads = 1);

// ---- assumption checkers ----

struct R1Options {
  double threshold = 0.10;  // on a * E|mu(t)/t - 1/a| at the largest t
  int n_threads = 1;
};

// E|mu(t)/t - 1/a| across t_grid, with per-t standard errors.
TestReport estimate_R1(const CharacteristicSpec& spec, std::span<const double> t_grid,
                       std::int64_t n_samples, std::uint64_t seed,
                       const R1Options& opts = {});

struct R2Options {
  double threshold = 0.10;  // on p * P(...) at the largest p
  int n_threads = 1;
};

// p * P(v_p mu(x/v_p)/x >= 1/a') across p_grid, with binomial CIs.
TestReport estimate_R2(const CharacteristicSpec& spec, std::span<const double> p_grid,
                       double x, double a_prime, std::int64_t n_samples,
                       std::uint64_t seed, const R2Options& opts = {});

}  // namespace cmj
