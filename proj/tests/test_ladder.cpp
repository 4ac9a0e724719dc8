#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cmj/ladder.hpp"

using namespace cmj;

namespace {

struct ScriptSource {
  std::vector<LifeSample> seq;
  std::size_t i = 0;
  LifeSample next(Rng&) {
    REQUIRE(i < seq.size());
    return seq[i++];
  }
};

LifeSample life(double v, std::vector<double> atoms) {
  return LifeSample{v, AtomicMeasure(std::move(atoms))};
}

CharacteristicSpec binary_spec(double b = 2.0, double g = 1.5) {
  return CharacteristicSpec{BinaryHomogeneous{b}, ParetoLife{g, (g - 1.0) / (g * b)}};
}

LadderTriple staircase(std::int64_t k) {
  LadderTriple lt;
  for (std::int64_t j = 0; j <= k; ++j) {
    lt.t_epochs.push_back(j);
    lt.z_heights.push_back(j);
    lt.r_ages.push_back(0.5 * double(j));
  }
  return lt;
}

}  // namespace

TEST_CASE("decomposition of the worked four-individual walk") {
  // offspring counts [2, 0, 1, 0] give s = [0, 1, 0, 0, -1]
  ScriptSource src{{life(2.0, {0.7, 1.5}), life(1.0, {}), life(1.0, {0.4}),
                    life(1.0, {})}};
  Rng rng(1);
  ForestPaths f = explore_forest(src, 4, rng);
  REQUIRE(f.s == std::vector<std::int64_t>{0, 1, 0, 0, -1});

  LadderTriple lt = ladder_decompose(f, 5);
  CHECK(lt.t_epochs == std::vector<std::int64_t>{0, 1});
  CHECK(lt.z_heights == std::vector<std::int64_t>{0, 1});
  CHECK(lt.r_ages == std::vector<double>{0.0, 0.7});  // atom_location(P0, 1)
  CHECK(lt.truncated);  // T(2) = infinity on this finite path

  LadderTriple one = ladder_decompose(f, 1);
  CHECK(one.t_epochs == std::vector<std::int64_t>{0, 1});
  CHECK_FALSE(one.truncated);
}

TEST_CASE("offspring identically one: every step is a tied epoch") {
  ScriptSource src{{life(1.0, {0.4}), life(1.0, {0.4}), life(1.0, {0.4}),
                    life(1.0, {0.4}), life(1.0, {0.4})}};
  Rng rng(1);
  ForestPaths f = explore_forest(src, 5, rng);
  LadderTriple lt = ladder_decompose(f, 4);
  CHECK(lt.t_epochs == std::vector<std::int64_t>{0, 1, 2, 3, 4});
  CHECK(lt.z_heights == std::vector<std::int64_t>{0, 0, 0, 0, 0});
  // dZ = 0, and A_nu(0) = 0, so R never moves
  CHECK(lt.r_ages == std::vector<double>{0.0, 0.0, 0.0, 0.0, 0.0});
  CHECK_FALSE(lt.truncated);
}

TEST_CASE("strictly decreasing walk has no finite epoch") {
  ScriptSource src{{life(1.0, {}), life(1.0, {}), life(1.0, {})}};
  Rng rng(1);
  ForestPaths f = explore_forest(src, 3, rng);
  LadderTriple lt = ladder_decompose(f, 3);
  CHECK(lt.t_epochs == std::vector<std::int64_t>{0});
  CHECK(lt.truncated);
}

TEST_CASE("epochs are the zeros of the supremum reflection") {
  for (std::uint64_t seed : {5u, 6u}) {
    Rng rng(seed);
    ForestPaths f = simulate_forest(binary_spec(), 800, rng);
    LadderTriple lt = ladder_decompose(f, f.size());
    std::vector<std::int64_t> refl = reflect_below_supremum(
        std::span<const std::int64_t>(f.s));
    std::vector<std::int64_t> zeros;
    for (std::int64_t l = 0; l < std::ssize(refl); ++l)
      if (refl[std::size_t(l)] == 0) zeros.push_back(l);
    CHECK(lt.t_epochs == zeros);

    for (std::size_t k = 0; k < lt.t_epochs.size(); ++k)
      CHECK(lt.z_heights[k] == f.s[std::size_t(lt.t_epochs[k])]);
    double acc = 0.0;  // replay the accumulation; addition order matches
    for (std::size_t k = 1; k < lt.t_epochs.size(); ++k) {
      CHECK(lt.t_epochs[k] > lt.t_epochs[k - 1]);
      CHECK(lt.z_heights[k] >= lt.z_heights[k - 1]);
      std::int64_t parent = lt.t_epochs[k] - 1;
      std::int64_t dz = lt.z_heights[k] - lt.z_heights[k - 1];
      double inc = atom_location(f.offspring(parent), dz);
      CHECK(inc >= 0.0);
      CHECK(inc <= f.v[std::size_t(parent)]);
      acc += inc;
      CHECK(lt.r_ages[k] == acc);
    }
  }
}

TEST_CASE("local time inverse on step paths") {
  StepPath jump{{0.0, 2.0}, {0.0, 5.0}, 10.0};
  CHECK(local_time_inverse(jump, 3.0).s == 2.0);
  CHECK_FALSE(local_time_inverse(jump, 3.0).truncated);
  CHECK(jump(1.9) == 0.0);
  CHECK(jump(2.0) == 5.0);  // right-continuous

  StepPath early{{0.0, 0.5}, {0.0, 1.0}, 1.0};
  CHECK(local_time_inverse(early, 0.0).s == 0.5);  // strict inequality

  StepPath stairs{{0.0, 1.0, 2.0, 3.0, 4.0}, {0.0, 1.0, 2.0, 3.0, 4.0}, 5.0};
  CHECK(local_time_inverse(stairs, 2.5).s == 3.0);
  LocalTimeResult off = local_time_inverse(stairs, 10.0);
  CHECK(off.s == 5.0);
  CHECK(off.truncated);
}

TEST_CASE("ladder composition at the left limit") {
  LadderTriple lt = staircase(6);

  // t = 0: T(1) = 1 > 0 already, left limit sits at the origin
  ComposeResult at0 = ladder_compose_at(lt, 1, 1.0, 0.0);
  CHECK(at0.r_value == 0.0);
  CHECK(at0.z_value == 0.0);
  CHECK_FALSE(at0.truncated);

  // unit staircase, p = 1, v_p = 1, t = 2.5: (R, Z)(L(2.5)-) = (R(2), Z(2))
  ComposeResult mid = ladder_compose_at(lt, 1, 1.0, 2.5);
  CHECK(mid.r_value == 1.0);
  CHECK(mid.z_value == 2.0);

  // evaluation exactly at a jump of T_p keeps the straddling increment out
  ComposeResult jump = ladder_compose_at(lt, 1, 1.0, 2.0);
  CHECK(jump.z_value == 2.0);
  CHECK(ladder_compose_at(lt, 1, 1.0, 2.0 - 1e-9).z_value == 1.0);

  // beyond the available epochs: truncated, last values reported
  ComposeResult far = ladder_compose_at(lt, 1, 1.0, 100.0);
  CHECK(far.truncated);
  CHECK(far.z_value == 6.0);
}

TEST_CASE("composition agrees with the explicit inverse of the scaled clock") {
  Rng rng(9);
  ForestPaths f = simulate_forest(binary_spec(), 2000, rng);
  LadderTriple lt = ladder_decompose(f, f.size());
  std::int64_t p = 7;
  double v_p = 0.3;
  StepPath tp = scaled_ladder_time(lt, p, v_p);
  for (double t : {0.0, 0.3, 1.7, 12.9, 55.5}) {
    LocalTimeResult l = local_time_inverse(tp, t);
    ComposeResult c = ladder_compose_at(lt, p, v_p, t);
    CHECK(l.truncated == c.truncated);
    if (!l.truncated) {
      // index at the left limit of L_p(t) is one below the jump index
      std::int64_t j = std::int64_t(std::llround(l.s * double(p) * v_p));
      REQUIRE(j >= 1);
      CHECK(c.r_value == v_p * lt.r_ages[std::size_t(j) - 1]);
      CHECK(c.z_value == v_p * double(lt.z_heights[std::size_t(j) - 1]));
    }
  }
}

TEST_CASE("first ladder kernel matches a same-seed forest decomposition") {
  for (std::uint64_t seed : {11u, 12u, 13u, 14u}) {
    Rng r1(seed);
    FirstLadder fl = first_ladder_sample(binary_spec(), 1'000'000, r1);
    REQUIRE_FALSE(fl.censored);
    // identical draw sequence: the walk visits individuals in exploration order
    Rng r2(seed);
    ForestOptions opts;
    opts.build_contour = false;
    ForestPaths f = simulate_forest(binary_spec(), fl.t, r2, opts);
    LadderTriple lt = ladder_decompose(f, 1);
    REQUIRE(lt.size() == 2);
    CHECK(lt.t_epochs[1] == fl.t);
    CHECK(lt.z_heights[1] == fl.z);
    CHECK(lt.r_ages[1] == fl.r);
    CHECK(f.v[std::size_t(fl.t) - 1] == fl.v);
  }
}

TEST_CASE("first ladder sample invariants and censoring") {
  Rng rng(21);
  CharacteristicSpec spec = binary_spec();
  int censored = 0;
  for (int i = 0; i < 2000; ++i) {
    FirstLadder fl = first_ladder_sample(spec, 3000, rng);
    if (fl.censored) {
      ++censored;
      CHECK(fl.t == 3000);
      continue;
    }
    CHECK(fl.z >= 0);
    CHECK(fl.r >= 0.0);
    CHECK(fl.r <= fl.v);
    CHECK(fl.t >= 1);
    if (fl.z == 0) CHECK(fl.r == 0.0);
  }
  CHECK(censored < 200);  // tail P(T(1) > m) decays like m^(-1/3)

  // nearly barren spec: the cap bites almost surely
  CharacteristicSpec barren{Counterexample{1.2}, ParetoLife{1.5, 0.01}};
  int hits = 0;
  for (int i = 0; i < 50; ++i)
    if (!first_ladder_sample(barren, 10, rng).censored) ++hits;
  CHECK(hits < 10);
}

TEST_CASE("size-biased formula on a deterministic measure") {
  AtomicMeasure mu(std::vector<double>{1.0, 2.0});
  SizeBiasedTriple t = make_size_biased(2.5, mu, 0.6);
  CHECK(t.z_hat == 1);  // floor(0.6 * 2)
  CHECK(t.r_hat == 1.0);
  CHECK(t.weight == 2.0);
  CHECK(t.v == 2.5);

  // barren individual: weight zero, never resampled
  SizeBiasedTriple none = make_size_biased(1.0, AtomicMeasure{}, 0.9);
  CHECK(none.weight == 0.0);
  CHECK(none.z_hat == 0);
  CHECK(none.r_hat == 0.0);

  SizeBiasedSample s;
  s.items = {none, t};
  Rng rng(31);
  for (const SizeBiasedTriple& pick : resample_by_weight(s, 64, rng))
    CHECK(pick.weight == 2.0);
}

TEST_CASE("size-biased sampler invariants") {
  Rng rng(41);
  SizeBiasedSample s = size_biased_triple(binary_spec(), 20'000, rng);
  REQUIRE(std::ssize(s.items) == 20'000);
  double wsum = 0.0;
  for (const auto& it : s.items) {
    CHECK(it.weight >= 0.0);
    CHECK(it.weight == std::floor(it.weight));  // mu(V) is a count
    CHECK(it.z_hat == std::int64_t(std::floor(it.u * it.weight)));
    if (it.weight >= 1.0) CHECK(it.z_hat < std::int64_t(it.weight));
    if (it.z_hat >= 1) {
      CHECK(it.r_hat > 0.0);
      CHECK(it.r_hat <= it.v);
    }
    wsum += it.weight;
  }
  // criticality: weights average to E mu(V) = 1 (heavy-tailed, wide band)
  CHECK(wsum / 20'000 == doctest::Approx(1.0).epsilon(0.2));
  CHECK(s.ess > 0.0);

  // unit weights give full effective sample size
  CharacteristicSpec gw{GaltonWatson{OffspringCount{OffspringCount::Kind::fixed, 1.0}},
                        ParetoLife{1.5, 1.0}};
  SizeBiasedSample u = size_biased_triple(gw, 1000, rng);
  CHECK(u.ess == doctest::Approx(1000.0));
  CHECK_FALSE(u.low_ess);

  // almost-always-barren spec degrades the ESS
  CharacteristicSpec barren{Counterexample{1.2}, ParetoLife{1.5, 0.01}};
  SizeBiasedSample b = size_biased_triple(barren, 3000, rng);
  CHECK(b.low_ess);
}

TEST_CASE("size-biased oracle agrees with the walk-side first ladder law") {
  // Lemma: (V_{T(1)-1}, Z(1), R(1)) under P equals (V, Z-hat, R-hat) under
  // the size-biased law.  Compare cheap functionals of both samplers.
  CharacteristicSpec spec = binary_spec();
  Rng rng(51);
  std::int64_t n = 12'000;

  SizeBiasedSample sb = size_biased_triple(spec, n, rng);
  double wsum = 0, z1 = 0, rcap = 0, vcap = 0;
  for (const auto& it : sb.items) {
    wsum += it.weight;
    z1 += it.weight * (it.z_hat >= 1 ? 1.0 : 0.0);
    rcap += it.weight * std::min(it.r_hat, 0.5);
    vcap += it.weight * std::min(it.v, 0.5);
  }

  double fz1 = 0, frcap = 0, fvcap = 0;
  std::int64_t kept = 0;
  for (std::int64_t i = 0; i < n; ++i) {
    FirstLadder fl = first_ladder_sample(spec, 20'000, rng);
    if (fl.censored) continue;
    ++kept;
    fz1 += fl.z >= 1 ? 1.0 : 0.0;
    frcap += std::min(fl.r, 0.5);
    fvcap += std::min(fl.v, 0.5);
  }
  REQUIRE(kept > n / 2);
  CHECK(z1 / wsum == doctest::Approx(fz1 / double(kept)).epsilon(0.08));
  CHECK(rcap / wsum == doctest::Approx(frcap / double(kept)).epsilon(0.12));
  CHECK(vcap / wsum == doctest::Approx(fvcap / double(kept)).epsilon(0.08));
}

TEST_CASE("ladder CSV dump") {
  LadderTriple lt = staircase(3);
  CsvTable t = ladder_csv(lt);
  CHECK(t.columns == std::vector<std::string>{"k", "t_epoch", "z_height", "r_age"});
  REQUIRE(t.rows.size() == 4);
  CHECK(t.rows[2][1] == 2.0);
  CHECK(t.rows[3][3] == 1.5);
  std::string csv = to_csv(t, "seed=1");
  CHECK(csv.find("# seed=1") == 0);
  CHECK(csv.find("k,t_epoch,z_height,r_age") != std::string::npos);
}

TEST_CASE("samplers are reproducible") {
  Rng a(61), b(61);
  SizeBiasedSample sa = size_biased_triple(binary_spec(), 500, a);
  SizeBiasedSample sb = size_biased_triple(binary_spec(), 500, b);
  for (std::size_t i = 0; i < sa.items.size(); ++i) {
    CHECK(sa.items[i].v == sb.items[i].v);
    CHECK(sa.items[i].z_hat == sb.items[i].z_hat);
    CHECK(sa.items[i].r_hat == sb.items[i].r_hat);
  }
  Rng c(62), d(62);
  FirstLadder fc = first_ladder_sample(binary_spec(), 100000, c);
  FirstLadder fd = first_ladder_sample(binary_spec(), 100000, d);
  CHECK(fc.t == fd.t);
  CHECK(fc.r == fd.r);
}
