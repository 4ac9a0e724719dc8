#pragma once
// Depth-first simulation of the CMJ forest and its three discrete paths:
// Lukasiewicz walk S, chronological heights H, and the unit-speed contour C.
// A brute-force ancestor-sum oracle and an independent contour builder over
// explicit tree tables exist for cross-checks.

#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "cmj/measures.hpp"
#include "cmj/models.hpp"
#include "cmj/rng.hpp"

namespace cmj {

struct PiecewiseLinearPath {
  // breakpoints (t[i], x[i]); slope between consecutive points is +-1
  // (0 can appear only through reflection, see reflect_above_infimum).
  std::vector<double> t, x;

  double duration() const { return t.empty() ? 0.0 : t.back(); }
  double operator()(double s) const;  // throws std::out_of_range outside [0, duration]
};

// Explicit parent/age/life table; the oracle-side representation of a forest.
struct TreeTable {
  std::vector<std::int64_t> parent;  // -1 for roots
  std::vector<double> birth_age;     // atom of the parent leading here; 0 for roots
  std::vector<double> life;
};

struct ForestPaths {
  std::vector<std::int64_t> s;         // length n+1, s[0] = 0
  std::vector<double> h;               // length n, birth times
  std::vector<double> v;               // length n, life lengths
  std::vector<double> birth_age;       // length n
  std::vector<std::int64_t> parent;    // length n, -1 for roots
  std::vector<double> atoms;           // offspring atoms, CSR layout
  std::vector<std::int64_t> atom_off;  // length n+1
  PiecewiseLinearPath contour;
  std::int64_t n_trees = 0;                // roots started
  std::int64_t completed_individuals = 0;  // individuals inside completed trees
  double completed_v_sum = 0.0;            // sum of V over completed trees

  std::int64_t size() const { return std::ssize(h); }
  std::span<const double> offspring(std::int64_t k) const {
    return {atoms.data() + atom_off[std::size_t(k)],
            atoms.data() + atom_off[std::size_t(k) + 1]};
  }
  TreeTable table() const { return TreeTable{parent, birth_age, v}; }
};

struct ForestOptions {
  // Abort if a single tree exceeds this many individuals (supercritical
  // mis-calibration symptom).
  std::int64_t tree_cap = std::numeric_limits<std::int64_t>::max();
  // Keep exploring past n_individuals until the emitted contour covers this
  // much time (0 = no requirement).
  double min_contour_duration = 0.0;
  bool build_contour = true;
};

namespace detail {

// Shared peak/valley emitter.  Exploration is depth-first youngest child
// first, so the contour closes each individual the moment the next one is
// reached: rise to the death peak H_u + V_u, then descend to the successor's
// birth height (0 at forest boundaries).  Consecutive same-slope segments
// merge on their own; total duration telescopes to 2 * sum of explored V.
struct ContourBuilder {
  PiecewiseLinearPath path;
  double time = 0.0, height = 0.0;

  ContourBuilder() {
    path.t.push_back(0.0);
    path.x.push_back(0.0);
  }
  void close(double peak, double valley) {
    if (peak < height || valley > peak)
      throw std::logic_error("contour: non-monotone emission (support violated?)");
    if (peak > height) {
      time += peak - height;
      path.t.push_back(time);
      path.x.push_back(peak);
    }
    if (valley < peak) {
      time += peak - valley;
      path.t.push_back(time);
      path.x.push_back(valley);
    }
    height = valley;
  }
};

}  // namespace detail

// Core exploration over any life source (`LifeSample next(Rng&)`); tests use
// scripted sources to force exact forests.
template <class Source>
ForestPaths explore_forest(Source&& src, std::int64_t n_individuals, Rng& rng,
                           const ForestOptions& opts = {}) {
  if (n_individuals < 1)
    throw std::invalid_argument("explore_forest: need n_individuals >= 1");
  ForestPaths f;
  f.s.push_back(0);
  f.atom_off.push_back(0);
  struct Ent {
    std::int64_t node;
    std::int64_t next;  // atoms consumed so far
  };
  std::vector<Ent> stack;
  detail::ContourBuilder cb;
  std::int64_t tree_start = 0;
  double tree_v = 0.0;

  for (std::int64_t k = 0;; ++k) {
    if (k >= n_individuals &&
        (!opts.build_contour || cb.time >= opts.min_contour_duration))
      break;
    double h, birth;
    std::int64_t par;
    if (stack.empty()) {
      par = -1;
      birth = 0.0;
      h = 0.0;
      ++f.n_trees;
      tree_start = k;
      tree_v = 0.0;
    } else {
      Ent& top = stack.back();
      par = top.node;
      // youngest child first: consume the parent's atoms from the top
      birth =
          f.atoms[std::size_t(f.atom_off[std::size_t(par) + 1] - 1 - top.next)];
      ++top.next;
      h = f.h[std::size_t(par)] + birth;
    }
    if (k - tree_start >= opts.tree_cap)
      throw std::runtime_error(
          "explore_forest: single tree exceeded the individual cap "
          "(supercritical mis-calibration?)");
    if (opts.build_contour && k > 0)
      cb.close(f.h[std::size_t(k - 1)] + f.v[std::size_t(k - 1)], h);
    LifeSample ls = src.next(rng);
    f.h.push_back(h);
    f.v.push_back(ls.v);
    f.birth_age.push_back(birth);
    f.parent.push_back(par);
    auto sp = ls.offspring.atoms();
    f.atoms.insert(f.atoms.end(), sp.begin(), sp.end());
    f.atom_off.push_back(f.atom_off.back() + ls.offspring.size());
    f.s.push_back(f.s.back() + ls.offspring.size() - 1);
    tree_v += ls.v;
    stack.push_back(Ent{k, 0});

    while (!stack.empty()) {
      Ent& top = stack.back();
      std::int64_t cnt =
          f.atom_off[std::size_t(top.node) + 1] - f.atom_off[std::size_t(top.node)];
      if (top.next < cnt) break;
      stack.pop_back();
      if (stack.empty()) {
        f.completed_individuals = k + 1;
        f.completed_v_sum += tree_v;
        tree_v = 0.0;
      }
    }
  }
  if (opts.build_contour && f.size() > 0)
    cb.close(f.h.back() + f.v.back(), 0.0);
  f.contour = std::move(cb.path);
  return f;
}

ForestPaths simulate_forest(const CharacteristicSpec& spec, std::int64_t n_individuals,
                            Rng& rng, const ForestOptions& opts = {});

// Ancestor-sum oracle: O(n * depth), test use only.  Rejects cyclic tables.
std::vector<double> brute_force_height(const TreeTable& tree);

// Independent contour construction over an explicit table (children in
// decreasing birth-age order).  Rejects support violations (age > life).
PiecewiseLinearPath contour_of(const TreeTable& tree);

// path(t) - inf_{u <= t} path(u)
std::vector<std::int64_t> reflect_above_infimum(std::span<const std::int64_t> path);
std::vector<double> reflect_above_infimum(std::span<const double> path);
PiecewiseLinearPath reflect_above_infimum(const PiecewiseLinearPath& path);

// sup_{u <= t} path(u) - path(t); zeros are the weak ascending ladder epochs.
std::vector<std::int64_t> reflect_below_supremum(std::span<const std::int64_t> path);
std::vector<double> reflect_below_supremum(std::span<const double> path);

}  // namespace cmj
