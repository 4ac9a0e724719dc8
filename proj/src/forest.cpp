#include "cmj/forest.hpp"

#include <algorithm>
#include <cmath>

namespace cmj {

// ---------------------------------------------------------------------------
// PiecewiseLinearPath

double PiecewiseLinearPath::operator()(double s) const {
  if (t.empty()) throw std::out_of_range("path: empty");
  if (!(s >= t.front()) || !(s <= t.back()))
    throw std::out_of_range("path: time outside [0, duration]");
  auto it = std::upper_bound(t.begin(), t.end(), s);
  if (it == t.end()) return x.back();
  std::size_t i = std::size_t(it - t.begin());  // t[i-1] <= s < t[i]
  double slope = (x[i] - x[i - 1]) / (t[i] - t[i - 1]);
  return x[i - 1] + slope * (s - t[i - 1]);
}

// ---------------------------------------------------------------------------
// simulate_forest

namespace {

struct ModelSource {
  const CharacteristicSpec& spec;
  LifeSample next(Rng& rng) { return sample_life(spec, rng); }
};

}  // namespace

ForestPaths simulate_forest(const CharacteristicSpec& spec, std::int64_t n_individuals,
                            Rng& rng, const ForestOptions& opts) {
  spec.validate();
  ModelSource src{spec};
  return explore_forest(src, n_individuals, rng, opts);
}

// ---------------------------------------------------------------------------
// brute_force_height

std::vector<double> brute_force_height(const TreeTable& tree) {
  std::size_t n = tree.parent.size();
  if (tree.birth_age.size() != n || tree.life.size() != n)
    throw std::invalid_argument("brute_force_height: ragged table");
  std::vector<double> h(n);
  std::vector<double> chain;
  for (std::size_t k = 0; k < n; ++k) {
    chain.clear();
    std::int64_t u = std::int64_t(k);
    while (u >= 0) {
      if (u >= std::int64_t(n))
        throw std::invalid_argument("brute_force_height: parent index out of range");
      chain.push_back(tree.birth_age[std::size_t(u)]);
      if (chain.size() > n)
        throw std::invalid_argument("brute_force_height: cyclic table");
      u = tree.parent[std::size_t(u)];
    }
    // Sum root-to-node so the additions happen in exploration order and the
    // result matches ForestPaths::h bit for bit.
    double acc = 0.0;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) acc += *it;
    h[k] = acc;
  }
  return h;
}

// ---------------------------------------------------------------------------
// contour_of

PiecewiseLinearPath contour_of(const TreeTable& tree) {
  std::size_t n = tree.parent.size();
  if (tree.birth_age.size() != n || tree.life.size() != n)
    throw std::invalid_argument("contour_of: ragged table");
  std::vector<double> h = brute_force_height(tree);  // also rejects cycles
  std::vector<std::int64_t> roots;
  std::vector<std::vector<std::int64_t>> kids(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::int64_t p = tree.parent[k];
    if (p < 0) {
      if (tree.birth_age[k] != 0.0)
        throw std::invalid_argument("contour_of: root with nonzero birth age");
      roots.push_back(std::int64_t(k));
    } else {
      if (!(tree.birth_age[k] >= 0.0) ||
          tree.birth_age[k] > tree.life[std::size_t(p)])
        throw std::invalid_argument("contour_of: birth age outside parent's life");
      kids[std::size_t(p)].push_back(std::int64_t(k));
    }
  }
  for (auto& ks : kids)
    std::stable_sort(ks.begin(), ks.end(), [&](std::int64_t a, std::int64_t b) {
      return tree.birth_age[std::size_t(a)] > tree.birth_age[std::size_t(b)];
    });

  // Depth-first, youngest child first; the pre-order sequence determines the
  // contour: each individual closes down to its successor's birth height.
  detail::ContourBuilder cb;
  struct Ent {
    std::int64_t node;
    std::size_t next;
  };
  std::vector<Ent> stack;
  std::size_t visited = 0;
  std::int64_t prev = -1;
  auto visit = [&](std::int64_t node) {
    if (prev >= 0)
      cb.close(h[std::size_t(prev)] + tree.life[std::size_t(prev)],
               h[std::size_t(node)]);
    prev = node;
    ++visited;
  };
  for (std::int64_t r : roots) {
    visit(r);
    stack.push_back(Ent{r, 0});
    while (!stack.empty()) {
      Ent& top = stack.back();
      auto& ks = kids[std::size_t(top.node)];
      if (top.next < ks.size()) {
        std::int64_t c = ks[top.next++];
        visit(c);
        stack.push_back(Ent{c, 0});
      } else {
        stack.pop_back();
      }
    }
  }
  if (prev >= 0)
    cb.close(h[std::size_t(prev)] + tree.life[std::size_t(prev)], 0.0);
  if (visited != n)
    throw std::invalid_argument("contour_of: unreachable individuals (cyclic table)");
  return cb.path;
}

// ---------------------------------------------------------------------------
// reflections

namespace {

template <class T>
std::vector<T> above_inf(std::span<const T> p) {
  std::vector<T> out(p.size());
  T m = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m = i == 0 ? p[0] : std::min(m, p[i]);
    out[i] = p[i] - m;
  }
  return out;
}

template <class T>
std::vector<T> below_sup(std::span<const T> p) {
  std::vector<T> out(p.size());
  T m = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    m = i == 0 ? p[0] : std::max(m, p[i]);
    out[i] = m - p[i];
  }
  return out;
}

}  // namespace

std::vector<std::int64_t> reflect_above_infimum(std::span<const std::int64_t> path) {
  return above_inf(path);
}
std::vector<double> reflect_above_infimum(std::span<const double> path) {
  return above_inf(path);
}
std::vector<std::int64_t> reflect_below_supremum(std::span<const std::int64_t> path) {
  return below_sup(path);
}
std::vector<double> reflect_below_supremum(std::span<const double> path) {
  return below_sup(path);
}

PiecewiseLinearPath reflect_above_infimum(const PiecewiseLinearPath& path) {
  PiecewiseLinearPath out;
  if (path.t.empty()) return out;
  double m = path.x.front();
  out.t.push_back(path.t.front());
  out.x.push_back(0.0);
  for (std::size_t i = 1; i < path.t.size(); ++i) {
    double x0 = path.x[i - 1], x1 = path.x[i];
    double t0 = path.t[i - 1], t1 = path.t[i];
    if (x1 < m) {
      // descending through the running infimum: hit zero at the crossing,
      // stay flat until the segment end, then update the infimum
      if (x0 > m) {
        double tc = t0 + (x0 - m);  // slope -1
        out.t.push_back(tc);
        out.x.push_back(0.0);
      }
      out.t.push_back(t1);
      out.x.push_back(0.0);
      m = x1;
    } else {
      out.t.push_back(t1);
      out.x.push_back(x1 - m);
    }
  }
  return out;
}

}  // namespace cmj
