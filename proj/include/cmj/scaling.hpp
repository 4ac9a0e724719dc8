#pragma once
// Space-time rescalings applied uniformly to walks, heights, contours, and
// ladder processes.  All integer parts are floors toward -infinity.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>

#include "cmj/forest.hpp"
#include "cmj/ladder.hpp"

namespace cmj {

enum class ScalingKind {
  walk_sp,     // S_p(t)  = v_p S([p t])
  height_hp,   // H_p(t)  = v_p H([p t])
  contour_cp,  // C_p(t)  = v_p C(p t)         (continuous time, no floor)
  ladder_zp,   // Z_p(t)  = v_p Z([p v_p t])
  ladder_tp,   // T_p(t)  = (1/p) T([p v_p t])
  ladder_rp    // R_p(t)  = v_p R([p v_p t])
};

struct ScalingPreset {
  ScalingKind kind = ScalingKind::walk_sp;
  std::int64_t p = 1;
  double v_p = 1.0;

  void validate() const {
    if (p < 1) throw std::invalid_argument("scaling: p must be a positive integer");
    if (!(v_p > 0.0)) throw std::invalid_argument("scaling: v_p must be positive");
  }
};

namespace detail {

inline std::int64_t floor_index(double x) {
  return std::int64_t(std::floor(x));
}

template <class T>
double at_index(std::span<const T> path, std::int64_t idx, const char* what) {
  if (idx < 0 || idx >= std::ssize(path)) throw std::out_of_range(what);
  return double(path[std::size_t(idx)]);
}

}  // namespace detail

// Integer-valued sequences: the walk S and the ladder sequences T, Z.
inline double rescale(std::span<const std::int64_t> path, const ScalingPreset& ps,
                      double t) {
  ps.validate();
  switch (ps.kind) {
    case ScalingKind::walk_sp:
      return ps.v_p * detail::at_index(path, detail::floor_index(double(ps.p) * t),
                                       "rescale: walk index out of range");
    case ScalingKind::ladder_zp:
      return ps.v_p *
             detail::at_index(path, detail::floor_index(double(ps.p) * ps.v_p * t),
                              "rescale: ladder index out of range");
    case ScalingKind::ladder_tp:
      return detail::at_index(path, detail::floor_index(double(ps.p) * ps.v_p * t),
                              "rescale: ladder index out of range") /
             double(ps.p);
    default:
      throw std::invalid_argument("rescale: preset kind does not take an integer path");
  }
}

// Real-valued sequences: the height process H and the age process R.
inline double rescale(std::span<const double> path, const ScalingPreset& ps, double t) {
  ps.validate();
  switch (ps.kind) {
    case ScalingKind::height_hp:
      return ps.v_p * detail::at_index(path, detail::floor_index(double(ps.p) * t),
                                       "rescale: height index out of range");
    case ScalingKind::ladder_rp:
      return ps.v_p *
             detail::at_index(path, detail::floor_index(double(ps.p) * ps.v_p * t),
                              "rescale: ladder index out of range");
    default:
      throw std::invalid_argument("rescale: preset kind does not take a real path");
  }
}

// The contour: continuous time, so p t is not floored.
inline double rescale(const PiecewiseLinearPath& path, const ScalingPreset& ps,
                      double t) {
  ps.validate();
  if (ps.kind != ScalingKind::contour_cp)
    throw std::invalid_argument("rescale: preset kind does not take a contour");
  return ps.v_p * path(double(ps.p) * t);  // operator() rejects out-of-range
}

}  // namespace cmj
