#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <vector>

#include "cmj/scaling.hpp"

using namespace cmj;

namespace {

std::span<const std::int64_t> iview(const std::vector<std::int64_t>& v) {
  return {v.data(), v.size()};
}
std::span<const double> dview(const std::vector<double>& v) {
  return {v.data(), v.size()};
}

}  // namespace

TEST_CASE("walk rescaling with floored time") {
  std::vector<std::int64_t> s{0, 1, 0, 0, -1};
  ScalingPreset ps{ScalingKind::walk_sp, 4, 0.5};
  CHECK(rescale(iview(s), ps, 0.6) == 0.0);    // 0.5 * S([2.4]) = 0.5 * S(2)
  CHECK(rescale(iview(s), ps, 0.25) == 0.5);   // S(1) = 1
  CHECK(rescale(iview(s), ps, 1.0) == -0.5);   // S(4) = -1
  CHECK_THROWS_AS(rescale(iview(s), ps, 1.3), std::out_of_range);
  CHECK_THROWS_AS(rescale(iview(s), ps, -0.01), std::out_of_range);  // [x] = -1
}

TEST_CASE("contour rescaling is continuous in time") {
  // triangle contour of a single V = 2 individual
  PiecewiseLinearPath c;
  c.t = {0.0, 2.0, 4.0};
  c.x = {0.0, 2.0, 0.0};
  ScalingPreset ps{ScalingKind::contour_cp, 2, 0.5};
  CHECK(rescale(c, ps, 0.5) == doctest::Approx(0.5));  // 0.5 * C(1)
  CHECK(rescale(c, ps, 0.75) == doctest::Approx(0.75));  // no floor: C(1.5) = 1.5
  CHECK(rescale(c, ps, 2.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(rescale(c, ps, 2.1), std::out_of_range);
}

TEST_CASE("ladder rescalings") {
  std::vector<std::int64_t> t_ep{0, 3, 7};
  ScalingPreset tp{ScalingKind::ladder_tp, 10, 0.2};
  CHECK(rescale(iview(t_ep), tp, 1.0) == doctest::Approx(0.7));  // T([2]) / 10

  std::vector<std::int64_t> z{0, 1, 1, 4};
  ScalingPreset zp{ScalingKind::ladder_zp, 10, 0.2};
  CHECK(rescale(iview(z), zp, 0.6) == doctest::Approx(0.2));  // 0.2 * Z([1.2])
  CHECK(rescale(iview(z), zp, 1.7) == doctest::Approx(0.8));  // 0.2 * Z(3)

  std::vector<double> r{0.0, 0.4, 0.9};
  ScalingPreset rp{ScalingKind::ladder_rp, 10, 0.2};
  CHECK(rescale(dview(r), rp, 1.0) == doctest::Approx(0.18));  // 0.2 * R(2)
}

TEST_CASE("identity preset on integer times") {
  std::vector<std::int64_t> s{0, 2, 1, -1, 3};
  std::vector<double> h{0.0, 0.7, 1.9, 0.4};
  for (std::int64_t k = 0; k < std::ssize(s); ++k)
    CHECK(rescale(iview(s), {ScalingKind::walk_sp, 1, 1.0}, double(k)) ==
          double(s[std::size_t(k)]));
  for (std::int64_t k = 0; k < std::ssize(h); ++k)
    CHECK(rescale(dview(h), {ScalingKind::height_hp, 1, 1.0}, double(k)) ==
          h[std::size_t(k)]);
}

TEST_CASE("floor semantics: constant on [k/p, (k+1)/p)") {
  std::vector<std::int64_t> s{0, 5, -3, 2};
  ScalingPreset ps{ScalingKind::walk_sp, 3, 1.0};
  for (std::int64_t k = 0; k < 4; ++k) {
    double lo = double(k) / 3.0, hi = double(k + 1) / 3.0;
    double v = rescale(iview(s), ps, lo);
    CHECK(rescale(iview(s), ps, lo + 0.4 * (hi - lo)) == v);
    CHECK(rescale(iview(s), ps, hi - 1e-12) == v);
  }
}

TEST_CASE("monotone ladder kinds stay monotone") {
  std::vector<std::int64_t> t_ep{0, 2, 5, 11, 12};
  std::vector<double> r{0.0, 0.1, 0.1, 2.0, 2.5};
  ScalingPreset tp{ScalingKind::ladder_tp, 7, 0.45};
  ScalingPreset rp{ScalingKind::ladder_rp, 7, 0.45};
  double prev_t = -1.0, prev_r = -1.0;
  for (double t = 0.0; t < 1.55; t += 0.05) {
    double vt = rescale(iview(t_ep), tp, t);
    double vr = rescale(dview(r), rp, t);
    CHECK(vt >= prev_t);
    CHECK(vr >= prev_r);
    prev_t = vt;
    prev_r = vr;
  }
}

TEST_CASE("kind and path type must agree") {
  std::vector<std::int64_t> s{0, 1};
  std::vector<double> h{0.0, 1.0};
  PiecewiseLinearPath c;
  c.t = {0.0, 1.0};
  c.x = {0.0, 1.0};
  CHECK_THROWS_AS(rescale(iview(s), {ScalingKind::height_hp, 1, 1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(rescale(dview(h), {ScalingKind::walk_sp, 1, 1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(rescale(c, {ScalingKind::walk_sp, 1, 1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(rescale(iview(s), {ScalingKind::walk_sp, 0, 1.0}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(rescale(iview(s), {ScalingKind::walk_sp, 1, -1.0}, 0.0),
                  std::invalid_argument);
}
