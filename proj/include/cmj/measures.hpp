#pragma once
// Finite atomic measures on (0, inf).  Atoms are stored sorted, multiplicity
// by repetition; +inf is the honest "min of empty set" sentinel.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace cmj {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// nu((0, t]) on a sorted atom array.  t <= 0 gives 0.
inline std::int64_t count_up_to(std::span<const double> atoms, double t) {
  return std::upper_bound(atoms.begin(), atoms.end(), t) - atoms.begin();
}

// Location of the n-th atom: min{t >= 0 : nu(t) >= n}.  n = 0 -> 0,
// n > |nu| -> +inf.
inline double atom_location(std::span<const double> atoms, std::int64_t n) {
  if (n < 0) throw std::invalid_argument("atom_location: n < 0");
  if (n == 0) return 0.0;
  if (n > std::ssize(atoms)) return kInf;
  return atoms[static_cast<std::size_t>(n - 1)];
}

class AtomicMeasure {
  std::vector<double> atoms_;

public:
  AtomicMeasure() = default;
  explicit AtomicMeasure(std::vector<double> atoms) : atoms_(std::move(atoms)) {
    std::sort(atoms_.begin(), atoms_.end());
    for (double a : atoms_)
      if (!(a > 0.0) || !std::isfinite(a))
        throw std::invalid_argument("AtomicMeasure: atoms must be finite and > 0");
  }
  // Trusted fast path for already-sorted data from samplers.
  static AtomicMeasure from_sorted(std::vector<double> atoms) {
    AtomicMeasure m;
    m.atoms_ = std::move(atoms);
    return m;
  }

  std::int64_t size() const { return std::ssize(atoms_); }
  bool empty() const { return atoms_.empty(); }
  std::span<const double> atoms() const { return atoms_; }
  double operator[](std::int64_t i) const {
    return atoms_[static_cast<std::size_t>(i)];
  }

  std::int64_t count_up_to(double t) const { return cmj::count_up_to(atoms_, t); }
  double atom_location(std::int64_t n) const {
    return cmj::atom_location(atoms_, n);
  }

  // nu stopped at x: keeps exactly the atoms in (0, x].
  AtomicMeasure restrict_to(double x) const {
    if (x < 0.0) throw std::invalid_argument("restrict_to: x < 0");
    auto end = std::upper_bound(atoms_.begin(), atoms_.end(), x);
    return from_sorted(std::vector<double>(atoms_.begin(), end));
  }

  bool operator==(const AtomicMeasure&) const = default;
};

inline std::int64_t count_up_to(const AtomicMeasure& nu, double t) {
  return nu.count_up_to(t);
}
inline double atom_location(const AtomicMeasure& nu, std::int64_t n) {
  return nu.atom_location(n);
}

// Debug-dump format: one CSV row of ascending times.
inline std::string to_csv_row(const AtomicMeasure& nu) {
  std::ostringstream os;
  os.precision(17);
  for (std::int64_t i = 0; i < nu.size(); ++i) {
    if (i) os << ',';
    os << nu[i];
  }
  return os.str();
}

inline AtomicMeasure measure_from_csv_row(const std::string& row) {
  std::vector<double> atoms;
  std::istringstream is(row);
  std::string cell;
  while (std::getline(is, cell, ',')) {
    if (cell.empty()) continue;
    atoms.push_back(std::stod(cell));
  }
  return AtomicMeasure(std::move(atoms));
}

}  // namespace cmj
