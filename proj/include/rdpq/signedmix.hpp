#pragma once

// Finite signed mixtures of point masses. Every distribution estimate in the
// library is expressed as one of these (plus, for the Gaussian plug-in
// estimators, an analytic smooth part; see estimators.hpp).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rdpq/error.hpp"

namespace rdpq {

namespace detail {

// Neumaier-compensated accumulator; keeps running sums of equal weights
// (1/n repeated) on the exact fraction whenever that fraction is a double.
class compensated_sum {
public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace detail

struct Atom {
  double location;
  double weight;
};

/// Canonical signed mixture: locations strictly increasing, no zero weights.
/// The function it represents is F(y) = sum of weights at locations <= y.
class AtomMixture {
public:
  AtomMixture() = default;

  /// Sorts, coalesces exact duplicate locations and drops atoms whose
  /// coalesced weight is exactly zero.
  static AtomMixture from_atoms(std::vector<Atom> atoms) {
    for (const auto& a : atoms) {
      if (!std::isfinite(a.location) || !std::isfinite(a.weight)) {
        throw error(error_kind::invalid_input, "mixture atom is not finite");
      }
    }
    return canonicalize(std::move(atoms));
  }

  /// Unit point mass at `x`.
  static AtomMixture point_mass(double x) { return from_atoms(std::vector<Atom>{{x, 1.0}}); }

  /// Equal weights 1/k on each value (duplicates accumulate).
  static AtomMixture uniform(std::span<const double> values) {
    std::vector<Atom> atoms;
    atoms.reserve(values.size());
    const double w = 1.0 / static_cast<double>(values.size());
    for (double v : values) atoms.push_back({v, w});
    return from_atoms(std::move(atoms));
  }

  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }
  bool empty() const noexcept { return atoms_.empty(); }
  double total_mass() const noexcept { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  double min_location() const { return atoms_.front().location; }
  double max_location() const { return atoms_.back().location; }

  /// Running signed sums; cumulative()[i] = F(atoms()[i].location).
  const std::vector<double>& cumulative() const noexcept { return cumulative_; }

  /// F(y), right-continuous.
  double evaluate(double y) const {
    const auto it = std::upper_bound(atoms_.begin(), atoms_.end(), y,
                                     [](double v, const Atom& a) { return v < a.location; });
    const auto k = static_cast<std::size_t>(it - atoms_.begin());
    return k == 0 ? 0.0 : cumulative_[k - 1];
  }

  /// F(y-), the sum over locations strictly below y.
  double evaluate_left(double y) const {
    const auto it = std::lower_bound(atoms_.begin(), atoms_.end(), y,
                                     [](const Atom& a, double v) { return a.location < v; });
    const auto k = static_cast<std::size_t>(it - atoms_.begin());
    return k == 0 ? 0.0 : cumulative_[k - 1];
  }

private:
  static AtomMixture canonicalize(std::vector<Atom> atoms) {
    std::stable_sort(atoms.begin(), atoms.end(),
                     [](const Atom& a, const Atom& b) { return a.location < b.location; });
    AtomMixture m;
    m.atoms_.reserve(atoms.size());
    std::size_t i = 0;
    while (i < atoms.size()) {
      const double x = atoms[i].location;
      detail::compensated_sum w;
      for (; i < atoms.size() && atoms[i].location == x; ++i) w.add(atoms[i].weight);
      if (w.value() != 0.0) m.atoms_.push_back({x, w.value()});
    }
    m.cumulative_.resize(m.atoms_.size());
    detail::compensated_sum run;
    for (std::size_t k = 0; k < m.atoms_.size(); ++k) {
      run.add(m.atoms_[k].weight);
      m.cumulative_[k] = run.value();
    }
    return m;
  }

  friend AtomMixture combine_unchecked(std::vector<Atom> atoms);

  std::vector<Atom> atoms_;
  std::vector<double> cumulative_;
};

inline AtomMixture combine_unchecked(std::vector<Atom> atoms) {
  return AtomMixture::canonicalize(std::move(atoms));
}

inline double evaluate(const AtomMixture& m, double y) { return m.evaluate(y); }

struct Term {
  double coefficient;
  const AtomMixture* mixture;
};

/// Atomwise scaled merge: sum_k c_k * m_k.
inline AtomMixture combine(std::span<const Term> terms) {
  if (terms.empty()) throw error(error_kind::invalid_input, "combine needs at least one term");
  std::size_t total = 0;
  for (const auto& t : terms) {
    if (!std::isfinite(t.coefficient)) throw error(error_kind::invalid_input, "non-finite coefficient");
    total += t.mixture->size();
  }
  std::vector<Atom> atoms;
  atoms.reserve(total);
  for (const auto& t : terms) {
    if (t.coefficient == 0.0) continue;
    for (const auto& a : t.mixture->atoms()) atoms.push_back({a.location, t.coefficient * a.weight});
  }
  return combine_unchecked(std::move(atoms));
}

inline AtomMixture combine(std::initializer_list<Term> terms) {
  return combine(std::span<const Term>(terms.begin(), terms.size()));
}

inline constexpr std::size_t default_convolution_budget = 100'000'000;

/// Exact pairwise convolution: atoms at x_i + z_j with weight w_i * v_j.
inline AtomMixture convolve(const AtomMixture& a, const AtomMixture& b,
                            std::size_t budget = default_convolution_budget) {
  const std::size_t na = a.size(), nb = b.size();
  if (na != 0 && nb > budget / na) {
    throw error(error_kind::resource, "convolution of " + std::to_string(na) + " x " +
                                          std::to_string(nb) + " atoms exceeds budget");
  }
  std::vector<Atom> atoms;
  atoms.reserve(na * nb);
  for (const auto& x : a.atoms()) {
    for (const auto& z : b.atoms()) atoms.push_back({x.location + z.location, x.weight * z.weight});
  }
  return combine_unchecked(std::move(atoms));
}

/// Translates every location by c.
inline AtomMixture shift(const AtomMixture& m, double c) {
  std::vector<Atom> atoms = m.atoms();
  for (auto& a : atoms) a.location += c;
  return AtomMixture::from_atoms(std::move(atoms));
}

/// T_p(F) = inf{y : F(y) >= p}. For a signed mixture this is the first atom at
/// which the running sum reaches p, even if it later drops below p again.
/// A running sum short of p by no more than the rounding carried in the
/// weights (4 ulp of the accumulated |w|) counts as reaching it, so that e.g.
/// 49 weights of 1/98 reach 0.5.
inline double quantile(const AtomMixture& m, double p) {
  if (!(p > 0.0 && p < 1.0)) throw error(error_kind::invalid_input, "quantile level must lie in (0,1)");
  const auto& cum = m.cumulative();
  const auto& atoms = m.atoms();
  double abs_mass = 0.0;
  for (std::size_t k = 0; k < cum.size(); ++k) {
    abs_mass += std::abs(atoms[k].weight);
    if (cum[k] >= p - 4.0 * std::numeric_limits<double>::epsilon() * abs_mass) return atoms[k].location;
  }
  throw error(error_kind::no_quantile,
              "estimated distribution never reaches level " + std::to_string(p) +
                  " (total mass " + std::to_string(m.total_mass()) + ")");
}

/// sup_y |F1(y) - F2(y)|, attained at a jump point of either function or
/// immediately to its left.
inline double sup_distance(const AtomMixture& m1, const AtomMixture& m2) {
  double best = 0.0;
  auto scan = [&](const AtomMixture& src) {
    for (const auto& a : src.atoms()) {
      best = std::max(best, std::abs(m1.evaluate(a.location) - m2.evaluate(a.location)));
      best = std::max(best, std::abs(m1.evaluate_left(a.location) - m2.evaluate_left(a.location)));
    }
  };
  scan(m1);
  scan(m2);
  return best;
}

/// Two-column dump, locations ascending.
inline void write_csv(std::ostream& os, const AtomMixture& m) {
  const auto old = os.precision(17);
  os << "location,weight\n";
  for (const auto& a : m.atoms()) os << a.location << ',' << a.weight << '\n';
  os.precision(old);
}

}  // namespace rdpq
