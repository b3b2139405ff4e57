#pragma once

#include <optional>
#include <stdexcept>
#include <vector>

#include "normev/norm_model.hpp"

namespace normev {

struct DiscountConfig {
  double beta = 0.8;

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0))
      throw std::invalid_argument("DiscountConfig: beta must lie in [0,1]");
  }
};

/// Discounted average of the rewards of the memory entries recorded with
/// exactly `comboIdx`, oldest first: (sum_j r_j * beta^(k-j)) / (sum_j beta^(k-j)).
/// The most recent matching entry has weight 1; beta = 0 therefore means
/// "most recent reward only" and beta = 1 the plain arithmetic mean.
/// Absent when no entry matches.
inline std::optional<double> expectedPayoff(const NormsGame& ng, const std::vector<int>& comboIdx,
                                            int role, double beta) {
  if (static_cast<int>(comboIdx.size()) != ng.roleCount())
    throw std::invalid_argument("expectedPayoff: combo length mismatch");
  if (role < 0 || role >= ng.roleCount())
    throw std::out_of_range("expectedPayoff: role index out of range");
  for (const int i : comboIdx)
    if (i < 0 || i >= ng.normCount()) throw std::invalid_argument("expectedPayoff: unknown norm");
  double num = 0.0;
  double den = 0.0;
  double w = 1.0;
  bool any = false;
  const auto& mem = ng.memory();
  for (auto it = mem.rbegin(); it != mem.rend(); ++it) {
    if (it->combo != comboIdx) continue;
    num += it->rewards[static_cast<std::size_t>(role)] * w;
    den += w;
    w *= beta;
    any = true;
  }
  if (!any) return std::nullopt;
  return num / den;
}

inline std::optional<double> expectedPayoff(const NormsGame& ng, const std::vector<NormId>& combo,
                                            int role, double beta) {
  std::vector<int> idx;
  idx.reserve(combo.size());
  for (const NormId n : combo) idx.push_back(ng.normIndexOf(n));
  return expectedPayoff(ng, idx, role, beta);
}

/// Expected payoffs for every norm combination and role of a game.
///
/// Combinations are coded role-major: code = ((i0*K)+i1)*K+... with role 0 the
/// most significant digit and K the norm-space size.
struct PayoffTable {
  int roles = 0;
  int norms = 0;
  std::vector<std::vector<std::optional<double>>> values;  // [comboCode][role]

  long comboCount() const { return static_cast<long>(values.size()); }

  static long code(const std::vector<int>& comboIdx, int norms) {
    long c = 0;
    for (const int i : comboIdx) c = c * norms + i;
    return c;
  }

  std::vector<int> decode(long code) const {
    std::vector<int> out(static_cast<std::size_t>(roles), 0);
    for (int r = roles - 1; r >= 0; --r) {
      out[static_cast<std::size_t>(r)] = static_cast<int>(code % norms);
      code /= norms;
    }
    return out;
  }

  const std::optional<double>& at(const std::vector<int>& comboIdx, int role) const {
    return values[static_cast<std::size_t>(code(comboIdx, norms))][static_cast<std::size_t>(role)];
  }
};

inline PayoffTable payoffMatrix(const NormsGame& ng, double beta) {
  PayoffTable t;
  t.roles = ng.roleCount();
  t.norms = ng.normCount();
  long combos = 1;
  for (int r = 0; r < t.roles; ++r) combos *= t.norms;
  t.values.assign(static_cast<std::size_t>(combos),
                  std::vector<std::optional<double>>(static_cast<std::size_t>(t.roles)));
  std::vector<int> combo(static_cast<std::size_t>(t.roles), 0);
  for (long c = 0; c < combos; ++c) {
    for (int role = 0; role < t.roles; ++role)
      t.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(role)] =
          expectedPayoff(ng, combo, role, beta);
    // odometer, last role fastest
    for (int r = t.roles - 1; r >= 0; --r) {
      if (++combo[static_cast<std::size_t>(r)] < t.norms) break;
      combo[static_cast<std::size_t>(r)] = 0;
    }
  }
  return t;
}

}  // namespace normev
