#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "normev/payoff.hpp"
#include "normev/rng.hpp"

namespace normev {

/// What to do when a norm combination has no recorded payoff yet.
///  - TreatAsZero: missing payoffs contribute 0 (conservative toward unproven combos).
///  - SkipAndRenormalise: average only over combos with data, rescaled to the
///    full probability mass.
enum class UndefinedPayoffPolicy { TreatAsZero, SkipAndRenormalise };

struct ReplicationConfig {
  int convergenceWindow = 30;          // rounds the frequencies must sit still
  double convergenceEpsilon = 1e-3;
  double extinctionFloor = 1e-3;       // frequencies below this are zeroed
  UndefinedPayoffPolicy policy = UndefinedPayoffPolicy::TreatAsZero;

  void validate() const {
    if (convergenceWindow < 1)
      throw std::invalid_argument("ReplicationConfig: convergenceWindow must be >= 1");
    if (!(extinctionFloor >= 0.0 && extinctionFloor < 1.0))
      throw std::invalid_argument("ReplicationConfig: extinctionFloor must lie in [0,1)");
  }
};

/// Joint frequency of a norm combination: the product of the component norms'
/// frequencies.
inline double jointFrequency(const std::vector<double>& freqs, const std::vector<int>& comboIdx) {
  double p = 1.0;
  for (const int i : comboIdx) {
    if (i < 0 || i >= static_cast<int>(freqs.size()))
      throw std::invalid_argument("jointFrequency: unknown norm index");
    p *= freqs[static_cast<std::size_t>(i)];
  }
  return p;
}

inline double jointFrequency(const NormsGame& ng, const std::vector<double>& freqs,
                             const std::vector<NormId>& combo) {
  std::vector<int> idx;
  idx.reserve(combo.size());
  for (const NormId n : combo) idx.push_back(ng.normIndexOf(n));
  return jointFrequency(freqs, idx);
}

struct FitnessInfo {
  double value = 0.0;        // f(n) under the configured policy
  double definedMass = 0.0;  // probability mass of combos with recorded payoffs
  double totalMass = 0.0;    // full probability mass over the norm's combos
};

/// Fitness of every norm in one sweep over the combination space:
/// f(n) = sum over roles i and combos with n at role i of payoff(combo, i)
/// times the joint frequency of the combo.
inline std::vector<FitnessInfo> allNormFitness(const PayoffTable& table,
                                               const std::vector<double>& freqs,
                                               UndefinedPayoffPolicy policy) {
  const int k = table.norms;
  const int m = table.roles;
  if (static_cast<int>(freqs.size()) != k)
    throw std::invalid_argument("allNormFitness: frequency table size mismatch");
  std::vector<FitnessInfo> info(static_cast<std::size_t>(k));
  std::vector<int> combo(static_cast<std::size_t>(m), 0);
  for (long c = 0; c < table.comboCount(); ++c) {
    const double p = jointFrequency(freqs, combo);
    for (int role = 0; role < m; ++role) {
      FitnessInfo& fi = info[static_cast<std::size_t>(combo[static_cast<std::size_t>(role)])];
      fi.totalMass += p;
      const auto& payoff = table.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(role)];
      if (payoff) {
        fi.value += *payoff * p;
        fi.definedMass += p;
      }
    }
    for (int r = m - 1; r >= 0; --r) {
      if (++combo[static_cast<std::size_t>(r)] < k) break;
      combo[static_cast<std::size_t>(r)] = 0;
    }
  }
  if (policy == UndefinedPayoffPolicy::SkipAndRenormalise) {
    for (FitnessInfo& fi : info) {
      if (fi.definedMass > 0.0)
        fi.value *= fi.totalMass / fi.definedMass;
      else
        fi.value = 0.0;
    }
  }
  return info;
}

inline FitnessInfo normFitnessInfo(const PayoffTable& table, int normIdx,
                                   const std::vector<double>& freqs,
                                   UndefinedPayoffPolicy policy) {
  if (normIdx < 0 || normIdx >= table.norms)
    throw std::invalid_argument("normFitnessInfo: unknown norm index");
  return allNormFitness(table, freqs, policy)[static_cast<std::size_t>(normIdx)];
}

inline double normFitness(const PayoffTable& table, int normIdx, const std::vector<double>& freqs,
                          UndefinedPayoffPolicy policy = UndefinedPayoffPolicy::TreatAsZero) {
  return normFitnessInfo(table, normIdx, freqs, policy).value;
}

inline double normFitness(const NormsGame& ng, const Norm& norm, const std::vector<double>& freqs,
                          double beta,
                          UndefinedPayoffPolicy policy = UndefinedPayoffPolicy::TreatAsZero) {
  return normFitness(payoffMatrix(ng, beta), ng.normIndexOf(norm.id), freqs, policy);
}

/// Expected payoff of a focal agent conditioned on actually holding the norm:
/// f(n) / F(n). Absent when F(n) = 0.
inline std::optional<double> conditionalFitness(const PayoffTable& table, int normIdx,
                                                const std::vector<double>& freqs,
                                                UndefinedPayoffPolicy policy =
                                                    UndefinedPayoffPolicy::TreatAsZero) {
  const double f = freqs.at(static_cast<std::size_t>(normIdx));
  if (f <= 0.0) return std::nullopt;
  return normFitness(table, normIdx, freqs, policy) / f;
}

/// Theta: frequency-weighted average fitness over the whole norm space.
inline double averageFitness(const PayoffTable& table, const std::vector<double>& freqs,
                             UndefinedPayoffPolicy policy = UndefinedPayoffPolicy::TreatAsZero) {
  const auto info = allNormFitness(table, freqs, policy);
  double theta = 0.0;
  for (std::size_t i = 0; i < info.size(); ++i) theta += info[i].value * freqs[i];
  return theta;
}

struct ReplicationResult {
  std::vector<double> frequencies;  // updated, clamped to [0,1], renormalised
  std::vector<double> fitness;      // f(n) used for the update
  double averageFitness = 0.0;      // theta
  bool degenerate = false;          // every norm extinguished; input returned unchanged
  bool renormalised = false;        // clamping or extinction changed the sum
};

/// One replication round for one game:
/// F(n)' = F(n) + F(n) * (f(n) - theta), then extinction floor, clamping and
/// renormalisation. Extinction is absorbing: a norm at frequency 0 stays at 0.
inline ReplicationResult replicateGame(const PayoffTable& table, const std::vector<double>& freqs,
                                       const ReplicationConfig& cfg = {}) {
  cfg.validate();
  const auto info = allNormFitness(table, freqs, cfg.policy);
  ReplicationResult res;
  res.fitness.reserve(info.size());
  for (const FitnessInfo& fi : info) res.fitness.push_back(fi.value);
  double theta = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) theta += res.fitness[i] * freqs[i];
  res.averageFitness = theta;
  res.frequencies.resize(freqs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < freqs.size(); ++i) {
    double v = freqs[i] + freqs[i] * (res.fitness[i] - theta);
    if (v < cfg.extinctionFloor) v = 0.0;
    v = std::min(1.0, v);
    res.frequencies[i] = v;
    sum += v;
  }
  if (sum <= 0.0) {
    res.degenerate = true;
    res.frequencies = freqs;
    return res;
  }
  if (std::abs(sum - 1.0) > 1e-15) {
    res.renormalised = true;
    for (double& v : res.frequencies) v /= sum;
  }
  return res;
}

/// Reassigns agents so the integer counts per norm match the target
/// frequencies (largest-remainder apportionment). Agents already holding a
/// norm keep it where possible; surplus holders are drawn by the seeded
/// source. Returns the number of reassigned agents.
inline int redistribute(PopulationState& pop, const NormsGame& ng,
                        const std::vector<double>& targets, SeededRng& rng) {
  const int k = ng.normCount();
  if (static_cast<int>(targets.size()) != k)
    throw std::invalid_argument("redistribute: target size mismatch");
  double sum = 0.0;
  for (const double t : targets) {
    if (t < -1e-12) throw std::invalid_argument("redistribute: negative target");
    sum += t;
  }
  if (std::abs(sum - 1.0) > 1e-6)
    throw std::invalid_argument("redistribute: targets must sum to 1");
  const int n = pop.agentCount();
  const std::vector<int> want = apportionLargestRemainder(targets, n);

  std::vector<std::vector<AgentId>> holders(static_cast<std::size_t>(k));
  std::vector<AgentId> unassigned;
  for (AgentId a = 0; a < n; ++a) {
    const auto cur = normForGame(pop.agents[static_cast<std::size_t>(a)], ng.id());
    if (cur)
      holders[static_cast<std::size_t>(ng.normIndexOf(*cur))].push_back(a);
    else
      unassigned.push_back(a);
  }

  std::vector<AgentId> pool = std::move(unassigned);
  for (int i = 0; i < k; ++i) {
    auto& h = holders[static_cast<std::size_t>(i)];
    const int surplus = static_cast<int>(h.size()) - want[static_cast<std::size_t>(i)];
    if (surplus <= 0) continue;
    // draw `surplus` agents to release
    rng.shuffle(h);
    for (int s = 0; s < surplus; ++s) {
      pool.push_back(h.back());
      h.pop_back();
    }
  }
  rng.shuffle(pool);
  int reassigned = 0;
  std::size_t next = 0;
  for (int i = 0; i < k; ++i) {
    auto& h = holders[static_cast<std::size_t>(i)];
    while (static_cast<int>(h.size()) < want[static_cast<std::size_t>(i)]) {
      const AgentId a = pool.at(next++);
      pop.agents[static_cast<std::size_t>(a)].assignment[ng.id()] = ng.norm(i).id;
      h.push_back(a);
      ++reassigned;
    }
  }
  return reassigned;
}

/// True iff every norm's frequency stayed within `epsilon` over the last
/// `window` rounds. The history must span at least window + 1 snapshots.
inline bool hasConverged(const std::vector<std::vector<double>>& history, int window,
                         double epsilon) {
  if (window < 1) throw std::invalid_argument("hasConverged: window must be >= 1");
  if (static_cast<int>(history.size()) < window + 1) return false;
  const std::size_t start = history.size() - static_cast<std::size_t>(window) - 1;
  const std::vector<double>& base = history[start];
  for (std::size_t r = start + 1; r < history.size(); ++r) {
    const auto& snap = history[r];
    if (snap.size() != base.size()) return false;
    for (std::size_t i = 0; i < base.size(); ++i)
      if (std::abs(snap[i] - base[i]) >= epsilon) return false;
  }
  return true;
}

}  // namespace normev
