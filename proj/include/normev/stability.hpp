#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normev/recognition.hpp"
#include "normev/replicator.hpp"

namespace normev {

enum class Verdict { Holds, Fails, InsufficientData };

inline std::string verdictName(Verdict v) {
  switch (v) {
    case Verdict::Holds: return "holds";
    case Verdict::Fails: return "fails";
    case Verdict::InsufficientData: return "insufficient-data";
  }
  return "?";
}

/// The per-role quantifier in the mixed stability condition is ambiguous; both
/// readings are computed.
///  - Conjunctive: strict best response in every role, or (tie in every role
///    and counter-invasion strict in every role).
///  - PerRole: every role individually satisfies strict-or-(tie and counter).
enum class BestResponseReading { Conjunctive, PerRole };

struct AlternativeDetail {
  NormId alternative = 0;
  std::string label;
  Verdict conjunctive = Verdict::InsufficientData;
  Verdict perRole = Verdict::InsufficientData;
  std::vector<int> strictRoles;   // roles where the incumbent strictly beats the deviation
  std::vector<int> tiedRoles;     // roles where payoffs tie within epsilon
};

struct StabilityVerdict {
  NormId norm = 0;
  Verdict literalConjunctive = Verdict::InsufficientData;
  Verdict literalPerRole = Verdict::InsufficientData;
  Verdict invasion = Verdict::InsufficientData;
  std::vector<AlternativeDetail> detail;  // one entry per alternative norm
};

namespace detail {

inline Verdict combine(bool anyFail, bool anyMissing) {
  if (anyFail) return Verdict::Fails;
  if (anyMissing) return Verdict::InsufficientData;
  return Verdict::Holds;
}

}  // namespace detail

/// Best-response stability of `normIdx` as a monoculture, evaluated directly
/// on payoffs: for every alternative, either the incumbent combination
/// strictly beats every single-role deviation, or it ties and the incumbent
/// strictly counter-invades the alternative's monoculture.
inline StabilityVerdict literalESNorm(const NormsGame& ng, const PayoffTable& table, int normIdx,
                                      double epsEq = 1e-9) {
  const int m = table.roles;
  const int k = table.norms;
  StabilityVerdict out;
  out.norm = ng.norm(normIdx).id;
  bool anyFailConj = false, anyMissingConj = false;
  bool anyFailRole = false, anyMissingRole = false;
  for (int alt = 0; alt < k; ++alt) {
    if (alt == normIdx) continue;
    AlternativeDetail ad;
    ad.alternative = ng.norm(alt).id;
    ad.label = ng.norm(alt).label;

    const std::vector<int> incumbent(static_cast<std::size_t>(m), normIdx);
    const std::vector<int> invader(static_cast<std::size_t>(m), alt);
    bool missing = false;
    std::vector<bool> strict(static_cast<std::size_t>(m), false);
    std::vector<bool> tied(static_cast<std::size_t>(m), false);
    std::vector<bool> counter(static_cast<std::size_t>(m), false);
    for (int i = 0; i < m && !missing; ++i) {
      std::vector<int> dev = incumbent;
      dev[static_cast<std::size_t>(i)] = alt;
      std::vector<int> counterCombo = invader;
      counterCombo[static_cast<std::size_t>(i)] = normIdx;
      const auto incPay = table.at(incumbent, i);
      const auto devPay = table.at(dev, i);
      const auto invPay = table.at(invader, i);
      const auto ctrPay = table.at(counterCombo, i);
      if (!incPay || !devPay || !invPay || !ctrPay) {
        missing = true;
        break;
      }
      strict[static_cast<std::size_t>(i)] = *incPay > *devPay + epsEq;
      tied[static_cast<std::size_t>(i)] = std::abs(*incPay - *devPay) <= epsEq;
      counter[static_cast<std::size_t>(i)] = *invPay < *ctrPay - epsEq;
      if (strict[static_cast<std::size_t>(i)]) ad.strictRoles.push_back(i);
      if (tied[static_cast<std::size_t>(i)]) ad.tiedRoles.push_back(i);
    }
    if (missing) {
      ad.conjunctive = Verdict::InsufficientData;
      ad.perRole = Verdict::InsufficientData;
      anyMissingConj = anyMissingRole = true;
    } else {
      bool allStrict = true, allTied = true, allCounter = true, allPerRole = true;
      for (int i = 0; i < m; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        allStrict = allStrict && strict[idx];
        allTied = allTied && tied[idx];
        allCounter = allCounter && counter[idx];
        allPerRole = allPerRole && (strict[idx] || (tied[idx] && counter[idx]));
      }
      const bool conj = allStrict || (allTied && allCounter);
      ad.conjunctive = conj ? Verdict::Holds : Verdict::Fails;
      ad.perRole = allPerRole ? Verdict::Holds : Verdict::Fails;
      anyFailConj = anyFailConj || !conj;
      anyFailRole = anyFailRole || !allPerRole;
    }
    out.detail.push_back(std::move(ad));
  }
  out.literalConjunctive = detail::combine(anyFailConj, anyMissingConj);
  out.literalPerRole = detail::combine(anyFailRole, anyMissingRole);
  return out;
}

/// Fitness-level invasion test: put the incumbent at frequency
/// 1 - eps*(K-1) and every alternative at eps, then require the incumbent's
/// conditional fitness to strictly exceed that of every alternative that has
/// recorded payoffs. Alternatives with no data are skipped; an incumbent with
/// no data is indeterminate.
inline Verdict invasionStableNorm(const PayoffTable& table, int normIdx, double epsInv = 0.01) {
  const int k = table.norms;
  if (k <= 1) return Verdict::Holds;
  std::vector<double> freqs(static_cast<std::size_t>(k), epsInv);
  freqs[static_cast<std::size_t>(normIdx)] = 1.0 - epsInv * (k - 1);
  const auto info = allNormFitness(table, freqs, UndefinedPayoffPolicy::SkipAndRenormalise);
  const FitnessInfo& inc = info[static_cast<std::size_t>(normIdx)];
  if (inc.definedMass <= 0.0) return Verdict::InsufficientData;
  const double incCond = inc.value / freqs[static_cast<std::size_t>(normIdx)];
  for (int alt = 0; alt < k; ++alt) {
    if (alt == normIdx) continue;
    const FitnessInfo& a = info[static_cast<std::size_t>(alt)];
    if (a.definedMass <= 0.0) continue;  // nothing recorded for this alternative
    const double altCond = a.value / freqs[static_cast<std::size_t>(alt)];
    if (!(incCond > altCond)) return Verdict::Fails;
  }
  return Verdict::Holds;
}

inline StabilityVerdict stabilityVerdict(const NormsGame& ng, int normIdx, double beta,
                                         double epsEq = 1e-9, double epsInv = 0.01) {
  const PayoffTable table = payoffMatrix(ng, beta);
  StabilityVerdict v = literalESNorm(ng, table, normIdx, epsEq);
  v.invasion = invasionStableNorm(table, normIdx, epsInv);
  return v;
}

struct GameStability {
  GameId game = -1;
  NormId norm = 0;
  Verdict invasion = Verdict::InsufficientData;
};

struct EsnsReport {
  bool stable = false;
  std::string reason;
  std::vector<GameStability> perGame;
};

/// A normative system is evolutionarily stable when every agent holds the very
/// same system covering every discovered game, and each assigned norm passes
/// the invasion test.
inline EsnsReport isESNS(const PopulationState& pop, const GamesBase& gb, double beta,
                         double epsInv = 0.01) {
  EsnsReport rep;
  if (pop.agentCount() == 0) {
    rep.reason = "empty population";
    return rep;
  }
  const NormativeSystem& first = pop.agents.front();
  for (const NormativeSystem& ns : pop.agents) {
    if (!(ns == first)) {
      rep.reason = "not adopted by all agents";
      return rep;
    }
  }
  if (static_cast<int>(first.assignment.size()) != gb.size()) {
    rep.reason = "normative system does not cover every game";
    return rep;
  }
  bool allStable = true;
  for (const auto& [id, ng] : gb.games()) {
    const auto assigned = normForGame(first, id);
    if (!assigned) {
      rep.reason = "normative system does not cover every game";
      return rep;
    }
    GameStability gs;
    gs.game = id;
    gs.norm = *assigned;
    gs.invasion = invasionStableNorm(payoffMatrix(ng, beta), ng.normIndexOf(*assigned), epsInv);
    if (gs.invasion != Verdict::Holds) {
      allStable = false;
      if (rep.reason.empty())
        rep.reason = "norm for game " + std::to_string(id) + " is not stable (" +
                     verdictName(gs.invasion) + ")";
    }
    rep.perGame.push_back(gs);
  }
  rep.stable = allStable;
  if (rep.stable) rep.reason = "stable";
  return rep;
}

/// Replaces ceil(fraction * N) seeded-chosen agents' systems with mutant ones:
/// for each game a norm drawn uniformly from the space excluding the current
/// majority norm. Games with a single norm keep their assignment. Returns the
/// mutated agent ids.
inline std::vector<AgentId> injectMutants(PopulationState& pop, const GamesBase& gb,
                                          double fraction, SeededRng& rng) {
  if (!(fraction > 0.0 && fraction < 1.0))
    throw std::invalid_argument("injectMutants: fraction must lie in (0,1)");
  const int n = pop.agentCount();
  const int count = static_cast<int>(std::ceil(fraction * n));
  // majority norm per game, before any mutation
  std::map<GameId, int> majority;
  for (const auto& [id, ng] : gb.games()) {
    const std::vector<int> c = pop.counts(ng);
    int best = 0;
    for (int i = 1; i < static_cast<int>(c.size()); ++i)
      if (c[static_cast<std::size_t>(i)] > c[static_cast<std::size_t>(best)]) best = i;
    majority[id] = best;
  }
  std::vector<AgentId> order(static_cast<std::size_t>(n));
  for (AgentId a = 0; a < n; ++a) order[static_cast<std::size_t>(a)] = a;
  rng.shuffle(order);
  std::vector<AgentId> mutated(order.begin(), order.begin() + count);
  for (const AgentId a : mutated) {
    NormativeSystem& ns = pop.agents[static_cast<std::size_t>(a)];
    for (const auto& [id, ng] : gb.games()) {
      const int k = ng.normCount();
      if (k <= 1) continue;
      const int skip = majority.at(id);
      int pick = rng.intBelow(k - 1);
      if (pick >= skip) ++pick;
      ns.assignment[id] = ng.norm(pick).id;
    }
  }
  return mutated;
}

}  // namespace normev
