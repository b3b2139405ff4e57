#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "normev/types.hpp"

namespace normev {

/// A coordination situation discovered at runtime: a context, m roles, the
/// actions available to each role and the per-role actions that produced the
/// originating conflict.
struct MRoleGame {
  GameId id = -1;
  Context context;
  std::vector<std::vector<ActionId>> actionSets;     // one set per role
  std::vector<ActionId> conflictingActions;          // one per role

  int roleCount() const { return static_cast<int>(actionSets.size()); }

  void validate() const {
    if (context.roleCount() != roleCount() || roleCount() < 1)
      throw std::invalid_argument("MRoleGame: role count mismatch");
    if (static_cast<int>(conflictingActions.size()) != roleCount())
      throw std::invalid_argument("MRoleGame: conflictingActions size mismatch");
    for (int i = 0; i < roleCount(); ++i) {
      if (actionSets[i].empty()) throw std::invalid_argument("MRoleGame: empty action set");
      if (std::find(actionSets[i].begin(), actionSets[i].end(), conflictingActions[i]) ==
          actionSets[i].end())
        throw std::invalid_argument("MRoleGame: conflicting action not in action set");
    }
  }
};

/// A behavioural constraint attached to a game context: per role, the set of
/// actions the holder must not perform when playing that role.
struct Norm {
  NormId id = 0;
  std::string label;                                 // position in its norm space, "n1".."n{2^m}"
  Context precondition;
  std::vector<std::vector<ActionId>> prohibitions;   // per role, sorted

  int roleCount() const { return static_cast<int>(prohibitions.size()); }

  bool prohibits(int role, ActionId a) const {
    const auto& p = prohibitions.at(static_cast<std::size_t>(role));
    return std::find(p.begin(), p.end(), a) != p.end();
  }

  std::string key() const {
    std::string out = precondition.key();
    out.push_back('|');
    for (const auto& p : prohibitions) {
      out.push_back(static_cast<char>(p.size()));
      for (const ActionId a : p) out.push_back(static_cast<char>(a));
    }
    return out;
  }

  bool operator==(const Norm& o) const {
    return precondition == o.precondition && prohibitions == o.prohibitions;
  }
};

inline NormId normIdFor(const Context& precondition,
                        const std::vector<std::vector<ActionId>>& prohibitions) {
  Norm n;
  n.precondition = precondition;
  n.prohibitions = prohibitions;
  return fnv1a(n.key());
}

/// True iff the norm applies in the game. Entailment is concretised as exact
/// structural equality of contexts.
inline bool normApplies(const MRoleGame& game, const Norm& norm) {
  return norm.precondition == game.context;
}

/// The actions a holder of `norm` may perform in `role`, i.e. the action set
/// minus the role's prohibitions. Non-empty for any well-formed norm.
inline std::vector<ActionId> permittedActions(const Norm& norm, int role,
                                              const std::vector<ActionId>& actionSet) {
  if (role < 0 || role >= norm.roleCount())
    throw std::out_of_range("permittedActions: role index out of range");
  std::vector<ActionId> out;
  for (const ActionId a : actionSet)
    if (!norm.prohibits(role, a)) out.push_back(a);
  return out;
}

/// One norm per discovered game. Games not yet discovered have no entry; the
/// agent acts unconstrained there.
struct NormativeSystem {
  std::map<GameId, NormId> assignment;

  bool operator==(const NormativeSystem&) const = default;

  std::string key() const {
    std::string out;
    for (const auto& [g, n] : assignment) {
      out += std::to_string(g);
      out.push_back(':');
      out += std::to_string(n);
      out.push_back(';');
    }
    return out;
  }
};

inline std::optional<NormId> normForGame(const NormativeSystem& ns, GameId game) {
  const auto it = ns.assignment.find(game);
  if (it == ns.assignment.end()) return std::nullopt;
  return it->second;
}

/// One remembered play: the norm combination used (as norm-space indices),
/// the reward each role obtained, and the tick it happened.
struct MemoryEntry {
  std::vector<int> combo;
  std::vector<double> rewards;
  long tick = 0;
};

/// An m-role game together with its norm space and a bounded, oldest-first
/// evicted memory of plays.
class NormsGame {
 public:
  NormsGame(MRoleGame game, std::vector<Norm> normSpace, int windowCapacity = 100)
      : game_(std::move(game)), normSpace_(std::move(normSpace)), capacity_(windowCapacity) {
    if (capacity_ < 1) throw std::invalid_argument("NormsGame: window capacity must be positive");
    game_.validate();
    for (std::size_t i = 0; i < normSpace_.size(); ++i) {
      const Norm& n = normSpace_[i];
      if (n.roleCount() != game_.roleCount())
        throw std::invalid_argument("NormsGame: norm role count mismatch");
      if (!normApplies(game_, n))
        throw std::invalid_argument("NormsGame: norm does not apply to the game");
      for (int r = 0; r < n.roleCount(); ++r) {
        if (permittedActions(n, r, game_.actionSets[r]).empty())
          throw std::invalid_argument("NormsGame: norm leaves no permitted action");
      }
      if (indexById_.count(n.id))
        throw std::invalid_argument("NormsGame: duplicate norm id in norm space");
      indexById_[n.id] = static_cast<int>(i);
    }
  }

  const MRoleGame& game() const { return game_; }
  GameId id() const { return game_.id; }
  int roleCount() const { return game_.roleCount(); }
  const std::vector<Norm>& normSpace() const { return normSpace_; }
  int normCount() const { return static_cast<int>(normSpace_.size()); }
  const Norm& norm(int index) const { return normSpace_.at(static_cast<std::size_t>(index)); }

  int normIndexOf(NormId id) const {
    const auto it = indexById_.find(id);
    if (it == indexById_.end()) throw std::invalid_argument("NormsGame: unknown norm id");
    return it->second;
  }
  bool hasNorm(NormId id) const { return indexById_.count(id) != 0; }

  const std::deque<MemoryEntry>& memory() const { return memory_; }
  int windowCapacity() const { return capacity_; }
  long playCount() const { return playCount_; }

  /// Appends one play; evicts the oldest entry when the window is full.
  void record(const std::vector<NormId>& combo, const std::vector<double>& rewards, long tick) {
    const int m = roleCount();
    if (static_cast<int>(combo.size()) != m || static_cast<int>(rewards.size()) != m)
      throw std::invalid_argument("NormsGame::record: malformed entry (length mismatch)");
    MemoryEntry e;
    e.combo.reserve(combo.size());
    for (const NormId n : combo) e.combo.push_back(normIndexOf(n));
    for (const double r : rewards) {
      if (!(r >= 0.0) || !std::isfinite(r))
        throw std::invalid_argument("NormsGame::record: malformed entry (negative reward)");
    }
    e.rewards = rewards;
    e.tick = tick;
    memory_.push_back(std::move(e));
    if (static_cast<int>(memory_.size()) > capacity_) memory_.pop_front();
    ++playCount_;
  }

  void recordByIndex(const std::vector<int>& comboIdx, const std::vector<double>& rewards,
                     long tick) {
    std::vector<NormId> combo;
    combo.reserve(comboIdx.size());
    for (const int i : comboIdx) combo.push_back(norm(i).id);
    record(combo, rewards, tick);
  }

  void clearMemory() {
    memory_.clear();
    playCount_ = 0;
  }

 private:
  MRoleGame game_;
  std::vector<Norm> normSpace_;
  int capacity_;
  std::deque<MemoryEntry> memory_;
  std::map<NormId, int> indexById_;
  long playCount_ = 0;
};

/// The agent population: one normative system per agent, with norm
/// frequencies derived from the assignment counts.
struct PopulationState {
  std::vector<NormativeSystem> agents;

  explicit PopulationState(int agentCount = 0) : agents(static_cast<std::size_t>(agentCount)) {}

  int agentCount() const { return static_cast<int>(agents.size()); }

  std::vector<int> counts(const NormsGame& ng) const {
    std::vector<int> out(static_cast<std::size_t>(ng.normCount()), 0);
    for (const NormativeSystem& ns : agents) {
      const auto n = normForGame(ns, ng.id());
      if (n) ++out[static_cast<std::size_t>(ng.normIndexOf(*n))];
    }
    return out;
  }

  /// F(game, norm) by norm-space index: the proportion of agents whose
  /// normative system holds that norm for the game.
  std::vector<double> frequencies(const NormsGame& ng) const {
    const std::vector<int> c = counts(ng);
    std::vector<double> out(c.size(), 0.0);
    if (agents.empty()) return out;
    for (std::size_t i = 0; i < c.size(); ++i)
      out[i] = static_cast<double>(c[i]) / static_cast<double>(agents.size());
    return out;
  }

  double frequency(const NormsGame& ng, NormId norm) const {
    return frequencies(ng)[static_cast<std::size_t>(ng.normIndexOf(norm))];
  }
};

/// Integer apportionment of `total` units over fractional targets by largest
/// remainder; remainder ties go to the lower index.
inline std::vector<int> apportionLargestRemainder(const std::vector<double>& targets, int total) {
  const std::size_t k = targets.size();
  std::vector<int> counts(k, 0);
  if (k == 0) return counts;
  std::vector<double> remainders(k, 0.0);
  int assigned = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const double exact = targets[i] * total;
    counts[i] = static_cast<int>(std::floor(exact + 1e-12));
    remainders[i] = exact - counts[i];
    assigned += counts[i];
  }
  std::vector<std::size_t> order(k);
  for (std::size_t i = 0; i < k; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return remainders[a] > remainders[b];
  });
  for (std::size_t j = 0; assigned < total; ++j) {
    ++counts[order[j % k]];
    ++assigned;
  }
  // If rounding overshot (degenerate targets), trim from the lowest remainders.
  for (std::size_t j = k; assigned > total; --j) {
    std::size_t idx = order[(j - 1) % k];
    if (counts[idx] > 0) {
      --counts[idx];
      --assigned;
    }
  }
  return counts;
}

}  // namespace normev
