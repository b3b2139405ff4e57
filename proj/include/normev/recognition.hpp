#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "normev/norm_model.hpp"
#include "normev/rng.hpp"

namespace normev {

/// One conflicting agent's situation just before the conflict: its perception,
/// the action it performed and the actions it had available.
struct ParticipantSnapshot {
  AgentId agent = -1;
  Descriptor view;
  ActionId actionTaken = 0;
  std::vector<ActionId> actionsAvailable;
};

/// A detected conflict. Participants are the agents whose previous-tick
/// actions produced the conflict, already in canonical role order, with
/// snapshots taken strictly at tick - 1.
struct ConflictReport {
  long tick = 0;
  std::vector<ParticipantSnapshot> roles;

  int roleCount() const { return static_cast<int>(roles.size()); }
};

/// Abstracts a conflict into an m-role game: the context is the participants'
/// pre-conflict perceptions in role order, action sets and conflicting actions
/// come from the same snapshots. The id is assigned at registration.
inline MRoleGame buildGame(const ConflictReport& report) {
  if (report.roles.empty()) throw std::invalid_argument("buildGame: empty conflict report");
  MRoleGame g;
  for (const ParticipantSnapshot& p : report.roles) {
    g.context.perRoleView.push_back(p.view);
    g.actionSets.push_back(p.actionsAvailable);
    g.conflictingActions.push_back(p.actionTaken);
  }
  g.validate();
  return g;
}

/// The norm space of a game: one norm per subset of roles, prohibiting the
/// conflicting action of every role in the subset and nothing else. Ordered by
/// subset bitmask, so the empty-prohibition norm always comes first.
inline std::vector<Norm> buildNormSpace(const MRoleGame& game) {
  game.validate();
  const int m = game.roleCount();
  if (m > 16) throw std::invalid_argument("buildNormSpace: too many roles");
  for (int i = 0; i < m; ++i) {
    if (game.actionSets[static_cast<std::size_t>(i)].size() == 1)
      throw std::invalid_argument(
          "buildNormSpace: invalid game, a role has no alternative to its conflicting action");
  }
  std::vector<Norm> out;
  const unsigned total = 1u << m;
  out.reserve(total);
  for (unsigned mask = 0; mask < total; ++mask) {
    Norm n;
    n.precondition = game.context;
    n.prohibitions.assign(static_cast<std::size_t>(m), {});
    for (int i = 0; i < m; ++i)
      if (mask & (1u << i))
        n.prohibitions[static_cast<std::size_t>(i)] = {
            game.conflictingActions[static_cast<std::size_t>(i)]};
    n.label = "n" + std::to_string(mask + 1);
    n.id = normIdFor(n.precondition, n.prohibitions);
    out.push_back(std::move(n));
  }
  return out;
}

/// Runtime store of all recognised games, keyed by context.
class GamesBase {
 public:
  bool contains(const Context& ctx) const { return byContext_.count(ctx.key()) != 0; }

  std::optional<GameId> find(const Context& ctx) const {
    const auto it = byContext_.find(ctx.key());
    if (it == byContext_.end()) return std::nullopt;
    return it->second;
  }

  const NormsGame& at(GameId id) const { return games_.at(id); }
  NormsGame& at(GameId id) { return games_.at(id); }
  const std::map<GameId, NormsGame>& games() const { return games_; }
  std::map<GameId, NormsGame>& games() { return games_; }
  int size() const { return static_cast<int>(games_.size()); }

  std::set<int> roleCounts() const {
    std::set<int> out;
    for (const auto& [id, ng] : games_) out.insert(ng.roleCount());
    return out;
  }

  GameId add(MRoleGame game, std::vector<Norm> normSpace, int windowCapacity) {
    const std::string key = game.context.key();
    if (byContext_.count(key))
      throw std::invalid_argument("GamesBase: game with this context is already registered");
    const GameId id = next_++;
    game.id = id;
    games_.emplace(id, NormsGame(std::move(game), std::move(normSpace), windowCapacity));
    byContext_.emplace(key, id);
    return id;
  }

  // Re-inserts an already identified game (dump loading).
  GameId addWithId(MRoleGame game, std::vector<Norm> normSpace, int windowCapacity) {
    const std::string key = game.context.key();
    if (game.id < 0 || games_.count(game.id) || byContext_.count(key))
      throw std::invalid_argument("GamesBase: bad or duplicate game id");
    const GameId id = game.id;
    next_ = std::max(next_, id + 1);
    games_.emplace(id, NormsGame(std::move(game), std::move(normSpace), windowCapacity));
    byContext_.emplace(key, id);
    return id;
  }

 private:
  std::map<GameId, NormsGame> games_;
  std::map<std::string, GameId> byContext_;
  GameId next_ = 0;
};

/// Stores a new game and hands exactly one norm of its space to every agent,
/// as close to uniform as integer counts allow; which agent gets which norm is
/// drawn from the seeded source.
inline GameId registerGame(GamesBase& gb, MRoleGame game, std::vector<Norm> normSpace,
                           PopulationState& pop, SeededRng& rng, int windowCapacity = 100) {
  const GameId id = gb.add(std::move(game), std::move(normSpace), windowCapacity);
  const NormsGame& ng = gb.at(id);
  const int k = ng.normCount();
  const int n = pop.agentCount();
  if (k == 0 || n == 0) return id;
  const std::vector<int> counts =
      apportionLargestRemainder(std::vector<double>(static_cast<std::size_t>(k), 1.0 / k), n);
  std::vector<AgentId> order(static_cast<std::size_t>(n));
  for (AgentId a = 0; a < n; ++a) order[static_cast<std::size_t>(a)] = a;
  rng.shuffle(order);
  std::size_t pos = 0;
  for (int i = 0; i < k; ++i) {
    for (int c = 0; c < counts[static_cast<std::size_t>(i)]; ++c) {
      pop.agents[static_cast<std::size_t>(order[pos++])].assignment[id] = ng.norm(i).id;
    }
  }
  return id;
}

/// A group of agents whose joint situation might equal a stored game context.
/// Produced by the domain with agents already in canonical role order.
struct CandidateGroup {
  std::vector<AgentId> agents;
  Context context;
};

/// One concurrent play of a stored game: the game and the agent enacting each
/// role (injective by construction).
struct GamePlay {
  GameId game = -1;
  std::vector<AgentId> roleAgents;

  int roleCount() const { return static_cast<int>(roleAgents.size()); }
};

/// Matches candidate groups against the games base. Within one game each agent
/// appears in at most one match (greedy in candidate order); matches for
/// different games may still overlap, see selectDisjointPlays.
inline std::vector<GamePlay> matchGamePlays(const GamesBase& gb,
                                            const std::vector<CandidateGroup>& candidates) {
  std::vector<GamePlay> out;
  std::map<GameId, std::set<AgentId>> used;
  for (const CandidateGroup& cand : candidates) {
    const auto id = gb.find(cand.context);
    if (!id) continue;
    auto& taken = used[*id];
    bool free = true;
    for (const AgentId a : cand.agents)
      if (taken.count(a)) {
        free = false;
        break;
      }
    if (!free) continue;
    for (const AgentId a : cand.agents) taken.insert(a);
    out.push_back(GamePlay{*id, cand.agents});
  }
  std::stable_sort(out.begin(), out.end(), [](const GamePlay& a, const GamePlay& b) {
    if (a.game != b.game) return a.game < b.game;
    return a.roleAgents < b.roleAgents;
  });
  return out;
}

/// Resolves cross-game overlaps: an agent takes part in at most one play per
/// tick, preferring games with more roles, then smaller game ids, then the
/// canonical agent tuple.
inline std::vector<GamePlay> selectDisjointPlays(std::vector<GamePlay> plays) {
  std::stable_sort(plays.begin(), plays.end(), [](const GamePlay& a, const GamePlay& b) {
    if (a.roleCount() != b.roleCount()) return a.roleCount() > b.roleCount();
    if (a.game != b.game) return a.game < b.game;
    return a.roleAgents < b.roleAgents;
  });
  std::set<AgentId> busy;
  std::vector<GamePlay> out;
  for (GamePlay& p : plays) {
    bool free = true;
    for (const AgentId a : p.roleAgents)
      if (busy.count(a)) {
        free = false;
        break;
      }
    if (!free) continue;
    for (const AgentId a : p.roleAgents) busy.insert(a);
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace normev
