#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "normev/payoff.hpp"
#include "normev/recognition.hpp"
#include "normev/replicator.hpp"
#include "normev/stability.hpp"
#include "normev/traffic.hpp"

namespace normev {

struct EngineConfig {
  traffic::TrafficConfig traffic;
  int agentCount = 100;
  int ticksPerRound = 200;
  double beta = 0.8;
  traffic::RewardProfile profile = traffic::RewardProfile::fromIndex(7);
  int windowCapacity = 100;
  ReplicationConfig replication;
  bool freezeGames = false;  // stability runs keep the games base fixed
  bool spawning = true;

  void validate() const {
    traffic.validate();
    replication.validate();
    DiscountConfig{beta}.validate();
    if (agentCount < 1) throw std::invalid_argument("EngineConfig: agentCount must be positive");
    if (ticksPerRound < 1)
      throw std::invalid_argument("EngineConfig: ticksPerRound must be positive");
    if (windowCapacity < 1)
      throw std::invalid_argument("EngineConfig: windowCapacity must be positive");
  }
};

struct RoundStats {
  int round = 0;
  long plays = 0;                 // recorded game plays
  long playRoles = 0;             // role slots across recorded plays
  long collidedPlayRoles = 0;     // role slots whose outcome was a collision
  long carsEnteringCollision = 0; // car-ticks entering a collision, matched or not
  int newGames = 0;
  int degenerateGames = 0;
  int renormalisedGames = 0;
  int reassignedAgents = 0;

  /// 1 - collided car-ticks / plays, clamped to [0,1]; 1 when nothing was
  /// at stake and nothing collided.
  double avoidanceRate() const {
    if (plays <= 0) return carsEnteringCollision > 0 ? 0.0 : 1.0;
    const double r = 1.0 - static_cast<double>(carsEnteringCollision) / static_cast<double>(plays);
    return std::min(1.0, std::max(0.0, r));
  }
};

struct FrequencyRow {
  int round = 0;
  GameId game = -1;
  std::string normLabel;
  NormId norm = 0;
  double frequency = 0.0;
  double fitness = 0.0;
  double averageFitness = 0.0;
};

/// One simulation: the traffic world, the games base, the agent population and
/// the per-round replication loop.
class SynthesisEngine {
 public:
  SynthesisEngine(EngineConfig cfg, SeededRng rng)
      : cfg_(cfg), rng_(rng), world_(cfg.traffic), population_(cfg.agentCount) {
    cfg_.validate();
  }

  /// Starts from an existing games base (memories cleared) with every agent on
  /// the given normative system. Used by invasion experiments.
  void preload(const GamesBase& games, const NormativeSystem& incumbent) {
    for (const auto& [id, ng] : games.games()) {
      MRoleGame game = ng.game();
      gb_.addWithId(std::move(game), ng.normSpace(), cfg_.windowCapacity);
      if (!normForGame(incumbent, id))
        throw std::invalid_argument("preload: incumbent does not cover every game");
    }
    for (NormativeSystem& ns : population_.agents) ns = incumbent;
  }

  const EngineConfig& config() const { return cfg_; }
  const traffic::TrafficWorld& world() const { return world_; }
  traffic::TrafficWorld& world() { return world_; }
  const GamesBase& gamesBase() const { return gb_; }
  const PopulationState& population() const { return population_; }
  PopulationState& population() { return population_; }
  SeededRng& rng() { return rng_; }
  int roundsRun() const { return round_; }
  bool converged() const { return converged_; }
  int convergedAtRound() const { return convergedAt_; }

  const std::map<GameId, std::vector<std::vector<double>>>& frequencyHistory() const {
    return history_;
  }
  const std::vector<FrequencyRow>& frequencyRows() const { return rows_; }
  void setCollectRows(bool v) { collectRows_ = v; }

  void runTick() {
    world_.removeExpiredWrecks();
    if (cfg_.spawning) world_.spawn(rng_, cfg_.agentCount);

    const traffic::TrafficWorld before = world_;
    const auto candidates = traffic::candidateGroups(before, gb_.roleCounts());
    const auto matches = matchGamePlays(gb_, candidates);
    const auto plays = selectDisjointPlays(matches);

    // action per live car: matched cars follow their norm, everyone else goes
    std::map<AgentId, ActionId> actions;
    for (const AgentId a : before.liveCars()) actions[a] = traffic::kGo;
    for (const GamePlay& p : plays) {
      const NormsGame& ng = gb_.at(p.game);
      for (std::size_t role = 0; role < p.roleAgents.size(); ++role) {
        const AgentId a = p.roleAgents[role];
        const auto normId = normForGame(population_.agents[static_cast<std::size_t>(a)], p.game);
        if (!normId) continue;  // unconstrained until the game reaches this agent
        const Norm& n = ng.norm(ng.normIndexOf(*normId));
        actions[a] = traffic::preferredAction(
            permittedActions(n, static_cast<int>(role), ng.game().actionSets[role]));
      }
    }

    const traffic::StepResult result = world_.act(actions);

    // record play outcomes
    for (const GamePlay& p : plays) {
      NormsGame& ng = gb_.at(p.game);
      std::vector<NormId> combo;
      std::vector<double> rewards;
      bool usable = true;
      for (const AgentId a : p.roleAgents) {
        const auto normId = normForGame(population_.agents[static_cast<std::size_t>(a)], p.game);
        const auto out = result.outcomes.find(a);
        if (!normId || out == result.outcomes.end()) {
          usable = false;  // unattributable or unobservable play is dropped
          break;
        }
        combo.push_back(*normId);
        rewards.push_back(traffic::rewardOutcome(out->second, cfg_.profile));
      }
      if (!usable) continue;
      ng.record(combo, rewards, before.tick());
      stats_.plays += 1;
      stats_.playRoles += p.roleCount();
      for (const AgentId a : p.roleAgents)
        if (result.outcomes.at(a) == traffic::Outcome::Collided) stats_.collidedPlayRoles += 1;
    }

    for (const auto& [a, o] : result.outcomes)
      if (o == traffic::Outcome::Collided) stats_.carsEnteringCollision += 1;

    // new coordination situations become games with uniformly spread norms
    const auto reports = traffic::detectConflicts(before, result);
    for (const ConflictReport& rep : reports) {
      MRoleGame game = buildGame(rep);
      if (gb_.contains(game.context)) continue;
      if (cfg_.freezeGames) continue;
      auto space = buildNormSpace(game);
      registerGame(gb_, std::move(game), std::move(space), population_, rng_,
                   cfg_.windowCapacity);
      stats_.newGames += 1;
    }
  }

  /// Runs a full round: ticksPerRound ticks, then replication and
  /// redistribution for every game, a frequency snapshot and the convergence
  /// check.
  RoundStats runRound() {
    stats_ = RoundStats{};
    stats_.round = round_ + 1;
    for (int t = 0; t < cfg_.ticksPerRound; ++t) runTick();
    ++round_;

    for (auto& [id, ng] : gb_.games()) {
      const std::vector<double> freqs = population_.frequencies(ng);
      const PayoffTable table = payoffMatrix(ng, cfg_.beta);
      const ReplicationResult rr = replicateGame(table, freqs, cfg_.replication);
      if (rr.degenerate) stats_.degenerateGames += 1;
      if (rr.renormalised) stats_.renormalisedGames += 1;
      stats_.reassignedAgents += redistribute(population_, ng, rr.frequencies, rng_);
      const std::vector<double> realised = population_.frequencies(ng);
      double sum = 0.0;
      for (const double f : realised) sum += f;
      if (std::abs(sum - 1.0) > 1e-9)
        throw std::logic_error("SynthesisEngine: per-game frequencies do not sum to 1");
      history_[id].push_back(realised);
      if (collectRows_) {
        for (int i = 0; i < ng.normCount(); ++i) {
          rows_.push_back(FrequencyRow{round_, id, ng.norm(i).label, ng.norm(i).id,
                                       realised[static_cast<std::size_t>(i)],
                                       rr.fitness[static_cast<std::size_t>(i)],
                                       rr.averageFitness});
        }
      }
    }

    if (!converged_ && checkConvergence()) {
      converged_ = true;
      convergedAt_ = round_;
    }
    return stats_;
  }

  /// Per-game frequencies frozen (within epsilon) over the whole window, for
  /// every discovered game. Never true while no game has been discovered.
  bool checkConvergence() const {
    if (gb_.size() == 0) return false;
    for (const auto& [id, ng] : gb_.games()) {
      const auto it = history_.find(id);
      if (it == history_.end()) return false;
      if (!hasConverged(it->second, cfg_.replication.convergenceWindow,
                        cfg_.replication.convergenceEpsilon))
        return false;
    }
    return true;
  }

  /// Most frequent normative system; ties break on the lexicographically
  /// smallest serialisation.
  NormativeSystem dominantNs() const {
    std::map<std::string, std::pair<int, const NormativeSystem*>> tally;
    for (const NormativeSystem& ns : population_.agents) {
      auto& slot = tally[ns.key()];
      slot.first += 1;
      slot.second = &ns;
    }
    int best = -1;
    const NormativeSystem* pick = nullptr;
    for (const auto& [key, slot] : tally) {
      if (slot.first > best) {
        best = slot.first;
        pick = slot.second;
      }
    }
    return pick ? *pick : NormativeSystem{};
  }

  /// The majority norm per game as one normative system.
  NormativeSystem majorityNs() const {
    NormativeSystem out;
    for (const auto& [id, ng] : gb_.games()) {
      const std::vector<int> c = population_.counts(ng);
      int bestIdx = 0;
      for (int i = 1; i < static_cast<int>(c.size()); ++i)
        if (c[static_cast<std::size_t>(i)] > c[static_cast<std::size_t>(bestIdx)]) bestIdx = i;
      out.assignment[id] = ng.norm(bestIdx).id;
    }
    return out;
  }

 private:
  EngineConfig cfg_;
  SeededRng rng_;
  traffic::TrafficWorld world_;
  GamesBase gb_;
  PopulationState population_;
  int round_ = 0;
  bool converged_ = false;
  int convergedAt_ = -1;
  RoundStats stats_;
  std::map<GameId, std::vector<std::vector<double>>> history_;
  std::vector<FrequencyRow> rows_;
  bool collectRows_ = false;
};

// ---------------------------------------------------------------------------
// Invasion experiments
// ---------------------------------------------------------------------------

struct InvasionRoundRow {
  int round = 0;
  int dominantNsId = 0;
  double dominantFrequency = 0.0;
  int mutantsCreated = 0;
};

struct InvasionResult {
  std::vector<InvasionRoundRow> trace;
  int incumbentId = 1;
  bool incumbentDominantAtEnd = false;
};

/// Competition of an incumbent normative system against per-round random
/// mutants. All agents start on the incumbent; each round injects mutants,
/// simulates, replicates, and records the most frequent system. The games base
/// stays frozen so systems remain comparable.
inline InvasionResult invasionExperiment(const GamesBase& games, const NormativeSystem& incumbent,
                                         EngineConfig cfg, double mutantFraction, int rounds,
                                         SeededRng rng) {
  cfg.freezeGames = true;
  SynthesisEngine engine(cfg, rng);
  engine.preload(games, incumbent);

  InvasionResult res;
  std::map<std::string, int> registry;
  int nextId = 1;
  const auto idOf = [&](const NormativeSystem& ns) {
    const std::string key = ns.key();
    const auto it = registry.find(key);
    if (it != registry.end()) return it->second;
    registry[key] = nextId;
    return nextId++;
  };
  res.incumbentId = idOf(incumbent);

  for (int r = 1; r <= rounds; ++r) {
    int created = 0;
    if (mutantFraction > 0.0) {
      const int seen = nextId;
      injectMutants(engine.population(), engine.gamesBase(), mutantFraction, engine.rng());
      for (const NormativeSystem& ns : engine.population().agents) idOf(ns);
      created = nextId - seen;
    }
    engine.runRound();
    for (const NormativeSystem& ns : engine.population().agents) idOf(ns);

    std::map<int, int> tally;
    for (const NormativeSystem& ns : engine.population().agents) tally[idOf(ns)] += 1;
    int bestId = res.incumbentId, bestCount = -1;
    for (const auto& [id, count] : tally) {
      if (count > bestCount) {
        bestCount = count;
        bestId = id;
      }
    }
    res.trace.push_back(InvasionRoundRow{
        r, bestId, static_cast<double>(bestCount) / engine.population().agentCount(), created});
  }
  res.incumbentDominantAtEnd =
      !res.trace.empty() && res.trace.back().dominantNsId == res.incumbentId;
  return res;
}

}  // namespace normev
