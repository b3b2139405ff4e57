#pragma once

#include <atomic>
#include <cmath>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "normev/csv.hpp"
#include "normev/dump.hpp"
#include "normev/egt.hpp"
#include "normev/engine.hpp"

namespace normev {

struct ExperimentConfig {
  int simulations = 50;
  int maxRounds = 400;
  int ticksPerRound = 200;
  double beta = 0.8;
  int rewardProfile = 7;
  std::vector<int> profileRange = {0, 7, 10};  // adaptivity sweeps these
  double mutantFraction = 0.05;
  int invasionRounds = 100;
  std::uint64_t seed = 1;
  std::string outDir;          // empty: no files written
  int agentCount = 100;
  int gridSize = 7;
  double spawnProbability = 0.3;
  int windowCapacity = 100;
  ReplicationConfig replication;
  int threads = 0;             // 0: hardware concurrency
  bool collectFrequencyRows = true;

  EngineConfig engineConfig(int profile) const {
    EngineConfig e;
    e.traffic.gridSize = gridSize;
    e.traffic.spawnProbability = spawnProbability;
    e.agentCount = agentCount;
    e.ticksPerRound = ticksPerRound;
    e.beta = beta;
    e.profile = traffic::RewardProfile::fromIndex(profile);
    e.windowCapacity = windowCapacity;
    e.replication = replication;
    return e;
  }

  void validate() const {
    if (simulations < 0) throw std::invalid_argument("ExperimentConfig: simulations must be >= 0");
    if (maxRounds < 1) throw std::invalid_argument("ExperimentConfig: maxRounds must be >= 1");
    engineConfig(rewardProfile).validate();
  }
};

/// What the population converged to, per game category.
enum class NormKind {
  NeverGiveWay,    // 2-role, no prohibitions
  GiveWayFirst,    // 2-role, role 1 prohibited only
  GiveWaySecond,   // 2-role, role 2 prohibited only
  GiveWayAlways,   // 2-role, both roles prohibited
  Go,              // 1-role, no prohibition
  Stop,            // 1-role, prohibited to go
  OtherKind,
};

inline std::string normKindName(NormKind k) {
  switch (k) {
    case NormKind::NeverGiveWay: return "never-give-way";
    case NormKind::GiveWayFirst: return "give-way-role1";
    case NormKind::GiveWaySecond: return "give-way-role2";
    case NormKind::GiveWayAlways: return "give-way-always";
    case NormKind::Go: return "go";
    case NormKind::Stop: return "stop";
    case NormKind::OtherKind: return "other";
  }
  return "?";
}

inline NormKind classifyAdoptedNorm(const NormsGame& ng, int normIdx) {
  const Norm& n = ng.norm(normIdx);
  const int m = n.roleCount();
  if (m == 1) return n.prohibitions[0].empty() ? NormKind::Go : NormKind::Stop;
  if (m == 2) {
    const bool p0 = !n.prohibitions[0].empty();
    const bool p1 = !n.prohibitions[1].empty();
    if (!p0 && !p1) return NormKind::NeverGiveWay;
    if (p0 && !p1) return NormKind::GiveWayFirst;
    if (!p0 && p1) return NormKind::GiveWaySecond;
    return NormKind::GiveWayAlways;
  }
  return NormKind::OtherKind;
}

struct GameAdoption {
  GameId game = -1;
  traffic::GameCategory category = traffic::GameCategory::Other;
  NormKind adopted = NormKind::OtherKind;
  double adoptedFrequency = 0.0;
  // true adoption: the whole population holds the norm (F = 1); games still
  // mixed at the end adopted nothing and stay out of category statistics
  bool monoculture = false;
  long plays = 0;
};

struct SimResult {
  int sim = 0;
  bool converged = false;
  int rounds = 0;                 // rounds to converge, or rounds run
  int gamesDiscovered = 0;
  double finalAvoidance = 0.0;    // last simulated round
  bool esns = false;
  std::vector<GameAdoption> adoptions;
  std::vector<FrequencyRow> rows; // when collection is on
};

struct SynthesisReport {
  std::vector<SimResult> sims;
  // final state of the first converged simulation (or the first simulation),
  // for stability chaining and dumps
  std::shared_ptr<GamesBase> finalGames;
  std::shared_ptr<PopulationState> finalPopulation;
  NormativeSystem dominant;
  int finalStateSim = -1;

  int convergedCount() const {
    int n = 0;
    for (const auto& s : sims)
      if (s.converged) ++n;
    return n;
  }
  double meanRounds() const {
    if (sims.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& s : sims) sum += s.rounds;
    return sum / static_cast<double>(sims.size());
  }
};

namespace detail {

inline void forEachSim(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, count));
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex errMutex;
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(errMutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace detail

/// Full synthesis loop, one engine per simulation with per-simulation seeds
/// derived from the master seed. Stops each simulation at convergence or at
/// maxRounds.
inline SynthesisReport runSynthesis(const ExperimentConfig& cfg) {
  cfg.validate();
  SynthesisReport report;
  report.sims.resize(static_cast<std::size_t>(cfg.simulations));
  std::vector<std::shared_ptr<SynthesisEngine>> keep(
      static_cast<std::size_t>(cfg.simulations));

  detail::forEachSim(cfg.simulations, cfg.threads, [&](int sim) {
    SynthesisEngine engine(cfg.engineConfig(cfg.rewardProfile),
                           SeededRng(cfg.seed, static_cast<std::uint64_t>(sim)));
    engine.setCollectRows(cfg.collectFrequencyRows);
    RoundStats last;
    while (engine.roundsRun() < cfg.maxRounds) {
      last = engine.runRound();
      if (engine.converged()) break;
    }
    SimResult res;
    res.sim = sim;
    res.converged = engine.converged();
    res.rounds = res.converged ? engine.convergedAtRound() : engine.roundsRun();
    res.gamesDiscovered = engine.gamesBase().size();
    res.finalAvoidance = last.avoidanceRate();
    res.esns = isESNS(engine.population(), engine.gamesBase(), cfg.beta).stable;
    for (const auto& [id, ng] : engine.gamesBase().games()) {
      const std::vector<double> freqs = engine.population().frequencies(ng);
      int bestIdx = 0;
      for (int i = 1; i < ng.normCount(); ++i)
        if (freqs[static_cast<std::size_t>(i)] > freqs[static_cast<std::size_t>(bestIdx)])
          bestIdx = i;
      GameAdoption ga;
      ga.game = id;
      ga.category = traffic::classifyGame(ng.game());
      ga.adopted = classifyAdoptedNorm(ng, bestIdx);
      ga.adoptedFrequency = freqs[static_cast<std::size_t>(bestIdx)];
      res.adoptions.push_back(ga);
    }
    if (cfg.collectFrequencyRows) res.rows = engine.frequencyRows();
    report.sims[static_cast<std::size_t>(sim)] = std::move(res);
    keep[static_cast<std::size_t>(sim)] = std::make_shared<SynthesisEngine>(std::move(engine));
  });

  // keep the first converged simulation's final state (first sim otherwise)
  int pick = -1;
  for (int i = 0; i < cfg.simulations; ++i) {
    if (report.sims[static_cast<std::size_t>(i)].converged) {
      pick = i;
      break;
    }
  }
  if (pick < 0 && cfg.simulations > 0) pick = 0;
  if (pick >= 0) {
    const auto& engine = *keep[static_cast<std::size_t>(pick)];
    report.finalGames = std::make_shared<GamesBase>(engine.gamesBase());
    report.finalPopulation = std::make_shared<PopulationState>(engine.population());
    report.dominant = engine.majorityNs();
    report.finalStateSim = pick;
  }

  if (!cfg.outDir.empty()) {
    std::filesystem::create_directories(cfg.outDir);
    CsvWriter freq(cfg.outDir + "/frequencies.csv");
    freq.header({"sim", "round", "gameId", "normLabel", "normId", "frequency", "fitness",
                 "avgFitness"});
    for (const SimResult& s : report.sims)
      for (const FrequencyRow& r : s.rows)
        freq.row(s.sim, r.round, r.game, r.normLabel, r.norm, r.frequency, r.fitness,
                 r.averageFitness);
    CsvWriter summary(cfg.outDir + "/summary.csv");
    summary.header({"sim", "converged", "rounds", "games", "finalAvoidance", "esns"});
    for (const SimResult& s : report.sims)
      summary.row(s.sim, s.converged, s.rounds, s.gamesDiscovered, s.finalAvoidance, s.esns);
  }
  return report;
}

struct AdaptivityRow {
  int profile = 0;
  int simulations = 0;
  int converged = 0;
  double meanRounds = 0.0;
  double optimalTwoRole = 0.0;  // one-sided give way in single-stop, give way always in double-stop
  double optimalOneRole = 0.0;  // stop in prevention and traffic-jam games
  double avoidance = 0.0;       // mean final-round avoidance
};

/// Convergence behaviour across reward profiles (collision-aversion degrees).
inline std::vector<AdaptivityRow> runAdaptivity(const ExperimentConfig& cfg) {
  std::vector<AdaptivityRow> rows;
  for (const int profile : cfg.profileRange) {
    ExperimentConfig sub = cfg;
    sub.rewardProfile = profile;
    sub.outDir.clear();
    sub.collectFrequencyRows = false;
    sub.seed = splitmix64(cfg.seed ^ static_cast<std::uint64_t>(profile + 1));
    const SynthesisReport rep = runSynthesis(sub);
    AdaptivityRow row;
    row.profile = profile;
    row.simulations = cfg.simulations;
    row.converged = rep.convergedCount();
    row.meanRounds = rep.meanRounds();
    long two = 0, twoOpt = 0, one = 0, oneOpt = 0;
    double avoidance = 0.0;
    for (const SimResult& s : rep.sims) {
      avoidance += s.finalAvoidance;
      if (!s.converged) continue;
      for (const GameAdoption& ga : s.adoptions) {
        using traffic::GameCategory;
        if (ga.category == GameCategory::SingleStop) {
          ++two;
          if (ga.adopted == NormKind::GiveWayFirst || ga.adopted == NormKind::GiveWaySecond)
            ++twoOpt;
        } else if (ga.category == GameCategory::DoubleStop) {
          ++two;
          if (ga.adopted == NormKind::GiveWayAlways) ++twoOpt;
        } else if (ga.category == GameCategory::Prevention ||
                   ga.category == GameCategory::TrafficJam) {
          ++one;
          if (ga.adopted == NormKind::Stop) ++oneOpt;
        }
      }
    }
    row.optimalTwoRole = two ? static_cast<double>(twoOpt) / two : 0.0;
    row.optimalOneRole = one ? static_cast<double>(oneOpt) / one : 0.0;
    row.avoidance = rep.sims.empty() ? 0.0 : avoidance / static_cast<double>(rep.sims.size());
    rows.push_back(row);
  }
  if (!cfg.outDir.empty()) {
    std::filesystem::create_directories(cfg.outDir);
    CsvWriter out(cfg.outDir + "/summary.csv");
    out.header({"profile", "sims", "converged", "meanRounds", "optimalTwoRole", "optimalOneRole",
                "avoidance"});
    for (const AdaptivityRow& r : rows)
      out.row(r.profile, r.simulations, r.converged, r.meanRounds, r.optimalTwoRole,
              r.optimalOneRole, r.avoidance);
  }
  return rows;
}

struct StabilityReport {
  std::vector<InvasionResult> sims;
  double dominantShare = 0.0;  // fraction of simulations with the incumbent dominant at the end
};

/// Invasion runs of an incumbent normative system against per-round mutants.
inline StabilityReport runStability(const ExperimentConfig& cfg, const GamesBase& games,
                                    const NormativeSystem& incumbent) {
  cfg.validate();
  StabilityReport rep;
  rep.sims.resize(static_cast<std::size_t>(cfg.simulations));
  detail::forEachSim(cfg.simulations, cfg.threads, [&](int sim) {
    rep.sims[static_cast<std::size_t>(sim)] = invasionExperiment(
        games, incumbent, cfg.engineConfig(cfg.rewardProfile), cfg.mutantFraction,
        cfg.invasionRounds, SeededRng(cfg.seed, 0x5ab11 + static_cast<std::uint64_t>(sim)));
  });
  int dominant = 0;
  for (const InvasionResult& r : rep.sims)
    if (r.incumbentDominantAtEnd) ++dominant;
  rep.dominantShare =
      rep.sims.empty() ? 0.0 : static_cast<double>(dominant) / static_cast<double>(rep.sims.size());
  if (!cfg.outDir.empty()) {
    std::filesystem::create_directories(cfg.outDir);
    CsvWriter out(cfg.outDir + "/dominance.csv");
    out.header({"sim", "round", "dominantNsId", "dominantFrequency", "mutantsCreated"});
    for (std::size_t s = 0; s < rep.sims.size(); ++s)
      for (const InvasionRoundRow& r : rep.sims[s].trace)
        out.row(static_cast<int>(s), r.round, r.dominantNsId, r.dominantFrequency,
                r.mutantsCreated);
  }
  return rep;
}

/// A normative system that never prohibits anything: the first norm of every
/// game's space (deliberately unstable under collision-averse rewards).
inline NormativeSystem neverGiveWayNs(const GamesBase& gb) {
  NormativeSystem out;
  for (const auto& [id, ng] : gb.games()) out.assignment[id] = ng.norm(0).id;
  return out;
}

// ---------------------------------------------------------------------------
// Replication gradient field over a four-norm simplex
// ---------------------------------------------------------------------------

struct SimplexSample {
  std::vector<double> point;         // frequencies, one per norm
  std::vector<double> displacement;  // one replication step minus the point
};

/// Per grid point on the frequency simplex, the one-step replication
/// displacement. The extinction floor is disabled so the raw field is visible.
inline std::vector<SimplexSample> runSimplexField(const PayoffTable& table, double gridStep,
                                                  const ReplicationConfig& base = {}) {
  if (!(gridStep > 0.0 && gridStep <= 0.5))
    throw std::invalid_argument("runSimplexField: gridStep must lie in (0, 0.5]");
  ReplicationConfig cfg = base;
  cfg.extinctionFloor = 0.0;
  const int k = table.norms;
  const int steps = static_cast<int>(std::lround(1.0 / gridStep));
  std::vector<SimplexSample> out;
  std::vector<int> units(static_cast<std::size_t>(k), 0);
  // enumerate all integer compositions of `steps` into k parts
  const std::function<void(int, int)> rec = [&](int idx, int left) {
    if (idx == k - 1) {
      units[static_cast<std::size_t>(idx)] = left;
      std::vector<double> point(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i)
        point[static_cast<std::size_t>(i)] =
            static_cast<double>(units[static_cast<std::size_t>(i)]) / steps;
      const ReplicationResult rr = replicateGame(table, point, cfg);
      SimplexSample s;
      s.point = point;
      s.displacement.resize(static_cast<std::size_t>(k));
      for (int i = 0; i < k; ++i)
        s.displacement[static_cast<std::size_t>(i)] =
            rr.frequencies[static_cast<std::size_t>(i)] - point[static_cast<std::size_t>(i)];
      out.push_back(std::move(s));
      return;
    }
    for (int u = 0; u <= left; ++u) {
      units[static_cast<std::size_t>(idx)] = u;
      rec(idx + 1, left - u);
    }
  };
  rec(0, steps);
  return out;
}

/// Synthetic crossing-game payoffs: four norms (never give way, give way when
/// first, give way when second, give way always); a role that goes collides
/// only when nobody yields, i.e. when both roles go.
inline PayoffTable singleStopPresetPayoffs(const traffic::RewardProfile& profile) {
  PayoffTable t;
  t.roles = 2;
  t.norms = 4;
  t.values.assign(16, std::vector<std::optional<double>>(2));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const bool stop0 = (a == 1 || a == 3);  // first-role prohibition
      const bool stop1 = (b == 2 || b == 3);  // second-role prohibition
      const long code = a * 4 + b;
      double p0, p1;
      if (!stop0 && !stop1) {
        p0 = p1 = profile.collideReward;
      } else {
        p0 = stop0 ? profile.stopReward : profile.goReward;
        p1 = stop1 ? profile.stopReward : profile.goReward;
      }
      t.values[static_cast<std::size_t>(code)] = {p0, p1};
    }
  }
  return t;
}

/// Synthetic blocked-junction payoffs: any role that goes collides; only
/// stopping avoids the obstruction.
inline PayoffTable doubleStopPresetPayoffs(const traffic::RewardProfile& profile) {
  PayoffTable t;
  t.roles = 2;
  t.norms = 4;
  t.values.assign(16, std::vector<std::optional<double>>(2));
  for (int a = 0; a < 4; ++a) {
    for (int b = 0; b < 4; ++b) {
      const bool stop0 = (a == 1 || a == 3);
      const bool stop1 = (b == 2 || b == 3);
      const long code = a * 4 + b;
      t.values[static_cast<std::size_t>(code)] = {
          stop0 ? profile.stopReward : profile.collideReward,
          stop1 ? profile.stopReward : profile.collideReward};
    }
  }
  return t;
}

inline void writeSimplexCsv(const std::string& path, const std::vector<SimplexSample>& samples) {
  CsvWriter out(path);
  std::vector<std::string> header;
  if (!samples.empty()) {
    for (std::size_t i = 0; i < samples.front().point.size(); ++i)
      header.push_back("f" + std::to_string(i + 1));
    for (std::size_t i = 0; i < samples.front().point.size(); ++i)
      header.push_back("df" + std::to_string(i + 1));
  }
  out.header(header);
  for (const SimplexSample& s : samples) {
    std::vector<std::string> cells;
    for (const double v : s.point) cells.push_back(formatDouble(v));
    for (const double v : s.displacement) cells.push_back(formatDouble(v));
    out.line(cells);
  }
}

// ---------------------------------------------------------------------------
// Hawk-Dove reference trace
// ---------------------------------------------------------------------------

struct HawkDoveRow {
  int step = 0;
  double freqHawk = 0.0;
  double freqDove = 0.0;
  double fitnessHawk = 0.0;
  double fitnessDove = 0.0;
};

inline std::vector<HawkDoveRow> hawkDoveTrace(double v, double c, double startHawk, int steps,
                                              double f0Hawk = 0.0, double f0Dove = 0.0) {
  const egt::MatrixGame2 game = egt::hawkDove(v, c);
  egt::StrategyPopulation pop;
  pop.freq = {startHawk, 1.0 - startHawk};
  pop.initialFitness = {f0Hawk, f0Dove};
  std::vector<HawkDoveRow> rows;
  for (int s = 0; s <= steps; ++s) {
    const auto f = egt::strategyFitness(pop, game);
    rows.push_back(HawkDoveRow{s, pop.freq[0], pop.freq[1], f[0], f[1]});
    pop = egt::replicateStep(pop, game);
  }
  return rows;
}

}  // namespace normev
