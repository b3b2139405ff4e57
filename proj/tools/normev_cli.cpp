// Command-line front end: evolutionary synthesis of traffic norms plus the
// Hawk-Dove reference dynamics, batch experiments and CSV outputs.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "normev/csv.hpp"
#include "normev/dump.hpp"
#include "normev/harness.hpp"

namespace {

using normev::ExperimentConfig;

void loadConfigFile(const std::string& path, ExperimentConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  nlohmann::json j;
  in >> j;
  cfg.simulations = j.value("sims", cfg.simulations);
  cfg.maxRounds = j.value("rounds", cfg.maxRounds);
  cfg.ticksPerRound = j.value("ticksPerRound", cfg.ticksPerRound);
  cfg.beta = j.value("beta", cfg.beta);
  cfg.rewardProfile = j.value("rewardProfileIndex", cfg.rewardProfile);
  cfg.mutantFraction = j.value("mutantFraction", cfg.mutantFraction);
  cfg.invasionRounds = j.value("invasionRounds", cfg.invasionRounds);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.agentCount = j.value("agents", cfg.agentCount);
  cfg.gridSize = j.value("gridSize", cfg.gridSize);
  cfg.spawnProbability = j.value("spawnProbability", cfg.spawnProbability);
  cfg.windowCapacity = j.value("window", cfg.windowCapacity);
  cfg.threads = j.value("threads", cfg.threads);
}

void addCommonOptions(CLI::App* cmd, ExperimentConfig& cfg, std::string& configPath) {
  cmd->add_option("--config", configPath, "JSON config file; flags override its keys");
  cmd->add_option("--seed", cfg.seed, "master seed");
  cmd->add_option("--sims", cfg.simulations, "number of simulations");
  cmd->add_option("--rounds", cfg.maxRounds, "maximum rounds per simulation");
  cmd->add_option("--ticks-per-round", cfg.ticksPerRound, "ticks per round");
  cmd->add_option("--beta", cfg.beta, "payoff discount factor in [0,1]");
  cmd->add_option("--reward-profile", cfg.rewardProfile, "reward profile index 0..10");
  cmd->add_option("--mutant-fraction", cfg.mutantFraction, "mutant share injected per round");
  cmd->add_option("--out", cfg.outDir, "output directory for CSV files");
  cmd->add_option("--agents", cfg.agentCount, "agent population size");
  cmd->add_option("--grid-size", cfg.gridSize, "grid side length");
  cmd->add_option("--spawn-probability", cfg.spawnProbability, "per-entry spawn probability");
  cmd->add_option("--window", cfg.windowCapacity, "reward memory window per game");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
}

int runHawkDove(double v, double c, double start, int steps, double f0h, double f0d,
                const std::string& outDir) {
  const auto rows = normev::hawkDoveTrace(v, c, start, steps, f0h, f0d);
  const auto emit = [&](std::ostream& os) {
    os << "step,freqHawk,freqDove,fitnessHawk,fitnessDove\n";
    for (const auto& r : rows) {
      os << r.step << ',' << normev::formatDouble(r.freqHawk) << ','
         << normev::formatDouble(r.freqDove) << ',' << normev::formatDouble(r.fitnessHawk) << ','
         << normev::formatDouble(r.fitnessDove) << '\n';
    }
  };
  if (outDir.empty()) {
    emit(std::cout);
  } else {
    std::filesystem::create_directories(outDir);
    std::ofstream out(outDir + "/hawkdove.csv", std::ios::binary);
    emit(out);
    std::cout << "wrote " << outDir << "/hawkdove.csv\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evolutionary synthesis of stable norm systems for a simulated traffic junction"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  std::string configPath;
  std::string incumbentPath;
  std::string dumpGamesPath;
  bool unstableIncumbent = false;

  // hawkdove
  auto* hd = app.add_subcommand("hawkdove", "two-strategy replicator dynamics reference");
  double v = 4.0, c = 2.0, start = 0.5, f0h = 0.0, f0d = 0.0;
  int steps = 100;
  hd->add_option("--v", v, "resource value");
  hd->add_option("--c", c, "injury cost");
  hd->add_option("--start", start, "initial hawk frequency");
  hd->add_option("--steps", steps, "replication steps");
  hd->add_option("--f0-hawk", f0h, "initial hawk fitness");
  hd->add_option("--f0-dove", f0d, "initial dove fitness");
  std::string hdOut;
  hd->add_option("--out", hdOut, "output directory (default: stdout)");

  // synthesize
  auto* syn = app.add_subcommand("synthesize", "run the full norm synthesis loop");
  addCommonOptions(syn, cfg, configPath);
  syn->add_option("--dump-games", dumpGamesPath,
                  "write the games base of the first converged simulation to this file");

  // adaptivity
  auto* ada = app.add_subcommand("adaptivity", "sweep reward profiles");
  addCommonOptions(ada, cfg, configPath);
  std::vector<int> profiles;
  ada->add_option("--reward-profiles", profiles, "profile indices to sweep (default 0 7 10)");

  // stability
  auto* sta = app.add_subcommand("stability", "invasion runs against an incumbent system");
  addCommonOptions(sta, cfg, configPath);
  sta->add_option("--incumbent", incumbentPath, "games dump with the incumbent normative system")
      ->required();
  sta->add_option("--invasion-rounds", cfg.invasionRounds, "rounds per invasion run");
  sta->add_flag("--unstable-incumbent", unstableIncumbent,
                "replace the incumbent with never-give-way norms everywhere");

  // simplex
  auto* sim = app.add_subcommand("simplex", "replication gradient field over a 4-norm simplex");
  std::string preset = "ssg";
  std::string gamesPath;
  int gameId = -1;
  double gridStep = 0.1;
  sim->add_option("--preset", preset, "payoff preset: ssg or dsg")
      ->check(CLI::IsMember({"ssg", "dsg"}));
  sim->add_option("--games", gamesPath, "games dump to take payoffs from");
  sim->add_option("--game-id", gameId, "game id inside the dump");
  sim->add_option("--grid-step", gridStep, "simplex grid step");
  sim->add_option("--reward-profile", cfg.rewardProfile, "reward profile for presets");
  sim->add_option("--beta", cfg.beta, "discount factor (dump payoffs are rebuilt with it)");
  std::string simOut = ".";
  sim->add_option("--out", simOut, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (hd->parsed()) return runHawkDove(v, c, start, steps, f0h, f0d, hdOut);

    if (!configPath.empty()) {
      // config file fills everything the command line did not set explicitly
      CLI::App* sub = syn->parsed() ? syn : ada->parsed() ? (CLI::App*)ada : (CLI::App*)sta;
      const ExperimentConfig flags = cfg;
      ExperimentConfig merged = cfg;
      loadConfigFile(configPath, merged);
      const auto given = [&](const std::string& name) { return sub->count(name) > 0; };
      if (given("--sims")) merged.simulations = flags.simulations;
      if (given("--rounds")) merged.maxRounds = flags.maxRounds;
      if (given("--ticks-per-round")) merged.ticksPerRound = flags.ticksPerRound;
      if (given("--beta")) merged.beta = flags.beta;
      if (given("--reward-profile")) merged.rewardProfile = flags.rewardProfile;
      if (given("--mutant-fraction")) merged.mutantFraction = flags.mutantFraction;
      if (given("--seed")) merged.seed = flags.seed;
      if (given("--agents")) merged.agentCount = flags.agentCount;
      if (given("--grid-size")) merged.gridSize = flags.gridSize;
      if (given("--spawn-probability")) merged.spawnProbability = flags.spawnProbability;
      if (given("--window")) merged.windowCapacity = flags.windowCapacity;
      if (given("--threads")) merged.threads = flags.threads;
      if (given("--out")) merged.outDir = flags.outDir;
      if (sub == sta && sub->count("--invasion-rounds") > 0)
        merged.invasionRounds = flags.invasionRounds;
      merged.profileRange = cfg.profileRange;
      cfg = merged;
    }

    if (syn->parsed()) {
      const normev::SynthesisReport rep = normev::runSynthesis(cfg);
      std::cout << "simulations: " << rep.sims.size() << "\n"
                << "converged:   " << rep.convergedCount() << "\n"
                << "mean rounds: " << normev::formatDouble(rep.meanRounds()) << "\n";
      if (!dumpGamesPath.empty() && rep.finalGames) {
        normev::writeGamesDump(dumpGamesPath, *rep.finalGames, *rep.finalPopulation, rep.dominant,
                               cfg.beta, cfg.seed, cfg.rewardProfile);
        std::cout << "games dump:  " << dumpGamesPath << " (sim " << rep.finalStateSim << ")\n";
      }
      return 0;
    }

    if (ada->parsed()) {
      if (!profiles.empty()) cfg.profileRange = profiles;
      const auto rows = normev::runAdaptivity(cfg);
      std::cout << "profile,converged,meanRounds,optimalTwoRole,optimalOneRole,avoidance\n";
      for (const auto& r : rows) {
        std::cout << r.profile << ',' << r.converged << ',' << normev::formatDouble(r.meanRounds)
                  << ',' << normev::formatDouble(r.optimalTwoRole) << ','
                  << normev::formatDouble(r.optimalOneRole) << ','
                  << normev::formatDouble(r.avoidance) << '\n';
      }
      return 0;
    }

    if (sta->parsed()) {
      normev::LoadedDump dump = normev::loadGamesDump(incumbentPath);
      normev::NormativeSystem incumbent =
          unstableIncumbent ? normev::neverGiveWayNs(dump.games) : dump.dominant;
      if (incumbent.assignment.empty())
        throw std::runtime_error("incumbent file has no dominant normative system");
      const normev::StabilityReport rep = normev::runStability(cfg, dump.games, incumbent);
      std::cout << "simulations: " << rep.sims.size() << "\n"
                << "incumbent dominant at final round: "
                << normev::formatDouble(rep.dominantShare * 100.0) << "%\n";
      return 0;
    }

    if (sim->parsed()) {
      normev::PayoffTable table;
      if (!gamesPath.empty()) {
        if (gameId < 0) throw std::runtime_error("--game-id is required with --games");
        table = normev::loadPayoffTableFromDump(gamesPath, gameId);
      } else {
        const auto profile = normev::traffic::RewardProfile::fromIndex(cfg.rewardProfile);
        table = preset == "dsg" ? normev::doubleStopPresetPayoffs(profile)
                                : normev::singleStopPresetPayoffs(profile);
      }
      const auto samples = normev::runSimplexField(table, gridStep);
      std::filesystem::create_directories(simOut);
      normev::writeSimplexCsv(simOut + "/simplex.csv", samples);
      std::cout << "wrote " << simOut << "/simplex.csv (" << samples.size() << " grid points)\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
