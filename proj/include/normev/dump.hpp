#pragma once

#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "normev/engine.hpp"
#include "normev/payoff.hpp"
#include "normev/recognition.hpp"
#include "normev/traffic.hpp"

namespace normev {

using Json = nlohmann::ordered_json;

/// Games-base dump: one record per norms game with its context (perception
/// symbols in window order left-front, front-near, front-far, right-front),
/// norm space, current frequencies, learned payoffs and the dominant
/// normative system. Field names are stable; see the README for the schema.
inline Json gamesBaseToJson(const GamesBase& gb, const PopulationState& pop, double beta,
                            std::uint64_t seed, int rewardProfile) {
  Json root;
  root["formatVersion"] = 1;
  root["seed"] = seed;
  root["agentCount"] = pop.agentCount();
  root["beta"] = beta;
  root["rewardProfile"] = rewardProfile;
  root["games"] = Json::array();
  for (const auto& [id, ng] : gb.games()) {
    Json g;
    g["id"] = id;
    g["roles"] = ng.roleCount();
    g["category"] = traffic::categoryName(traffic::classifyGame(ng.game()));
    Json ctx = Json::array();
    for (const Descriptor& d : ng.game().context.perRoleView) {
      Json cells = Json::array();
      for (const SymbolId s : d) cells.push_back(traffic::symbolName(s));
      ctx.push_back(cells);
    }
    g["context"] = ctx;
    Json actionSets = Json::array();
    for (const auto& set : ng.game().actionSets) {
      Json names = Json::array();
      for (const ActionId a : set) names.push_back(traffic::actionName(a));
      actionSets.push_back(names);
    }
    g["actionSets"] = actionSets;
    Json conflicting = Json::array();
    for (const ActionId a : ng.game().conflictingActions)
      conflicting.push_back(traffic::actionName(a));
    g["conflictingActions"] = conflicting;
    g["windowCapacity"] = ng.windowCapacity();
    g["playCount"] = ng.playCount();

    const std::vector<double> freqs = pop.frequencies(ng);
    Json norms = Json::array();
    for (int i = 0; i < ng.normCount(); ++i) {
      const Norm& n = ng.norm(i);
      Json jn;
      jn["id"] = std::to_string(n.id);
      jn["label"] = n.label;
      Json prh = Json::array();
      for (const auto& roleProhibitions : n.prohibitions) {
        Json names = Json::array();
        for (const ActionId a : roleProhibitions) names.push_back(traffic::actionName(a));
        prh.push_back(names);
      }
      jn["prohibitions"] = prh;
      jn["frequency"] = freqs[static_cast<std::size_t>(i)];
      norms.push_back(jn);
    }
    g["norms"] = norms;

    const PayoffTable table = payoffMatrix(ng, beta);
    Json payoffs = Json::array();
    for (long c = 0; c < table.comboCount(); ++c) {
      const std::vector<int> combo = table.decode(c);
      Json jc;
      Json labels = Json::array();
      for (const int i : combo) labels.push_back(ng.norm(i).label);
      jc["combo"] = labels;
      Json vals = Json::array();
      for (int role = 0; role < table.roles; ++role) {
        const auto& v = table.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(role)];
        if (v)
          vals.push_back(*v);
        else
          vals.push_back(nullptr);
      }
      jc["payoff"] = vals;
      payoffs.push_back(jc);
    }
    g["payoffs"] = payoffs;
    root["games"].push_back(g);
  }
  return root;
}

inline Json normativeSystemToJson(const GamesBase& gb, const NormativeSystem& ns) {
  Json out = Json::array();
  for (const auto& [gameId, normId] : ns.assignment) {
    Json e;
    e["gameId"] = gameId;
    e["normId"] = std::to_string(normId);
    e["label"] = gb.at(gameId).norm(gb.at(gameId).normIndexOf(normId)).label;
    out.push_back(e);
  }
  return out;
}

inline void writeGamesDump(const std::string& path, const GamesBase& gb,
                           const PopulationState& pop, const NormativeSystem& dominant,
                           double beta, std::uint64_t seed, int rewardProfile) {
  Json root = gamesBaseToJson(gb, pop, beta, seed, rewardProfile);
  root["dominantNormativeSystem"] = normativeSystemToJson(gb, dominant);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << root.dump(2) << '\n';
}

struct LoadedDump {
  GamesBase games;
  NormativeSystem dominant;
  double beta = 0.8;
  int rewardProfile = 7;
  int agentCount = 100;
};

/// Rebuilds a games base (with empty memories) and the dominant normative
/// system from a dump file.
inline LoadedDump loadGamesDump(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open games dump: " + path);
  Json root;
  in >> root;
  if (!root.contains("games")) throw std::runtime_error("games dump: missing games array");
  LoadedDump out;
  out.beta = root.value("beta", 0.8);
  out.rewardProfile = root.value("rewardProfile", 7);
  out.agentCount = root.value("agentCount", 100);
  for (const Json& g : root["games"]) {
    MRoleGame game;
    game.id = g.at("id").get<GameId>();
    for (const Json& view : g.at("context")) {
      Descriptor d;
      for (const Json& cell : view) {
        const auto s = traffic::symbolFromName(cell.get<std::string>());
        if (!s) throw std::runtime_error("games dump: unknown symbol " + cell.get<std::string>());
        d.push_back(*s);
      }
      game.context.perRoleView.push_back(std::move(d));
    }
    for (const Json& set : g.at("actionSets")) {
      std::vector<ActionId> actions;
      for (const Json& name : set) {
        const auto a = traffic::actionFromName(name.get<std::string>());
        if (!a) throw std::runtime_error("games dump: unknown action " + name.get<std::string>());
        actions.push_back(*a);
      }
      game.actionSets.push_back(std::move(actions));
    }
    for (const Json& name : g.at("conflictingActions")) {
      const auto a = traffic::actionFromName(name.get<std::string>());
      if (!a) throw std::runtime_error("games dump: unknown action " + name.get<std::string>());
      game.conflictingActions.push_back(*a);
    }
    std::vector<Norm> space;
    for (const Json& jn : g.at("norms")) {
      Norm n;
      n.label = jn.at("label").get<std::string>();
      n.precondition = game.context;
      for (const Json& roleProhibitions : jn.at("prohibitions")) {
        std::vector<ActionId> prh;
        for (const Json& name : roleProhibitions) {
          const auto a = traffic::actionFromName(name.get<std::string>());
          if (!a) throw std::runtime_error("games dump: unknown action in prohibitions");
          prh.push_back(*a);
        }
        n.prohibitions.push_back(std::move(prh));
      }
      n.id = normIdFor(n.precondition, n.prohibitions);
      if (std::to_string(n.id) != jn.at("id").get<std::string>())
        throw std::runtime_error("games dump: norm id mismatch, file is inconsistent");
      space.push_back(std::move(n));
    }
    const int window = g.value("windowCapacity", 100);
    out.games.addWithId(std::move(game), std::move(space), window);
  }
  if (root.contains("dominantNormativeSystem")) {
    for (const Json& e : root["dominantNormativeSystem"]) {
      out.dominant.assignment[e.at("gameId").get<GameId>()] =
          static_cast<NormId>(std::stoull(e.at("normId").get<std::string>()));
    }
  }
  return out;
}

/// Reads one game's learned payoff table back from a dump file (dump order is
/// the combination code order).
inline PayoffTable loadPayoffTableFromDump(const std::string& path, GameId gameId) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open games dump: " + path);
  Json root;
  in >> root;
  for (const Json& g : root.at("games")) {
    if (g.at("id").get<GameId>() != gameId) continue;
    PayoffTable t;
    t.roles = g.at("roles").get<int>();
    t.norms = static_cast<int>(g.at("norms").size());
    const auto& payoffs = g.at("payoffs");
    t.values.assign(payoffs.size(),
                    std::vector<std::optional<double>>(static_cast<std::size_t>(t.roles)));
    long code = 0;
    for (const Json& jc : payoffs) {
      const auto& vals = jc.at("payoff");
      for (int role = 0; role < t.roles; ++role) {
        const Json& v = vals.at(static_cast<std::size_t>(role));
        if (!v.is_null())
          t.values[static_cast<std::size_t>(code)][static_cast<std::size_t>(role)] =
              v.get<double>();
      }
      ++code;
    }
    return t;
  }
  throw std::runtime_error("games dump: no game with id " + std::to_string(gameId));
}

}  // namespace normev
