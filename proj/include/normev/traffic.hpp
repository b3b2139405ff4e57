#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "normev/recognition.hpp"
#include "normev/rng.hpp"

namespace normev::traffic {

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

constexpr ActionId kGo = 0;
constexpr ActionId kStop = 1;

inline const std::vector<ActionId>& carActionSet() {
  static const std::vector<ActionId> set{kGo, kStop};
  return set;
}

inline std::string actionName(ActionId a) {
  switch (a) {
    case kGo: return "go";
    case kStop: return "stop";
  }
  return "?";
}

inline std::optional<ActionId> actionFromName(const std::string& s) {
  if (s == "go") return kGo;
  if (s == "stop") return kStop;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Perception alphabet
// ---------------------------------------------------------------------------

enum Symbol : SymbolId {
  kEmpty = 0,
  kWall = 1,             // off-grid or off-road
  kCollision = 2,        // cell holds wrecked cars
  kCarTowardMe = 3,
  kCarAway = 4,
  kCarCrossingLeft = 5,  // crossing car coming from my left
  kCarCrossingRight = 6, // crossing car coming from my right
};

constexpr int kSymbolCount = 7;

inline std::string symbolName(SymbolId s) {
  switch (s) {
    case kEmpty: return "empty";
    case kWall: return "wall";
    case kCollision: return "collision";
    case kCarTowardMe: return "car-toward-me";
    case kCarAway: return "car-away";
    case kCarCrossingLeft: return "car-crossing-left";
    case kCarCrossingRight: return "car-crossing-right";
  }
  return "?";
}

inline std::optional<SymbolId> symbolFromName(const std::string& s) {
  for (SymbolId i = 0; i < kSymbolCount; ++i)
    if (symbolName(i) == s) return i;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

struct Vec {
  int x = 0;
  int y = 0;

  bool operator==(const Vec&) const = default;
  auto operator<=>(const Vec&) const = default;
  Vec operator+(Vec o) const { return {x + o.x, y + o.y}; }
  Vec operator-(Vec o) const { return {x - o.x, y - o.y}; }
};

// y grows downward; North points to smaller y.
enum class Heading : int { North = 0, East = 1, South = 2, West = 3 };

inline Vec headingVec(Heading h) {
  switch (h) {
    case Heading::North: return {0, -1};
    case Heading::East: return {1, 0};
    case Heading::South: return {0, 1};
    case Heading::West: return {-1, 0};
  }
  return {0, 0};
}

inline int headingIndex(Heading h) { return static_cast<int>(h); }
inline Heading headingFromIndex(int i) { return static_cast<Heading>(((i % 4) + 4) % 4); }
inline Heading rightOf(Heading h) { return headingFromIndex(headingIndex(h) + 1); }
inline Heading leftOf(Heading h) { return headingFromIndex(headingIndex(h) + 3); }
inline Heading opposite(Heading h) { return headingFromIndex(headingIndex(h) + 2); }

inline std::string headingName(Heading h) {
  switch (h) {
    case Heading::North: return "north";
    case Heading::East: return "east";
    case Heading::South: return "south";
    case Heading::West: return "west";
  }
  return "?";
}

// Clockwise quarter-turn rotations (consistent with the heading order above).
inline Vec rotateCw(Vec v, int quarterTurns) {
  for (int i = 0; i < ((quarterTurns % 4) + 4) % 4; ++i) v = Vec{-v.y, v.x};
  return v;
}

// ---------------------------------------------------------------------------
// Outcomes and reward profiles
// ---------------------------------------------------------------------------

enum class Outcome { Moved, Stopped, Collided };

inline std::string outcomeName(Outcome o) {
  switch (o) {
    case Outcome::Moved: return "moved";
    case Outcome::Stopped: return "stopped";
    case Outcome::Collided: return "collided";
  }
  return "?";
}

/// Reward profile k: colliding pays 0, moving safely pays 1 and stopping
/// safely pays k/10. The stop reward encodes how averse the population is to
/// collisions relative to travel time.
struct RewardProfile {
  int index = 7;
  double collideReward = 0.0;
  double stopReward = 0.7;
  double goReward = 1.0;

  static RewardProfile fromIndex(int k) {
    if (k < 0 || k > 10) throw std::invalid_argument("RewardProfile: index must be 0..10");
    RewardProfile p;
    p.index = k;
    p.stopReward = k / 10.0;
    return p;
  }
};

inline double rewardOutcome(Outcome o, const RewardProfile& p) {
  switch (o) {
    case Outcome::Collided: return p.collideReward;
    case Outcome::Stopped: return p.stopReward;
    case Outcome::Moved: return p.goReward;
  }
  return 0.0;
}

/// A play whose outcome could not be observed is reported through this error
/// and must be discarded rather than given a default reward.
struct MissingOutcomeError : std::runtime_error {
  MissingOutcomeError() : std::runtime_error("outcome of a player could not be observed") {}
};

inline double rewardOutcome(const std::optional<Outcome>& o, const RewardProfile& p) {
  if (!o) throw MissingOutcomeError();
  return rewardOutcome(*o, p);
}

// ---------------------------------------------------------------------------
// World
// ---------------------------------------------------------------------------

struct Car {
  AgentId agent = -1;
  Vec pos;
  Heading heading = Heading::North;
  Vec exit;
  bool wrecked = false;
  long removeAtTick = -1;
};

struct TrafficConfig {
  int gridSize = 7;
  double spawnProbability = 0.3;
  int wreckTicks = 5;

  void validate() const {
    if (gridSize < 5) throw std::invalid_argument("TrafficConfig: gridSize must be >= 5");
    if (!(spawnProbability >= 0.0 && spawnProbability <= 1.0))
      throw std::invalid_argument("TrafficConfig: spawnProbability must lie in [0,1]");
    if (wreckTicks < 1) throw std::invalid_argument("TrafficConfig: wreckTicks must be >= 1");
  }
};

struct CollisionEvent {
  Vec cell;
  std::vector<AgentId> movers;     // cars whose go produced the collision
  std::vector<AgentId> occupants;  // live cars caught at the cell
};

struct StepResult {
  std::map<AgentId, Outcome> outcomes;
  std::vector<CollisionEvent> collisions;
};

/// Perception: the four cells in front of a car, relative to its heading.
struct Perception {
  SymbolId leftFront = kEmpty;
  SymbolId frontNear = kEmpty;
  SymbolId frontFar = kEmpty;
  SymbolId rightFront = kEmpty;

  Descriptor toDescriptor() const { return {leftFront, frontNear, frontFar, rightFront}; }
  bool operator==(const Perception&) const = default;
};

constexpr std::size_t kLeftFront = 0, kFrontNear = 1, kFrontFar = 2, kRightFront = 3;

/// Discrete two-road junction world. Two orthogonal roads with one lane per
/// direction cross in the middle of the grid; traffic keeps to the right.
/// Cars advance one cell per tick, turn at the junction when their exit
/// requires it, and are removed when they drive off the grid or five ticks
/// after a collision.
class TrafficWorld {
 public:
  explicit TrafficWorld(TrafficConfig cfg = {}) : cfg_(cfg) {
    cfg_.validate();
    const int mid = cfg_.gridSize / 2;
    westRow_ = mid;
    eastRow_ = mid + 1;
    southCol_ = mid;
    northCol_ = mid + 1;
  }

  const TrafficConfig& config() const { return cfg_; }
  long tick() const { return tick_; }
  int gridSize() const { return cfg_.gridSize; }

  bool onGrid(Vec c) const {
    return c.x >= 0 && c.x < cfg_.gridSize && c.y >= 0 && c.y < cfg_.gridSize;
  }
  bool onRoad(Vec c) const {
    return onGrid(c) && (c.y == westRow_ || c.y == eastRow_ || c.x == southCol_ || c.x == northCol_);
  }

  // Entry cells with the heading of cars spawned there, in fixed order.
  std::vector<std::pair<Vec, Heading>> entries() const {
    return {{Vec{0, eastRow_}, Heading::East},
            {Vec{cfg_.gridSize - 1, westRow_}, Heading::West},
            {Vec{southCol_, 0}, Heading::South},
            {Vec{northCol_, cfg_.gridSize - 1}, Heading::North}};
  }

  Vec exitFor(Heading h) const {
    switch (h) {
      case Heading::East: return {cfg_.gridSize - 1, eastRow_};
      case Heading::West: return {0, westRow_};
      case Heading::South: return {southCol_, cfg_.gridSize - 1};
      case Heading::North: return {northCol_, 0};
    }
    return {};
  }

  // Exits reachable from an entry heading: straight, left turn, right turn.
  std::vector<Vec> reachableExits(Heading h) const {
    return {exitFor(h), exitFor(leftOf(h)), exitFor(rightOf(h))};
  }

  const std::map<AgentId, Car>& cars() const { return cars_; }
  bool hasCar(AgentId a) const { return cars_.count(a) != 0; }
  const Car& car(AgentId a) const {
    const auto it = cars_.find(a);
    if (it == cars_.end()) throw std::invalid_argument("TrafficWorld: unknown car");
    return it->second;
  }

  int liveCarCount() const {
    int n = 0;
    for (const auto& [id, c] : cars_)
      if (!c.wrecked) ++n;
    return n;
  }
  int wreckCount() const {
    int n = 0;
    for (const auto& [id, c] : cars_)
      if (c.wrecked) ++n;
    return n;
  }

  std::vector<AgentId> liveCars() const {
    std::vector<AgentId> out;
    for (const auto& [id, c] : cars_)
      if (!c.wrecked) out.push_back(id);
    return out;
  }

  // Test/setup helper.
  void placeCar(AgentId agent, Vec pos, Heading heading, Vec exit) {
    if (!onGrid(pos)) throw std::invalid_argument("placeCar: off-grid position");
    if (cars_.count(agent)) throw std::invalid_argument("placeCar: agent already on the road");
    for (const auto& [id, c] : cars_)
      if (!c.wrecked && c.pos == pos) throw std::invalid_argument("placeCar: cell occupied");
    cars_[agent] = Car{agent, pos, heading, exit, false, -1};
  }

  void removeCar(AgentId agent) { cars_.erase(agent); }

  /// Drops wrecks whose residence time has elapsed. Call at the start of a tick.
  void removeExpiredWrecks() {
    for (auto it = cars_.begin(); it != cars_.end();) {
      if (it->second.wrecked && it->second.removeAtTick <= tick_)
        it = cars_.erase(it);
      else
        ++it;
    }
  }

  /// Per entry point: with the configured probability, and only when the entry
  /// cell is free and an off-road agent exists, spawns a car with a uniformly
  /// chosen reachable exit. Returns the number of cars created.
  int spawn(SeededRng& rng, int agentPool) {
    int spawned = 0;
    for (const auto& [cell, heading] : entries()) {
      if (!rng.chance(cfg_.spawnProbability)) continue;
      if (occupied(cell)) continue;
      std::vector<AgentId> free;
      for (AgentId a = 0; a < agentPool; ++a)
        if (!cars_.count(a)) free.push_back(a);
      if (free.empty()) continue;
      const AgentId agent = free[rng.below(free.size())];
      const auto exits = reachableExits(heading);
      const Vec exit = exits[rng.below(exits.size())];
      cars_[agent] = Car{agent, cell, heading, exit, false, -1};
      ++spawned;
    }
    return spawned;
  }

  /// The direction the car is about to move in: its lane heading until it
  /// reaches the cell where its exit's lane crosses, the exit heading after.
  Heading desiredHeading(const Car& c) const {
    const Heading target = exitHeading(c.exit);
    if (target == c.heading || target == opposite(c.heading)) return c.heading;
    const Vec turn = turnCell(c, target);
    return c.pos == turn ? target : c.heading;
  }

  Vec nextCell(const Car& c) const { return c.pos + headingVec(desiredHeading(c)); }

  /// The four cells in front of the car, relative to where it is about to go.
  Perception perceive(AgentId agent) const {
    const auto it = cars_.find(agent);
    if (it == cars_.end() || it->second.wrecked)
      throw std::invalid_argument("perceive: unknown or wrecked car");
    const Car& c = it->second;
    const Heading h = desiredHeading(c);
    const Vec f = headingVec(h);
    const Vec l = headingVec(leftOf(h));
    const Vec r = headingVec(rightOf(h));
    Perception p;
    p.leftFront = symbolAt(c.pos + f + l, h);
    p.frontNear = symbolAt(c.pos + f, h);
    p.frontFar = symbolAt(c.pos + f + f, h);
    p.rightFront = symbolAt(c.pos + f + r, h);
    return p;
  }

  Descriptor perceiveDescriptor(AgentId agent) const { return perceive(agent).toDescriptor(); }

  /// Synchronous resolution of one tick worth of actions. Stop keeps the
  /// position; go advances one cell along the route. Two or more cars entering
  /// the same cell, a car entering a cell whose occupant stays, and position
  /// swaps all produce collisions which freeze every involved car for
  /// `wreckTicks` ticks. Cars that drive off the grid are removed. Advances
  /// the tick counter.
  StepResult act(const std::map<AgentId, ActionId>& actions) {
    for (const auto& [id, c] : cars_) {
      if (c.wrecked) continue;
      const auto it = actions.find(id);
      if (it == actions.end()) throw std::invalid_argument("act: missing action for a live car");
      if (it->second != kGo && it->second != kStop)
        throw std::invalid_argument("act: unknown action");
    }
    for (const auto& [id, a] : actions) {
      const auto it = cars_.find(id);
      if (it == cars_.end() || it->second.wrecked)
        throw std::invalid_argument("act: action for unknown or wrecked car");
    }

    enum class St { Stop, Pending, Moved, CrashFwd, CrashHere, Exited };
    std::map<AgentId, St> st;
    std::map<AgentId, Vec> target;
    std::map<AgentId, Heading> moveHeading;

    for (const auto& [id, action] : actions) {
      const Car& c = cars_.at(id);
      if (action == kStop) {
        st[id] = St::Stop;
        continue;
      }
      const Heading h = desiredHeading(c);
      const Vec t = c.pos + headingVec(h);
      if (!onGrid(t)) {
        st[id] = St::Exited;
        continue;
      }
      st[id] = St::Pending;
      target[id] = t;
      moveHeading[id] = h;
    }

    // same-target groups collide in the target cell
    std::map<Vec, std::vector<AgentId>> byTarget;
    for (const auto& [id, s] : st)
      if (s == St::Pending) byTarget[target.at(id)].push_back(id);
    for (const auto& [cell, group] : byTarget) {
      if (group.size() < 2) continue;
      for (const AgentId id : group) st[id] = St::CrashFwd;
    }

    // swap conflicts collide in place
    for (auto& [idA, sA] : st) {
      if (sA != St::Pending) continue;
      for (auto& [idB, sB] : st) {
        if (idB <= idA || sB != St::Pending) continue;
        if (target.at(idA) == cars_.at(idB).pos && target.at(idB) == cars_.at(idA).pos) {
          sA = St::CrashHere;
          sB = St::CrashHere;
          break;
        }
      }
    }

    // chains: a mover completes only if its target cell ends up free
    const auto finalCellOf = [&](AgentId id) -> std::optional<Vec> {
      const Car& c = cars_.at(id);
      if (c.wrecked) return c.pos;
      switch (st.at(id)) {
        case St::Stop:
        case St::CrashHere: return c.pos;
        case St::Moved:
        case St::CrashFwd: return target.at(id);
        case St::Exited: return std::nullopt;
        case St::Pending: return std::nullopt;  // unresolved
      }
      return std::nullopt;
    };

    bool anyPending = true;
    while (anyPending) {
      anyPending = false;
      bool progress = false;
      for (auto& [id, s] : st) {
        if (s != St::Pending) continue;
        const Vec t = target.at(id);
        bool blockedHard = false;
        bool blockedPending = false;
        for (const auto& [other, oc] : cars_) {
          if (other == id) continue;
          if (oc.wrecked) {
            if (oc.pos == t) blockedHard = true;
            continue;
          }
          const auto os = st.find(other);
          if (os == st.end()) continue;
          if (os->second == St::Pending) {
            if (oc.pos == t) blockedPending = true;
            continue;
          }
          const auto fc = finalCellOf(other);
          if (fc && *fc == t) blockedHard = true;
        }
        if (blockedHard) {
          s = St::CrashFwd;
          progress = true;
        } else if (!blockedPending) {
          s = St::Moved;
          progress = true;
        } else {
          anyPending = true;
        }
      }
      if (anyPending && !progress) {
        // remaining movers form closed cycles; they rotate simultaneously
        for (auto& [id, s] : st)
          if (s == St::Pending) s = St::Moved;
        anyPending = false;
      }
    }

    const long conflictTick = tick_ + 1;
    StepResult res;

    std::vector<AgentId> exited;
    for (const auto& [id, s] : st) {
      Car& c = cars_.at(id);
      switch (s) {
        case St::Exited:
          res.outcomes[id] = Outcome::Moved;
          exited.push_back(id);
          break;
        case St::Moved:
          c.pos = target.at(id);
          c.heading = moveHeading.at(id);
          res.outcomes[id] = Outcome::Moved;
          break;
        case St::Stop:
          res.outcomes[id] = Outcome::Stopped;
          break;
        case St::CrashFwd:
          c.pos = target.at(id);
          c.heading = moveHeading.at(id);
          c.wrecked = true;
          c.removeAtTick = conflictTick + cfg_.wreckTicks;
          res.outcomes[id] = Outcome::Collided;
          break;
        case St::CrashHere:
          c.wrecked = true;
          c.removeAtTick = conflictTick + cfg_.wreckTicks;
          res.outcomes[id] = Outcome::Collided;
          break;
        case St::Pending: break;  // unreachable
      }
    }
    for (const AgentId id : exited) cars_.erase(id);

    // cars standing in a cell someone crashed into are involved too
    std::set<Vec> crashCells;
    for (const auto& [id, s] : st)
      if (s == St::CrashFwd) crashCells.insert(cars_.at(id).pos);
    for (auto& [id, c] : cars_) {
      if (c.wrecked && st.count(id) && st.at(id) == St::CrashFwd) continue;
      if (!crashCells.count(c.pos)) continue;
      if (!c.wrecked) {
        c.wrecked = true;
        c.removeAtTick = conflictTick + cfg_.wreckTicks;
        res.outcomes[id] = Outcome::Collided;
      }
    }

    // collision events, one per crash cell plus one per swap pair
    std::map<Vec, CollisionEvent> events;
    for (const auto& [id, s] : st) {
      if (s != St::CrashFwd) continue;
      const Vec cell = cars_.at(id).pos;
      auto& ev = events[cell];
      ev.cell = cell;
      ev.movers.push_back(id);
    }
    for (auto& [cell, ev] : events) {
      for (const auto& [id, c] : cars_) {
        if (c.pos != cell) continue;
        if (std::find(ev.movers.begin(), ev.movers.end(), id) != ev.movers.end()) continue;
        ev.occupants.push_back(id);
      }
      std::sort(ev.movers.begin(), ev.movers.end());
      std::sort(ev.occupants.begin(), ev.occupants.end());
      res.collisions.push_back(ev);
    }
    std::set<AgentId> swapDone;
    for (const auto& [idA, sA] : st) {
      if (sA != St::CrashHere || swapDone.count(idA)) continue;
      for (const auto& [idB, sB] : st) {
        if (idB <= idA || sB != St::CrashHere || swapDone.count(idB)) continue;
        if (target.at(idA) == cars_.at(idB).pos && target.at(idB) == cars_.at(idA).pos) {
          CollisionEvent ev;
          ev.cell = std::min(cars_.at(idA).pos, cars_.at(idB).pos);
          ev.movers = {idA, idB};
          res.collisions.push_back(ev);
          swapDone.insert(idA);
          swapDone.insert(idB);
          break;
        }
      }
    }
    std::sort(res.collisions.begin(), res.collisions.end(),
              [](const CollisionEvent& a, const CollisionEvent& b) {
                return a.movers < b.movers;
              });

    ++tick_;
    checkOneLiveCarPerCell();
    return res;
  }

 private:
  Heading exitHeading(Vec exit) const {
    if (exit.x >= cfg_.gridSize - 1) return Heading::East;
    if (exit.x <= 0) return Heading::West;
    if (exit.y >= cfg_.gridSize - 1) return Heading::South;
    return Heading::North;
  }

  int laneRow(Heading h) const { return h == Heading::East ? eastRow_ : westRow_; }
  int laneCol(Heading h) const { return h == Heading::South ? southCol_ : northCol_; }

  Vec turnCell(const Car& c, Heading target) const {
    if (target == Heading::North || target == Heading::South)
      return Vec{laneCol(target), c.pos.y};
    return Vec{c.pos.x, laneRow(target)};
  }

  bool occupied(Vec cell) const {
    for (const auto& [id, c] : cars_)
      if (c.pos == cell) return true;
    return false;
  }

  SymbolId symbolAt(Vec cell, Heading viewer) const {
    if (!onRoad(cell)) return kWall;
    bool wreck = false;
    const Car* live = nullptr;
    for (const auto& [id, c] : cars_) {
      if (c.pos != cell) continue;
      if (c.wrecked)
        wreck = true;
      else
        live = &c;
    }
    if (wreck) return kCollision;
    if (!live) return kEmpty;
    const int rel = (headingIndex(desiredHeading(*live)) - headingIndex(viewer) + 4) % 4;
    switch (rel) {
      case 0: return kCarAway;
      case 1: return kCarCrossingLeft;   // moving to my right, coming from my left
      case 2: return kCarTowardMe;
      default: return kCarCrossingRight; // moving to my left, coming from my right
    }
  }

  void checkOneLiveCarPerCell() const {
    std::set<Vec> seen;
    for (const auto& [id, c] : cars_) {
      if (c.wrecked) continue;
      if (!seen.insert(c.pos).second)
        throw std::logic_error("TrafficWorld: two live cars in one cell after resolution");
    }
  }

  TrafficConfig cfg_;
  long tick_ = 0;
  std::map<AgentId, Car> cars_;
  int westRow_ = 3, eastRow_ = 4, southCol_ = 3, northCol_ = 4;
};

// ---------------------------------------------------------------------------
// Canonical joint views, candidates, conflicts
// ---------------------------------------------------------------------------

/// A group of cars put into canonical role order together with their joint
/// context. Ordering: every participant is tried as the frame anchor (rotated
/// so the anchor faces North); participants sort by (relative heading,
/// relative position, perception tuple) and the anchor producing the
/// lexicographically smallest joint description wins. The result is invariant
/// under translation and rotation of the whole group.
struct JointView {
  std::vector<AgentId> agents;  // canonical role order
  Context context;
};

inline JointView canonicalJointView(const TrafficWorld& w, std::vector<AgentId> group) {
  if (group.empty()) throw std::invalid_argument("canonicalJointView: empty group");
  std::sort(group.begin(), group.end());
  struct Member {
    AgentId agent;
    Vec pos;
    Heading heading;
    Descriptor view;
  };
  std::vector<Member> members;
  members.reserve(group.size());
  for (const AgentId a : group) {
    const Car& c = w.car(a);
    if (c.wrecked) throw std::invalid_argument("canonicalJointView: wrecked participant");
    members.push_back(Member{a, c.pos, w.desiredHeading(c), w.perceiveDescriptor(a)});
  }

  using Key = std::tuple<int, int, int, Descriptor>;
  std::vector<std::pair<std::vector<Key>, std::vector<std::size_t>>> options;
  for (const Member& anchor : members) {
    const int turns = (4 - headingIndex(anchor.heading)) % 4;
    std::vector<std::pair<Key, std::size_t>> keyed;
    for (std::size_t i = 0; i < members.size(); ++i) {
      const Member& m = members[i];
      const int relHeading = (headingIndex(m.heading) - headingIndex(anchor.heading) + 4) % 4;
      const Vec relPos = rotateCw(m.pos - anchor.pos, turns);
      keyed.push_back({Key{relHeading, relPos.x, relPos.y, m.view}, i});
    }
    std::stable_sort(keyed.begin(), keyed.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<Key> desc;
    std::vector<std::size_t> order;
    for (auto& [k, i] : keyed) {
      desc.push_back(std::move(k));
      order.push_back(i);
    }
    options.push_back({std::move(desc), std::move(order)});
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < options.size(); ++i)
    if (options[i].first < options[best].first) best = i;

  JointView jv;
  for (const std::size_t i : options[best].second) {
    jv.agents.push_back(members[i].agent);
    jv.context.perRoleView.push_back(members[i].view);
  }
  return jv;
}

/// True when each car lies inside the other's perception window.
inline bool mutuallyVisible(const TrafficWorld& w, AgentId a, AgentId b) {
  const auto windowCells = [&](AgentId id) {
    const Car& c = w.car(id);
    const Heading h = w.desiredHeading(c);
    const Vec f = headingVec(h);
    return std::array<Vec, 4>{c.pos + f + headingVec(leftOf(h)), c.pos + f, c.pos + f + f,
                              c.pos + f + headingVec(rightOf(h))};
  };
  const auto inWindow = [&](AgentId viewer, AgentId seen) {
    const Vec p = w.car(seen).pos;
    for (const Vec cell : windowCells(viewer))
      if (cell == p) return true;
    return false;
  };
  return inWindow(a, b) && inWindow(b, a);
}

/// Candidate groups for game matching: every live car alone, every mutually
/// visible pair, and (when larger games exist) every group of pairwise close
/// cars of the required size. Deterministic order.
inline std::vector<CandidateGroup> candidateGroups(const TrafficWorld& w,
                                                   const std::set<int>& sizes) {
  std::vector<CandidateGroup> out;
  const std::vector<AgentId> live = w.liveCars();
  const auto push = [&](std::vector<AgentId> group) {
    JointView jv = canonicalJointView(w, std::move(group));
    out.push_back(CandidateGroup{std::move(jv.agents), std::move(jv.context)});
  };
  if (sizes.count(1)) {
    for (const AgentId a : live) push({a});
  }
  if (sizes.count(2)) {
    for (std::size_t i = 0; i < live.size(); ++i)
      for (std::size_t j = i + 1; j < live.size(); ++j)
        if (mutuallyVisible(w, live[i], live[j])) push({live[i], live[j]});
  }
  for (const int m : sizes) {
    if (m < 3) continue;
    // groups of pairwise nearby cars (Chebyshev distance <= 2)
    const auto close = [&](AgentId a, AgentId b) {
      const Vec d = w.car(a).pos - w.car(b).pos;
      return std::max(std::abs(d.x), std::abs(d.y)) <= 2;
    };
    std::vector<std::size_t> idx(static_cast<std::size_t>(m));
    const int n = static_cast<int>(live.size());
    if (n < m) continue;
    // enumerate combinations in lexicographic order
    for (int i = 0; i < m; ++i) idx[static_cast<std::size_t>(i)] = static_cast<std::size_t>(i);
    while (true) {
      bool ok = true;
      for (int i = 0; i < m && ok; ++i)
        for (int j = i + 1; j < m && ok; ++j)
          ok = close(live[idx[static_cast<std::size_t>(i)]], live[idx[static_cast<std::size_t>(j)]]);
      if (ok) {
        std::vector<AgentId> g;
        for (int i = 0; i < m; ++i) g.push_back(live[idx[static_cast<std::size_t>(i)]]);
        push(std::move(g));
      }
      int i = m - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == static_cast<std::size_t>(n - m + i)) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < m; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  }
  return out;
}

/// Builds conflict reports from the collision events of one act() call.
/// Participants are the movers (the cars whose previous-tick go caused the
/// crash); their snapshots are taken from the pre-act world. Reports come out
/// ordered by participant ids.
inline std::vector<ConflictReport> detectConflicts(const TrafficWorld& before,
                                                   const StepResult& result) {
  std::vector<ConflictReport> out;
  for (const CollisionEvent& ev : result.collisions) {
    if (ev.movers.empty()) continue;
    const JointView jv = canonicalJointView(before, ev.movers);
    ConflictReport rep;
    rep.tick = before.tick() + 1;
    for (std::size_t i = 0; i < jv.agents.size(); ++i) {
      ParticipantSnapshot ps;
      ps.agent = jv.agents[i];
      ps.view = jv.context.perRoleView[i];
      ps.actionTaken = kGo;
      ps.actionsAvailable = carActionSet();
      rep.roles.push_back(std::move(ps));
    }
    out.push_back(std::move(rep));
  }
  std::sort(out.begin(), out.end(), [](const ConflictReport& a, const ConflictReport& b) {
    std::vector<AgentId> ia, ib;
    for (const auto& p : a.roles) ia.push_back(p.agent);
    for (const auto& p : b.roles) ib.push_back(p.agent);
    std::sort(ia.begin(), ia.end());
    std::sort(ib.begin(), ib.end());
    return ia < ib;
  });
  return out;
}

/// Action choice under a norm: the most preferred permitted action, with
/// go preferred over stop. Unmatched or unconstrained cars go.
inline ActionId preferredAction(const std::vector<ActionId>& permitted) {
  if (std::find(permitted.begin(), permitted.end(), kGo) != permitted.end()) return kGo;
  if (permitted.empty()) return kGo;
  return permitted.front();
}

inline ActionId chooseAction(const GamesBase& gb, const NormativeSystem& ns,
                             const std::vector<GamePlay>& plays, AgentId agent) {
  for (const GamePlay& p : plays) {
    for (std::size_t role = 0; role < p.roleAgents.size(); ++role) {
      if (p.roleAgents[role] != agent) continue;
      const auto normId = normForGame(ns, p.game);
      if (!normId) return kGo;
      const NormsGame& ng = gb.at(p.game);
      const Norm& n = ng.norm(ng.normIndexOf(*normId));
      return preferredAction(
          permittedActions(n, static_cast<int>(role), ng.game().actionSets[role]));
    }
  }
  return kGo;
}

// ---------------------------------------------------------------------------
// Game taxonomy
// ---------------------------------------------------------------------------

enum class GameCategory { SingleStop, DoubleStop, Prevention, TrafficJam, Other };

inline std::string categoryName(GameCategory c) {
  switch (c) {
    case GameCategory::SingleStop: return "single-stop";
    case GameCategory::DoubleStop: return "double-stop";
    case GameCategory::Prevention: return "prevention";
    case GameCategory::TrafficJam: return "traffic-jam";
    case GameCategory::Other: return "other";
  }
  return "?";
}

/// Category of a discovered game.
///  - 2-role games with both forward paths obstructed (a wreck ahead, or a car
///    stuck in front of one) need both cars to stop: double-stop. Crossing
///    games whose shared path cell is free are single-stop (one yield
///    suffices); crossings with a car already in a path cell are neither.
///  - 1-role games with a certain collision ahead are traffic jams; a live car
///    directly ahead that may still move is a prevention game.
inline GameCategory classifyGame(const MRoleGame& g) {
  const int m = g.roleCount();
  for (const Descriptor& d : g.context.perRoleView)
    if (d.size() != 4) return GameCategory::Other;
  const auto isLiveCar = [](SymbolId s) {
    return s == kCarTowardMe || s == kCarAway || s == kCarCrossingLeft || s == kCarCrossingRight;
  };
  const auto blocked = [](const Descriptor& v) {
    return v[kFrontNear] == kCollision ||
           (v[kFrontNear] == kCarAway && v[kFrontFar] == kCollision);
  };
  if (m == 1) {
    const Descriptor& v = g.context.perRoleView[0];
    if (blocked(v)) return GameCategory::TrafficJam;
    if (isLiveCar(v[kFrontNear])) return GameCategory::Prevention;
    return GameCategory::Other;
  }
  if (m == 2) {
    const Descriptor& a = g.context.perRoleView[0];
    const Descriptor& b = g.context.perRoleView[1];
    if (blocked(a) && blocked(b)) return GameCategory::DoubleStop;
    bool crossing = false;
    for (const Descriptor* d : {&a, &b})
      for (const SymbolId s : *d)
        if (s == kCarCrossingLeft || s == kCarCrossingRight) crossing = true;
    if (crossing && a[kFrontNear] == kEmpty && b[kFrontNear] == kEmpty)
      return GameCategory::SingleStop;
    return GameCategory::Other;
  }
  return GameCategory::Other;
}

}  // namespace normev::traffic
