#include <catch_amalgamated.hpp>

#include "normev/norm_model.hpp"
#include "normev/recognition.hpp"
#include "normev/rng.hpp"
#include "test_helpers.hpp"

using namespace normev;
using namespace testhelpers;

TEST_CASE("normApplies is exact context equality") {
  const MRoleGame ga = crossingGame();
  MRoleGame gb = crossingGame();
  gb.context.perRoleView[0][0] = traffic::kCollision;  // any cell variation is a different game

  const auto space = buildNormSpace(ga);
  CHECK(normApplies(ga, space[0]));
  CHECK_FALSE(normApplies(gb, space[0]));
}

TEST_CASE("every norm of a built norm space applies to its game") {
  SeededRng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    MRoleGame g;
    const int m = 1 + rng.intBelow(3);
    for (int i = 0; i < m; ++i) {
      Descriptor d;
      for (int cell = 0; cell < 4; ++cell)
        d.push_back(static_cast<SymbolId>(rng.intBelow(traffic::kSymbolCount)));
      g.context.perRoleView.push_back(d);
      g.actionSets.push_back({traffic::kGo, traffic::kStop});
      g.conflictingActions.push_back(traffic::kGo);
    }
    const auto space = buildNormSpace(g);
    REQUIRE(space.size() == (1u << m));
    for (const Norm& n : space) CHECK(normApplies(g, n));
  }
}

TEST_CASE("permittedActions removes exactly the role's prohibitions") {
  const NormsGame ng = crossingNormsGame();
  const auto& space = ng.normSpace();
  const std::vector<ActionId> actions{traffic::kGo, traffic::kStop};

  // n2 prohibits the first role's go
  CHECK(permittedActions(space[1], 0, actions) == std::vector<ActionId>{traffic::kStop});
  // n1 prohibits nothing
  CHECK(permittedActions(space[0], 1, actions) == actions);
  // n4 prohibits go for both roles
  CHECK(permittedActions(space[3], 0, actions) == std::vector<ActionId>{traffic::kStop});
  CHECK(permittedActions(space[3], 1, actions) == std::vector<ActionId>{traffic::kStop});

  CHECK_THROWS_AS(permittedActions(space[0], 2, actions), std::out_of_range);
  CHECK_THROWS_AS(permittedActions(space[0], -1, actions), std::out_of_range);
}

TEST_CASE("normForGame looks up the assignment, absence is a value") {
  const NormsGame ng = crossingNormsGame();
  NormativeSystem ns;
  CHECK_FALSE(normForGame(ns, 0).has_value());

  ns.assignment[0] = ng.norm(2).id;
  ns.assignment[5] = ng.norm(0).id;
  CHECK(normForGame(ns, 0) == ng.norm(2).id);
  CHECK(normForGame(ns, 5) == ng.norm(0).id);
  CHECK_FALSE(normForGame(ns, 7).has_value());
}

TEST_CASE("norm ids are deterministic and distinguish prohibitions and contexts") {
  const auto a = buildNormSpace(crossingGame());
  const auto b = buildNormSpace(crossingGame());
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].id == b[i].id);
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j) CHECK(a[i].id != a[j].id);

  const auto other = buildNormSpace(crossingGame(traffic::kCollision, traffic::kCollision));
  CHECK(a[0].id != other[0].id);  // same prohibitions, different context
}

TEST_CASE("memory records append in order and evict oldest at capacity") {
  NormsGame ng = crossingNormsGame(3);
  const NormId n1 = ng.norm(0).id;
  const NormId n4 = ng.norm(3).id;

  ng.record({n4, n4}, {0.7, 0.7}, 1);
  REQUIRE(ng.memory().size() == 1);

  ng.record({n4, n4}, {0.7, 0.7}, 2);
  ng.record({n1, n1}, {0.0, 0.0}, 3);
  REQUIRE(ng.memory().size() == 3);
  CHECK(ng.memory()[0].combo == std::vector<int>{3, 3});
  CHECK(ng.memory()[1].combo == std::vector<int>{3, 3});
  CHECK(ng.memory()[2].combo == std::vector<int>{0, 0});
  CHECK(ng.memory()[2].rewards == std::vector<double>{0.0, 0.0});

  // capacity 3: a fourth record evicts the oldest
  ng.record({n1, n4}, {0.0, 0.0}, 4);
  REQUIRE(ng.memory().size() == 3);
  CHECK(ng.memory()[0].tick == 2);
  CHECK(ng.memory()[2].combo == std::vector<int>{0, 3});
}

TEST_CASE("memory rejects malformed entries") {
  NormsGame ng = crossingNormsGame();
  const NormId n1 = ng.norm(0).id;
  CHECK_THROWS_AS(ng.record({n1}, {0.0, 0.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(ng.record({n1, n1}, {0.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(ng.record({n1, 12345u}, {0.0, 0.0}, 0), std::invalid_argument);
  CHECK_THROWS_AS(ng.record({n1, n1}, {0.0, -1.0}, 0), std::invalid_argument);
}

TEST_CASE("memory replay is deterministic") {
  NormsGame a = crossingNormsGame(5);
  NormsGame b = crossingNormsGame(5);
  SeededRng rng(7);
  for (int i = 0; i < 40; ++i) {
    const int c0 = rng.intBelow(4), c1 = rng.intBelow(4);
    const double r0 = rng.real01(), r1 = rng.real01();
    a.recordByIndex({c0, c1}, {r0, r1}, i);
    b.recordByIndex({c0, c1}, {r0, r1}, i);
  }
  REQUIRE(a.memory().size() == b.memory().size());
  for (std::size_t i = 0; i < a.memory().size(); ++i) {
    CHECK(a.memory()[i].combo == b.memory()[i].combo);
    CHECK(a.memory()[i].rewards == b.memory()[i].rewards);
    CHECK(a.memory()[i].tick == b.memory()[i].tick);
  }
}

TEST_CASE("population frequencies sum to one once every agent holds a norm") {
  const NormsGame ng = crossingNormsGame();
  PopulationState pop(10);
  GamesBase gb;
  SeededRng rng(3);
  MRoleGame g = crossingGame();
  registerGame(gb, std::move(g), buildNormSpace(crossingGame()), pop, rng);

  const auto freqs = pop.frequencies(gb.at(0));
  double sum = 0.0;
  for (const double f : freqs) sum += f;
  CHECK_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));

  // 4 norms over 10 agents: counts (3,3,2,2) in canonical norm order
  const auto counts = pop.counts(gb.at(0));
  CHECK(counts == std::vector<int>{3, 3, 2, 2});
}

TEST_CASE("largest remainder apportionment") {
  CHECK(apportionLargestRemainder({0.4125, 0.5875}, 100) == std::vector<int>{41, 59});
  CHECK(apportionLargestRemainder({0.5, 0.5}, 3) == std::vector<int>{2, 1});
  CHECK(apportionLargestRemainder({0.25, 0.25, 0.25, 0.25}, 10) == std::vector<int>{3, 3, 2, 2});
  CHECK(apportionLargestRemainder({0.25, 0.25, 0.25, 0.25}, 100) ==
        std::vector<int>{25, 25, 25, 25});
  CHECK(apportionLargestRemainder({1.0, 0.0}, 7) == std::vector<int>{7, 0});

  SeededRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int k = 1 + rng.intBelow(6);
    std::vector<double> targets(static_cast<std::size_t>(k));
    double sum = 0.0;
    for (double& t : targets) {
      t = rng.real01();
      sum += t;
    }
    for (double& t : targets) t /= sum;
    const int n = 1 + rng.intBelow(200);
    const auto counts = apportionLargestRemainder(targets, n);
    int total = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) {
      total += counts[i];
      CHECK(std::abs(counts[i] - targets[i] * n) < 1.0);  // never off by a whole unit
    }
    CHECK(total == n);
  }
}
