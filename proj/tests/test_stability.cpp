#include <catch_amalgamated.hpp>

#include "normev/egt.hpp"
#include "normev/stability.hpp"
#include "test_helpers.hpp"

using namespace normev;
using namespace testhelpers;
using Catch::Matchers::WithinAbs;

namespace {

// A 2-role, 2-norm game whose payoffs mirror a symmetric matrix game: role 1
// sees payoff(a,b), role 2 sees payoff(b,a).
PayoffTable symmetricRecast(const egt::MatrixGame2& g) {
  PayoffTable t;
  t.roles = 2;
  t.norms = 2;
  t.values.assign(4, std::vector<std::optional<double>>(2));
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 2; ++b) {
      t.values[static_cast<std::size_t>(a * 2 + b)][0] = g.payoff[a][b];
      t.values[static_cast<std::size_t>(a * 2 + b)][1] = g.payoff[b][a];
    }
  return t;
}

NormsGame twoNormGameShell() { return twoNormCrossingGame(); }

}  // namespace

TEST_CASE("literal stability on the hawk-dove recast") {
  NormsGame shell = twoNormGameShell();
  const PayoffTable table = symmetricRecast(egt::hawkDove(4.0, 2.0));
  const StabilityVerdict hawk = literalESNorm(shell, table, 0);
  CHECK(hawk.literalConjunctive == Verdict::Holds);
  CHECK(hawk.literalPerRole == Verdict::Holds);
  const StabilityVerdict dove = literalESNorm(shell, table, 1);
  CHECK(dove.literalConjunctive == Verdict::Fails);
  CHECK(dove.literalPerRole == Verdict::Fails);
}

TEST_CASE("literal stability agrees with the two-strategy test on random symmetric games") {
  NormsGame shell = twoNormGameShell();
  SeededRng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    egt::MatrixGame2 g;
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b) g.payoff[a][b] = static_cast<double>(rng.intBelow(5));
    const PayoffTable table = symmetricRecast(g);
    for (int s = 0; s < 2; ++s) {
      const bool expected = egt::isESS2(g, s);
      const StabilityVerdict v = literalESNorm(shell, table, s);
      CHECK(v.literalConjunctive == (expected ? Verdict::Holds : Verdict::Fails));
      CHECK(v.literalPerRole == (expected ? Verdict::Holds : Verdict::Fails));
    }
  }
}

TEST_CASE("literal stability on the learned crossing payoffs") {
  NormsGame ng = twoNormGameShell();
  fillTwoNormPayoffs(ng);
  const PayoffTable table = payoffMatrix(ng, 0.9);
  // the second role's comparison ties and the counter-invasion inequality
  // fails (0 < 0 is false), so the incumbent n2 does not pass the literal test
  const StabilityVerdict v = literalESNorm(ng, table, 1);
  CHECK(v.literalConjunctive == Verdict::Fails);
  CHECK(v.literalPerRole == Verdict::Fails);
  REQUIRE(v.detail.size() == 1);
  CHECK(v.detail[0].strictRoles == std::vector<int>{0});
  CHECK(v.detail[0].tiedRoles == std::vector<int>{1});
}

TEST_CASE("literal stability under strict dominance") {
  NormsGame ng = twoNormGameShell();
  // the second norm strictly dominates in every combination and role
  ng.recordByIndex({0, 0}, {0.1, 0.1}, 0);
  ng.recordByIndex({0, 1}, {0.1, 0.9}, 1);
  ng.recordByIndex({1, 0}, {0.9, 0.1}, 2);
  ng.recordByIndex({1, 1}, {0.9, 0.9}, 3);
  const PayoffTable table = payoffMatrix(ng, 0.8);
  CHECK(literalESNorm(ng, table, 1).literalConjunctive == Verdict::Holds);
  CHECK(literalESNorm(ng, table, 0).literalConjunctive == Verdict::Fails);
}

TEST_CASE("literal stability reports missing data") {
  NormsGame ng = twoNormGameShell();
  ng.recordByIndex({1, 1}, {0.7, 1.0}, 0);  // only one combination known
  const PayoffTable table = payoffMatrix(ng, 0.8);
  const StabilityVerdict v = literalESNorm(ng, table, 1);
  CHECK(v.literalConjunctive == Verdict::InsufficientData);
  CHECK(v.literalPerRole == Verdict::InsufficientData);
}

TEST_CASE("invasion test on the learned crossing payoffs") {
  NormsGame ng = twoNormGameShell();
  fillTwoNormPayoffs(ng);
  const PayoffTable table = payoffMatrix(ng, 0.9);

  // incumbent n2 at 0.99: conditional fitness 1.69 vs 0.99 for n1
  CHECK(invasionStableNorm(table, 1, 0.01) == Verdict::Holds);
  CHECK(invasionStableNorm(table, 0, 0.01) == Verdict::Fails);

  SECTION("the verdict is monotone when the invader share shrinks") {
    bool held = false;
    for (const double eps : {0.3, 0.2, 0.1, 0.05, 0.01}) {
      const bool holds = invasionStableNorm(table, 1, eps) == Verdict::Holds;
      if (held) CHECK(holds);
      held = held || holds;
    }
    CHECK(held);
  }

  SECTION("hand-computed conditional fitnesses at the invasion profile") {
    const std::vector<double> freqs{0.01, 0.99};
    const auto c1 = conditionalFitness(table, 1, freqs);
    const auto c0 = conditionalFitness(table, 0, freqs);
    REQUIRE(c1.has_value());
    REQUIRE(c0.has_value());
    CHECK_THAT(*c1, WithinAbs(1.6731 / 0.99, 1e-9));
    CHECK_THAT(*c0, WithinAbs(0.0099 / 0.01, 1e-9));
  }
}

TEST_CASE("invasion test trivia") {
  SECTION("single-norm space is vacuously stable") {
    PayoffTable t;
    t.roles = 1;
    t.norms = 1;
    t.values.assign(1, std::vector<std::optional<double>>(1));
    CHECK(invasionStableNorm(t, 0) == Verdict::Holds);
  }
  SECTION("no data for the incumbent is indeterminate") {
    NormsGame ng = twoNormGameShell();
    ng.recordByIndex({0, 0}, {0.5, 0.5}, 0);
    const PayoffTable table = payoffMatrix(ng, 0.8);
    CHECK(invasionStableNorm(table, 1) == Verdict::InsufficientData);
  }
}

TEST_CASE("whole-system stability requires unanimity and stable norms") {
  GamesBase gb;
  PopulationState pop(10);
  SeededRng rng(4);
  MRoleGame g = crossingGame();
  auto space = buildNormSpace(g);
  space.resize(2);
  const GameId id = registerGame(gb, std::move(g), std::move(space), pop, rng);
  fillTwoNormPayoffs(gb.at(id));

  const NormId stableNorm = gb.at(id).norm(1).id;
  for (NormativeSystem& ns : pop.agents) ns.assignment[id] = stableNorm;

  SECTION("unanimous stable adoption passes") {
    const EsnsReport rep = isESNS(pop, gb, 0.9);
    CHECK(rep.stable);
    REQUIRE(rep.perGame.size() == 1);
    CHECK(rep.perGame[0].invasion == Verdict::Holds);
  }

  SECTION("one deviating agent fails with the unanimity reason") {
    pop.agents[3].assignment[id] = gb.at(id).norm(0).id;
    const EsnsReport rep = isESNS(pop, gb, 0.9);
    CHECK_FALSE(rep.stable);
    CHECK(rep.reason == "not adopted by all agents");
  }

  SECTION("unanimous adoption of an invadable norm fails with the game id") {
    for (NormativeSystem& ns : pop.agents) ns.assignment[id] = gb.at(id).norm(0).id;
    const EsnsReport rep = isESNS(pop, gb, 0.9);
    CHECK_FALSE(rep.stable);
    CHECK(rep.reason.find("game 0") != std::string::npos);
  }

  SECTION("a game missing from the system fails") {
    PopulationState empty(10);
    const EsnsReport rep = isESNS(empty, gb, 0.9);
    CHECK_FALSE(rep.stable);
  }
}

TEST_CASE("mutant injection") {
  GamesBase gb;
  PopulationState pop(100);
  SeededRng rng(12);
  registerGame(gb, crossingGame(), buildNormSpace(crossingGame()), pop, rng);
  const GameId id = 0;
  const NormsGame& ng = gb.at(id);

  // incumbent monoculture on n2
  for (NormativeSystem& ns : pop.agents) ns.assignment[id] = ng.norm(1).id;

  SECTION("exact mutant count and majority exclusion") {
    const auto mutated = injectMutants(pop, gb, 0.05, rng);
    CHECK(mutated.size() == 5);
    for (const AgentId a : mutated) {
      const auto n = normForGame(pop.agents[static_cast<std::size_t>(a)], id);
      REQUIRE(n.has_value());
      CHECK(*n != ng.norm(1).id);  // never the incumbent majority norm
    }
    CHECK(pop.frequency(ng, ng.norm(1).id) >= 0.95);
    // every agent still holds exactly one norm for the game
    for (const NormativeSystem& ns : pop.agents) CHECK(ns.assignment.count(id) == 1);
  }

  SECTION("single-norm games keep their assignment") {
    MRoleGame one = singleRoleGame();
    auto space = buildNormSpace(one);
    space.resize(1);
    const GameId oneId = registerGame(gb, std::move(one), std::move(space), pop, rng);
    const NormId only = gb.at(oneId).norm(0).id;
    for (NormativeSystem& ns : pop.agents) ns.assignment[oneId] = only;
    injectMutants(pop, gb, 0.1, rng);
    for (const NormativeSystem& ns : pop.agents) CHECK(normForGame(ns, oneId) == only);
  }

  SECTION("fraction bounds") {
    CHECK_THROWS_AS(injectMutants(pop, gb, 0.0, rng), std::invalid_argument);
    CHECK_THROWS_AS(injectMutants(pop, gb, 1.0, rng), std::invalid_argument);
  }
}
