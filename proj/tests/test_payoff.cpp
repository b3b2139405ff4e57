#include <catch_amalgamated.hpp>

#include "normev/payoff.hpp"
#include "test_helpers.hpp"

using namespace normev;
using namespace testhelpers;
using Catch::Matchers::WithinAbs;

TEST_CASE("discounted payoff of repeated identical rewards equals that reward") {
  NormsGame ng = crossingNormsGame();
  const NormId n4 = ng.norm(3).id;
  ng.record({n4, n4}, {0.7, 0.7}, 1);
  ng.record({n4, n4}, {0.7, 0.7}, 2);
  for (int role = 0; role < 2; ++role) {
    const auto p = expectedPayoff(ng, std::vector<NormId>{n4, n4}, role, 0.9);
    REQUIRE(p.has_value());
    CHECK_THAT(*p, WithinAbs(0.7, 1e-12));
  }
}

TEST_CASE("discounted payoff weights recent rewards more") {
  NormsGame ng = crossingNormsGame();
  const NormId n1 = ng.norm(0).id;
  ng.record({n1, n1}, {0.0, 0.0}, 1);
  ng.record({n1, n1}, {1.0, 1.0}, 2);
  // k = 2, rewards (0, 1) oldest first: (0*0.5 + 1*1) / (0.5 + 1) = 2/3
  const auto p = expectedPayoff(ng, std::vector<NormId>{n1, n1}, 0, 0.5);
  REQUIRE(p.has_value());
  CHECK_THAT(*p, WithinAbs(2.0 / 3.0, 1e-12));
}

TEST_CASE("payoff is absent without matching entries") {
  NormsGame ng = crossingNormsGame();
  const NormId n1 = ng.norm(0).id;
  const NormId n2 = ng.norm(1).id;
  CHECK_FALSE(expectedPayoff(ng, std::vector<NormId>{n1, n1}, 0, 0.8).has_value());
  ng.record({n2, n2}, {0.7, 1.0}, 1);
  CHECK_FALSE(expectedPayoff(ng, std::vector<NormId>{n1, n1}, 0, 0.8).has_value());
  CHECK(expectedPayoff(ng, std::vector<NormId>{n2, n2}, 0, 0.8).has_value());
}

TEST_CASE("payoff properties over the discount range") {
  SeededRng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    NormsGame ng = crossingNormsGame();
    const int entries = 1 + rng.intBelow(20);
    const double constantReward = rng.real01();
    for (int i = 0; i < entries; ++i)
      ng.recordByIndex({2, 2}, {constantReward, constantReward}, i);
    for (const double beta : {0.0, 0.1, 0.3, 0.5, 0.8, 0.9, 1.0}) {
      const auto p = expectedPayoff(ng, std::vector<int>{2, 2}, 0, beta);
      REQUIRE(p.has_value());
      CHECK_THAT(*p, WithinAbs(constantReward, 1e-12));
    }
  }
}

TEST_CASE("discount factor one is the arithmetic mean, zero the latest reward") {
  SeededRng rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    NormsGame ng = crossingNormsGame();
    const int entries = 1 + rng.intBelow(15);
    std::vector<double> rewards;
    for (int i = 0; i < entries; ++i) {
      const double r = rng.real01();
      rewards.push_back(r);
      ng.recordByIndex({1, 2}, {r, r}, i);
    }
    double mean = 0.0, lo = 1.0, hi = 0.0;
    for (const double r : rewards) {
      mean += r;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    mean /= static_cast<double>(rewards.size());

    const auto pMean = expectedPayoff(ng, std::vector<int>{1, 2}, 0, 1.0);
    REQUIRE(pMean.has_value());
    CHECK_THAT(*pMean, WithinAbs(mean, 1e-12));

    const auto pLast = expectedPayoff(ng, std::vector<int>{1, 2}, 0, 0.0);
    REQUIRE(pLast.has_value());
    CHECK_THAT(*pLast, WithinAbs(rewards.back(), 1e-12));

    // any beta keeps the payoff inside the reward range
    for (const double beta : {0.2, 0.6, 0.95}) {
      const auto p = expectedPayoff(ng, std::vector<int>{1, 2}, 0, beta);
      CHECK(*p >= lo - 1e-12);
      CHECK(*p <= hi + 1e-12);
    }
  }
}

TEST_CASE("payoff only uses entries of the queried combination") {
  NormsGame ng = crossingNormsGame();
  ng.recordByIndex({3, 3}, {0.7, 0.7}, 1);
  ng.recordByIndex({0, 0}, {0.0, 0.0}, 2);
  ng.recordByIndex({3, 3}, {0.7, 0.7}, 3);
  const auto p = expectedPayoff(ng, std::vector<int>{3, 3}, 1, 0.9);
  REQUIRE(p.has_value());
  CHECK_THAT(*p, WithinAbs(0.7, 1e-12));
}

TEST_CASE("payoff matrix covers all combinations in deterministic order") {
  NormsGame ng = twoNormCrossingGame();
  SECTION("fresh game has only absent entries") {
    const PayoffTable t = payoffMatrix(ng, 0.8);
    REQUIRE(t.comboCount() == 4);
    for (long c = 0; c < t.comboCount(); ++c)
      for (int role = 0; role < 2; ++role)
        CHECK_FALSE(t.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(role)]
                        .has_value());
  }
  SECTION("played combinations carry their learned values") {
    fillTwoNormPayoffs(ng);
    const PayoffTable t = payoffMatrix(ng, 0.8);
    CHECK_THAT(*t.at({0, 0}, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(*t.at({0, 1}, 0), WithinAbs(0.0, 1e-12));
    CHECK_THAT(*t.at({1, 0}, 0), WithinAbs(0.7, 1e-12));
    CHECK_THAT(*t.at({1, 0}, 1), WithinAbs(1.0, 1e-12));
    CHECK_THAT(*t.at({1, 1}, 0), WithinAbs(0.7, 1e-12));
    CHECK_THAT(*t.at({1, 1}, 1), WithinAbs(1.0, 1e-12));
  }
  SECTION("single recorded play defines exactly one combination") {
    NormsGame fresh = crossingNormsGame();
    fresh.recordByIndex({3, 3}, {0.7, 0.7}, 0);
    const PayoffTable t = payoffMatrix(fresh, 0.8);
    int defined = 0;
    for (long c = 0; c < t.comboCount(); ++c)
      for (int role = 0; role < 2; ++role)
        if (t.values[static_cast<std::size_t>(c)][static_cast<std::size_t>(role)]) ++defined;
    CHECK(defined == 2);
    CHECK_THAT(*t.at({3, 3}, 0), WithinAbs(0.7, 1e-12));
    CHECK_THAT(*t.at({3, 3}, 1), WithinAbs(0.7, 1e-12));
  }
}

TEST_CASE("combo codes round-trip") {
  PayoffTable t;
  t.roles = 3;
  t.norms = 4;
  t.values.assign(64, std::vector<std::optional<double>>(3));
  for (long c = 0; c < 64; ++c) {
    const auto combo = t.decode(c);
    CHECK(PayoffTable::code(combo, 4) == c);
  }
}
