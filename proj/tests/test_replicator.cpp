#include <catch_amalgamated.hpp>

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "normev/replicator.hpp"
#include "test_helpers.hpp"

using namespace normev;
using namespace testhelpers;
using Catch::Matchers::WithinAbs;

namespace {

// Independent oracle: recomputes a norm's fitness by recursive enumeration of
// every combination, with its own discounted-average payoff on the raw memory.
// Deliberately shares no code with the library path it checks.
std::optional<double> oracleDiscountedAverage(const NormsGame& ng, const std::vector<int>& combo,
                                              int role, double beta) {
  std::vector<double> matching;
  for (const MemoryEntry& e : ng.memory())
    if (e.combo == combo) matching.push_back(e.rewards[static_cast<std::size_t>(role)]);
  if (matching.empty()) return std::nullopt;
  const int k = static_cast<int>(matching.size());
  double num = 0.0, den = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double w = std::pow(beta, k - j);  // pow(0,0) == 1
    num += matching[static_cast<std::size_t>(j - 1)] * w;
    den += w;
  }
  return num / den;
}

double oracleNormFitness(const NormsGame& ng, int normIdx, const std::vector<double>& freqs,
                         double beta) {
  const int m = ng.roleCount();
  const int k = ng.normCount();
  double total = 0.0;
  std::vector<int> combo(static_cast<std::size_t>(m), 0);
  const std::function<void(int)> rec = [&](int role) {
    if (role == m) {
      double p = 1.0;
      for (const int i : combo) p *= freqs[static_cast<std::size_t>(i)];
      for (int i = 0; i < m; ++i) {
        if (combo[static_cast<std::size_t>(i)] != normIdx) continue;
        const auto payoff = oracleDiscountedAverage(ng, combo, i, beta);
        total += (payoff ? *payoff : 0.0) * p;
      }
      return;
    }
    for (int n = 0; n < k; ++n) {
      combo[static_cast<std::size_t>(role)] = n;
      rec(role + 1);
    }
  };
  rec(0);
  return total;
}

NormsGame randomSmallGame(SeededRng& rng) {
  const int m = 1 + rng.intBelow(2);
  MRoleGame g;
  for (int i = 0; i < m; ++i) {
    Descriptor d;
    for (int cell = 0; cell < 4; ++cell)
      d.push_back(static_cast<SymbolId>(rng.intBelow(traffic::kSymbolCount)));
    g.context.perRoleView.push_back(d);
    g.actionSets.push_back({traffic::kGo, traffic::kStop});
    g.conflictingActions.push_back(traffic::kGo);
  }
  g.id = 0;
  auto space = buildNormSpace(g);
  if (m == 2 && rng.chance(0.3)) space.resize(2 + rng.intBelow(3));  // 2..4 norms
  return NormsGame(std::move(g), std::move(space), 60);
}

std::vector<double> randomFrequencies(SeededRng& rng, int k) {
  std::vector<double> f(static_cast<std::size_t>(k));
  double sum = 0.0;
  for (double& v : f) {
    v = rng.real01();
    sum += v;
  }
  for (double& v : f) v /= sum;
  return f;
}

}  // namespace

TEST_CASE("joint frequency is the product over the combination") {
  CHECK_THAT(jointFrequency({0.5, 0.5}, {0, 0}), WithinAbs(0.25, 1e-15));
  CHECK_THAT(jointFrequency({0.0, 1.0}, {0, 1}), WithinAbs(0.0, 1e-15));
  CHECK_THAT(jointFrequency({1.0, 0.0}, {0, 0}), WithinAbs(1.0, 1e-15));
  CHECK_THROWS_AS(jointFrequency({0.5, 0.5}, {0, 7}), std::invalid_argument);
}

TEST_CASE("worked replication example on the two-norm crossing game") {
  NormsGame ng = twoNormCrossingGame();
  fillTwoNormPayoffs(ng);
  const PayoffTable table = payoffMatrix(ng, 0.9);
  const std::vector<double> freqs{0.5, 0.5};

  CHECK_THAT(normFitness(table, 0, freqs), WithinAbs(0.25, 1e-12));
  CHECK_THAT(normFitness(table, 1, freqs), WithinAbs(0.6, 1e-12));
  CHECK_THAT(averageFitness(table, freqs), WithinAbs(0.425, 1e-12));

  const ReplicationResult rr = replicateGame(table, freqs);
  CHECK_THAT(rr.frequencies[0], WithinAbs(0.4125, 1e-12));
  CHECK_THAT(rr.frequencies[1], WithinAbs(0.5875, 1e-12));
  CHECK_FALSE(rr.degenerate);

  // conditional fitness divides by the holder's frequency
  const auto c0 = conditionalFitness(table, 0, freqs);
  const auto c1 = conditionalFitness(table, 1, freqs);
  REQUIRE(c0.has_value());
  REQUIRE(c1.has_value());
  CHECK_THAT(*c0, WithinAbs(0.5, 1e-12));
  CHECK_THAT(*c1, WithinAbs(1.2, 1e-12));
  CHECK_FALSE(conditionalFitness(table, 0, {0.0, 1.0}).has_value());
}

TEST_CASE("fitness matches the brute-force oracle on random small games") {
  SeededRng rng(1234);
  int cases = 0;
  while (cases < 200) {
    NormsGame ng = randomSmallGame(rng);
    const int plays = rng.intBelow(50);
    for (int p = 0; p < plays; ++p) {
      std::vector<int> combo;
      std::vector<double> rewards;
      for (int r = 0; r < ng.roleCount(); ++r) {
        combo.push_back(rng.intBelow(ng.normCount()));
        rewards.push_back(rng.real01());
      }
      ng.recordByIndex(combo, rewards, p);
    }
    const double beta = rng.real01();
    const auto freqs = randomFrequencies(rng, ng.normCount());
    const PayoffTable table = payoffMatrix(ng, beta);
    for (int n = 0; n < ng.normCount(); ++n) {
      const double lib = normFitness(table, n, freqs, UndefinedPayoffPolicy::TreatAsZero);
      const double oracle = oracleNormFitness(ng, n, freqs, beta);
      CHECK_THAT(lib, WithinAbs(oracle, 1e-9));
    }
    ++cases;
  }
}

TEST_CASE("monoculture is a fixed point of replication") {
  NormsGame ng = crossingNormsGame();
  fillTwoNormPayoffs(ng);
  ng.recordByIndex({2, 2}, {1.0, 0.7}, 50);
  ng.recordByIndex({3, 3}, {0.7, 0.7}, 51);
  const PayoffTable table = payoffMatrix(ng, 0.8);
  for (int n = 0; n < 4; ++n) {
    std::vector<double> freqs(4, 0.0);
    freqs[static_cast<std::size_t>(n)] = 1.0;
    const ReplicationResult rr = replicateGame(table, freqs);
    CHECK_THAT(rr.frequencies[static_cast<std::size_t>(n)], WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("equal fitness leaves frequencies unchanged") {
  NormsGame ng = twoNormCrossingGame();
  // both norms see the same rewards everywhere
  ng.recordByIndex({0, 0}, {0.5, 0.5}, 0);
  ng.recordByIndex({0, 1}, {0.5, 0.5}, 1);
  ng.recordByIndex({1, 0}, {0.5, 0.5}, 2);
  ng.recordByIndex({1, 1}, {0.5, 0.5}, 3);
  const PayoffTable table = payoffMatrix(ng, 0.8);
  const ReplicationResult rr = replicateGame(table, {0.5, 0.5});
  CHECK_THAT(rr.frequencies[0], WithinAbs(0.5, 1e-12));
  CHECK_THAT(rr.frequencies[1], WithinAbs(0.5, 1e-12));
}

TEST_CASE("extinction is absorbing and frequencies stay normalised") {
  NormsGame ng = crossingNormsGame();
  fillTwoNormPayoffs(ng);
  const PayoffTable table = payoffMatrix(ng, 0.8);
  SeededRng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> freqs = randomFrequencies(rng, 4);
    freqs[2] = 0.0;  // dead norm
    double sum = 0.0;
    for (const double f : freqs) sum += f;
    for (double& f : freqs) f /= sum;
    const ReplicationResult rr = replicateGame(table, freqs);
    if (rr.degenerate) continue;
    CHECK(rr.frequencies[2] == 0.0);
    double after = 0.0;
    for (const double f : rr.frequencies) {
      CHECK(f >= 0.0);
      CHECK(f <= 1.0);
      after += f;
    }
    CHECK_THAT(after, WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("above-average fitness grows, below-average shrinks (raw update)") {
  NormsGame ng = twoNormCrossingGame();
  fillTwoNormPayoffs(ng);
  const PayoffTable table = payoffMatrix(ng, 0.9);
  SeededRng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const double x = 0.05 + 0.9 * rng.real01();
    const std::vector<double> freqs{x, 1.0 - x};
    const auto info = allNormFitness(table, freqs, UndefinedPayoffPolicy::TreatAsZero);
    const double theta = info[0].value * x + info[1].value * (1.0 - x);
    const double raw0 = x + x * (info[0].value - theta);
    if (info[0].value > theta) CHECK(raw0 > x);
    if (info[0].value < theta) CHECK(raw0 < x);
  }
}

TEST_CASE("undefined payoff policies") {
  NormsGame ng = twoNormCrossingGame();
  // only the all-second-norm combination has data
  ng.recordByIndex({1, 1}, {0.7, 1.0}, 0);
  const PayoffTable table = payoffMatrix(ng, 0.8);
  const std::vector<double> freqs{0.5, 0.5};

  const double zero = normFitness(table, 1, freqs, UndefinedPayoffPolicy::TreatAsZero);
  // role 1: 0.7 * p(combo (n2,*)) counts only (n2,n2): 0.7*0.25; role 2: 1*0.25
  CHECK_THAT(zero, WithinAbs(0.7 * 0.25 + 1.0 * 0.25, 1e-12));

  const double skip = normFitness(table, 1, freqs, UndefinedPayoffPolicy::SkipAndRenormalise);
  // defined mass is 0.25 per role out of 0.5: the defined average extrapolates
  CHECK_THAT(skip, WithinAbs((0.7 * 0.25 + 1.0 * 0.25) * (1.0 / 0.5), 1e-12));

  // a norm with no data at all has zero fitness under both policies
  CHECK_THAT(normFitness(table, 0, freqs, UndefinedPayoffPolicy::TreatAsZero),
             WithinAbs(0.0, 1e-12));
  CHECK_THAT(normFitness(table, 0, freqs, UndefinedPayoffPolicy::SkipAndRenormalise),
             WithinAbs(0.0, 1e-12));
}

TEST_CASE("degenerate round leaves frequencies unchanged and raises the flag") {
  PayoffTable table;
  table.roles = 1;
  table.norms = 2;
  table.values.assign(2, std::vector<std::optional<double>>(1));
  table.values[0][0] = 1.0;
  table.values[1][0] = 1.0;
  ReplicationConfig cfg;
  cfg.extinctionFloor = 0.9999;  // above both updated frequencies, everything extinguishes
  const ReplicationResult rr = replicateGame(table, {0.5, 0.5}, cfg);
  CHECK(rr.degenerate);
  CHECK(rr.frequencies == std::vector<double>{0.5, 0.5});
}

TEST_CASE("redistribution follows targets with minimal churn") {
  GamesBase gb;
  PopulationState pop(100);
  SeededRng rng(9);
  registerGame(gb, crossingGame(), buildNormSpace(crossingGame()), pop, rng);
  NormsGame& ng = gb.at(0);

  SECTION("counts follow the worked example") {
    PopulationState two(100);
    GamesBase gb2;
    SeededRng rng2(10);
    MRoleGame g = crossingGame();
    auto space = buildNormSpace(g);
    space.resize(2);
    registerGame(gb2, std::move(g), std::move(space), two, rng2);
    redistribute(two, gb2.at(0), {0.4125, 0.5875}, rng2);
    CHECK(two.counts(gb2.at(0)) == std::vector<int>{41, 59});
  }

  SECTION("matching targets cause zero reassignments") {
    const auto current = pop.frequencies(ng);
    const int moved = redistribute(pop, ng, current, rng);
    CHECK(moved == 0);
  }

  SECTION("realised frequencies land within one agent of the target") {
    const std::vector<double> targets{0.1, 0.2, 0.3, 0.4};
    redistribute(pop, ng, targets, rng);
    const auto counts = pop.counts(ng);
    for (int i = 0; i < 4; ++i)
      CHECK(std::abs(counts[static_cast<std::size_t>(i)] -
                     targets[static_cast<std::size_t>(i)] * 100) < 1.0);
  }

  SECTION("target validation") {
    CHECK_THROWS_AS(redistribute(pop, ng, {0.5, 0.5, 0.5, 0.5}, rng), std::invalid_argument);
    CHECK_THROWS_AS(redistribute(pop, ng, {0.5, 0.5}, rng), std::invalid_argument);
  }
}

TEST_CASE("convergence detection over frequency histories") {
  const std::vector<double> flat{0.6, 0.4};
  SECTION("a long still window converges") {
    std::vector<std::vector<double>> history(40, flat);
    CHECK(hasConverged(history, 30, 1e-3));
  }
  SECTION("too short a history does not") {
    std::vector<std::vector<double>> history(30, flat);
    CHECK_FALSE(hasConverged(history, 30, 1e-3));
    history.push_back(flat);
    CHECK(hasConverged(history, 30, 1e-3));
  }
  SECTION("oscillation breaks convergence") {
    std::vector<std::vector<double>> history;
    for (int i = 0; i < 80; ++i)
      history.push_back(i % 2 ? std::vector<double>{0.55, 0.45} : std::vector<double>{0.45, 0.55});
    CHECK_FALSE(hasConverged(history, 30, 1e-3));
  }
  SECTION("slow drift below the tolerance still counts as converged") {
    std::vector<std::vector<double>> history;
    for (int i = 0; i < 40; ++i)
      history.push_back({0.5 + i * 1e-5, 0.5 - i * 1e-5});  // 3e-4 over a 30-round window
    CHECK(hasConverged(history, 30, 1e-3));
  }
  SECTION("drift at the tolerance does not") {
    std::vector<std::vector<double>> history;
    for (int i = 0; i < 40; ++i)
      history.push_back({0.5 + i * 1e-3, 0.5 - i * 1e-3});
    CHECK_FALSE(hasConverged(history, 30, 1e-3));
  }
}
