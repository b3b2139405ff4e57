#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

namespace normev::egt {

/// Two-strategy symmetric matrix game. payoff[r][c] is the row player's
/// payoff when playing strategy r against strategy c.
struct MatrixGame2 {
  std::array<std::array<double, 2>, 2> payoff{};
  std::array<std::string, 2> labels{"A", "B"};
};

inline MatrixGame2 hawkDove(double v, double c) {
  MatrixGame2 g;
  g.payoff = {{{v / 2.0 - c / 2.0, v}, {0.0, v / 2.0}}};
  g.labels = {"hawk", "dove"};
  return g;
}

constexpr int kHawk = 0;
constexpr int kDove = 1;

struct StrategyPopulation {
  std::array<double, 2> freq{0.5, 0.5};     // must sum to 1
  std::array<double, 2> initialFitness{0.0, 0.0};
};

/// f(s) = f0(s) + sum_o F(o) * payoff(s, o).
inline std::array<double, 2> strategyFitness(const StrategyPopulation& pop,
                                             const MatrixGame2& game) {
  std::array<double, 2> f{};
  for (int s = 0; s < 2; ++s) {
    f[s] = pop.initialFitness[s];
    for (int o = 0; o < 2; ++o) f[s] += pop.freq[o] * game.payoff[s][o];
  }
  return f;
}

/// One discrete replication step: F(s)' = F(s) + F(s)*(f(s) - theta), with
/// theta the frequency-weighted average fitness. The raw update can leave
/// [0,1] for large payoffs, so the result is clamped and renormalised.
inline StrategyPopulation replicateStep(const StrategyPopulation& pop, const MatrixGame2& game) {
  const auto f = strategyFitness(pop, game);
  const double theta = pop.freq[0] * f[0] + pop.freq[1] * f[1];
  StrategyPopulation next = pop;
  double sum = 0.0;
  for (int s = 0; s < 2; ++s) {
    double v = pop.freq[s] + pop.freq[s] * (f[s] - theta);
    v = std::min(1.0, std::max(0.0, v));
    next.freq[s] = v;
    sum += v;
  }
  if (sum > 0.0) {
    next.freq[0] /= sum;
    next.freq[1] /= sum;
  } else {
    next.freq = pop.freq;
  }
  return next;
}

struct FixedPointResult {
  StrategyPopulation population;
  int steps = 0;
  bool converged = false;
};

/// Iterates replicateStep until the change in frequency drops below epsilon
/// or maxSteps is exhausted; non-convergence is reported, not thrown.
inline FixedPointResult iterateToFixedPoint(const StrategyPopulation& start,
                                            const MatrixGame2& game, int maxSteps,
                                            double epsilon) {
  if (maxSteps <= 0) throw std::invalid_argument("iterateToFixedPoint: maxSteps must be positive");
  if (!(epsilon > 0.0)) throw std::invalid_argument("iterateToFixedPoint: epsilon must be positive");
  FixedPointResult res;
  res.population = start;
  for (int i = 0; i < maxSteps; ++i) {
    const StrategyPopulation next = replicateStep(res.population, game);
    const double delta = std::max(std::abs(next.freq[0] - res.population.freq[0]),
                                  std::abs(next.freq[1] - res.population.freq[1]));
    res.population = next;
    ++res.steps;
    if (delta < epsilon) {
      res.converged = true;
      break;
    }
  }
  return res;
}

/// Textbook stability test for `strategy` (row index): either it is a strict
/// best response to itself, or it ties against itself and strictly beats the
/// alternative against that alternative.
inline bool isESS2(const MatrixGame2& game, int strategy, double epsEq = 1e-9) {
  if (strategy < 0 || strategy > 1) throw std::out_of_range("isESS2: strategy index");
  const int other = 1 - strategy;
  const double selfSelf = game.payoff[strategy][strategy];
  const double otherSelf = game.payoff[other][strategy];
  if (selfSelf > otherSelf + epsEq) return true;
  if (std::abs(selfSelf - otherSelf) <= epsEq &&
      game.payoff[strategy][other] > game.payoff[other][other] + epsEq)
    return true;
  return false;
}

}  // namespace normev::egt
