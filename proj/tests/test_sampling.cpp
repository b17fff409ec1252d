#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "scmdyn/engine.hpp"
#include "scmdyn/equations.hpp"
#include "scmdyn/errors.hpp"

using namespace scmdyn;

namespace {

ScmGraph one_exo(NoisePrior prior) {
  ScmGraph g;
  g.plates["i"] = 1;
  g.nodes.push_back({"U", std::nullopt, prior, {}});
  g.nodes.push_back({"X", std::nullopt, identity_equation("U"), {}});
  return g;
}

void check_moments(NoisePrior prior, std::size_t n = 100000) {
  const ScmGraph g = one_exo(prior);
  const auto worlds = sample_worlds(g, n, 99);
  std::vector<double> xs;
  xs.reserve(n);
  for (const auto& w : worlds) xs.push_back(w.scalar("U"));
  const Estimate m = mean_and_se(xs);
  CHECK(std::abs(m.mean - prior.mean()) <= 4.0 * m.std_error);
  // Variance within 4 SEs of its own sampling distribution (normal approx).
  double s2 = 0.0, s4 = 0.0;
  for (double x : xs) {
    const double d = x - m.mean;
    s2 += d * d;
    s4 += d * d * d * d;
  }
  s2 /= n;
  s4 /= n;
  const double se_var = std::sqrt(std::max(s4 - s2 * s2, 0.0) / n);
  CHECK(std::abs(s2 - prior.variance()) <= 4.0 * se_var);
}

}  // namespace

TEST_CASE("empirical moments match analytic moments") {
  check_moments(NoisePrior::uniform(-2.0, 3.0));
  check_moments(NoisePrior::gaussian(1.5, 2.0));
  check_moments(NoisePrior::bernoulli(0.3));
}

TEST_CASE("uniform draws pass a KS test") {
  const ScmGraph g = one_exo(NoisePrior::uniform(0.0, 1.0));
  const std::size_t n = 100000;
  const auto worlds = sample_worlds(g, n, 7);
  std::vector<double> xs;
  for (const auto& w : worlds) xs.push_back(w.scalar("U"));
  // 1% critical value for the one-sample KS statistic.
  CHECK(testutil::ks_uniform(xs) < 1.63 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("determinism: identical seeds give identical worlds") {
  ScmGraph g;
  g.plates["unit"] = 17;
  g.nodes.push_back({"U", "unit", NoisePrior::gaussian(0, 1), {}});
  g.nodes.push_back({"B", "unit", NoisePrior::bernoulli(0.4), {}});
  g.nodes.push_back({"X", "unit", identity_equation("U"), {}});
  g.nodes.push_back({"M", std::nullopt, mean_reduction({"X"}), {}});

  const auto a = sample_worlds(g, 50, 123);
  const auto b = sample_worlds(g, 50, 123);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].values == b[i].values);

  const auto c = sample_worlds(g, 50, 124);
  CHECK(a[0].values != c[0].values);
}

TEST_CASE("parallel execution matches sequential bit-for-bit") {
  ScmGraph g;
  g.plates["unit"] = 11;
  g.nodes.push_back({"U", "unit", NoisePrior::gaussian(0, 1), {}});
  g.nodes.push_back({"X", "unit", identity_equation("U"), {}});
  const auto seq = sample_worlds(g, 64, 5, 1);
  for (unsigned jobs : {2u, 3u, 8u}) {
    const auto par = sample_worlds(g, 64, 5, jobs);
    for (std::size_t i = 0; i < seq.size(); ++i)
      CHECK(seq[i].values == par[i].values);
  }
}

TEST_CASE("draws are keyed by node id, not declaration order") {
  ScmGraph g;
  g.nodes.push_back({"U1", std::nullopt, NoisePrior::uniform(0, 1), {}});
  g.nodes.push_back({"U2", std::nullopt, NoisePrior::uniform(0, 1), {}});
  ScmGraph h;
  h.nodes.push_back({"U2", std::nullopt, NoisePrior::uniform(0, 1), {}});
  h.nodes.push_back({"U1", std::nullopt, NoisePrior::uniform(0, 1), {}});
  const auto wg = sample_worlds(g, 3, 42);
  const auto wh = sample_worlds(h, 3, 42);
  for (std::size_t i = 0; i < wg.size(); ++i)
    CHECK(wg[i].values == wh[i].values);
}

TEST_CASE("replayability: evaluate on a world's own noise reproduces it") {
  ScmGraph g;
  g.plates["unit"] = 9;
  g.nodes.push_back({"U", "unit", NoisePrior::gaussian(0, 2), {}});
  g.nodes.push_back({"V", "unit", NoisePrior::uniform(-1, 1), {}});
  Equation eq;
  eq.inputs = {"U", "V"};
  eq.kind = ValueKind::Real;
  eq.name = "blend";
  eq.fn = [](std::span<const double> a) { return a[0] * a[1] + a[0]; };
  g.nodes.push_back({"X", "unit", std::move(eq), {}});
  g.nodes.push_back({"M", std::nullopt, mean_reduction({"X"}), {}});

  for (const auto& w : sample_worlds(g, 20, 77)) {
    ExogenousAssignment exo{{"U", w.column("U")}, {"V", w.column("V")}};
    const World replay = evaluate(g, exo, w.seed, w.world_index);
    CHECK(replay.values == w.values);
  }
}

TEST_CASE("missing exogenous assignment") {
  const ScmGraph g = one_exo(NoisePrior::uniform(0, 1));
  CHECK_THROWS_AS(evaluate(g, {}), IncompleteExogenousError);
}

TEST_CASE("estimate of a constant query") {
  const ScmGraph g = one_exo(NoisePrior::uniform(0, 1));
  const Estimate e = estimate(g, [](const World&) { return 3.0; }, 100, 1);
  CHECK(e.mean == 3.0);
  CHECK(e.std_error == 0.0);
  CHECK(e.n == 100);
}

TEST_CASE("estimate requires n >= 2") {
  const ScmGraph g = one_exo(NoisePrior::uniform(0, 1));
  CHECK_THROWS_AS(estimate(g, [](const World&) { return 0.0; }, 1, 1),
                  InsufficientSamplesError);
  CHECK_THROWS_AS(mean_and_se({1.0}), InsufficientSamplesError);
}

TEST_CASE("unplated parents broadcast to plated children") {
  ScmGraph g;
  g.plates["unit"] = 4;
  g.nodes.push_back({"S", std::nullopt, NoisePrior::uniform(0, 1), {}});
  g.nodes.push_back({"X", "unit", identity_equation("S"), {}});
  const auto w = sample_worlds(g, 1, 3)[0];
  for (double x : w.column("X")) CHECK(x == w.scalar("S"));
}
