#include <cmath>
#include <random>

#include "carpetslice/errors.hpp"
#include "carpetslice/measures.hpp"
#include "doctest.h"

using namespace carpetslice;

namespace {

Carpet carpet_F() { return Carpet::make(3, 2, {{0, 0}, {0, 1}, {2, 0}}); }

BernoulliSpec point_spec(DigitPair d, std::uint64_t seed) {
  BernoulliSpec s;
  s.support = {d};
  s.probabilities = {Rational(1)};
  s.seed = seed;
  return s;
}

std::uint64_t sum_counts(const GridHistogram& h) {
  std::uint64_t s = 0;
  for (const auto& [key, c] : h.counts) s += c;
  return s;
}

}  // namespace

TEST_CASE("point-mass Bernoulli measure samples the origin") {
  const auto pts = sample_self_affine(carpet_F(), point_spec({0, 0}, 1), 1000, 10);
  REQUIRE(pts.size() == 1000);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK(pts.xs[i] == 0);
    CHECK(pts.ys[i] == 0);
  }
  const auto corner = sample_self_affine(carpet_F(), point_spec({2, 0}, 1), 10, 5);
  // x = 0.2222...2 in base 3 truncated at five digits
  CHECK(corner.point(0).x == Rational(242, 243));
  CHECK(corner.point(0).y == 0);
}

TEST_CASE("spec validation") {
  BernoulliSpec s = BernoulliSpec::uniform(carpet_F(), 0);
  CHECK_NOTHROW(s.validate(carpet_F()));
  s.support[0] = {1, 1};
  CHECK_THROWS_AS(s.validate(carpet_F()), std::invalid_argument);
  BernoulliSpec t = point_spec({0, 0}, 0);
  t.probabilities[0] = Rational(1, 2);
  CHECK_THROWS_AS(t.validate(carpet_F()), std::invalid_argument);
}

TEST_CASE("uniform depth-3 histogram on the full 4x2 carpet") {
  const std::size_t N = 100000;
  const auto pts = sample_self_affine(Carpet::full(4, 2), BernoulliSpec::uniform(Carpet::full(4, 2), 7), N, 12);
  const auto h = histogram(pts, 2, 3);
  CHECK(h.total == N);
  CHECK(h.counts.size() == 64);
  const double mean = static_cast<double>(N) / 64, sd = std::sqrt(mean * (1 - 1.0 / 64));
  for (const auto& [key, c] : h.counts) CHECK(std::abs(static_cast<double>(c) - mean) <= 4 * sd);
}

TEST_CASE("property: truncated samples stay inside their digit cells") {
  std::mt19937_64 rng(71);
  const Carpet F = carpet_F();
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t depth = 1 + rng() % 20;
    const auto pts = sample_self_affine(F, BernoulliSpec::uniform(F, rng()), 200, depth);
    const std::uint64_t dx = static_cast<std::uint64_t>(std::pow(3.0, static_cast<double>(depth)) + 0.5);
    const std::uint64_t dy = std::uint64_t{1} << depth;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      CHECK(pts.xs[i] < dx);
      CHECK(pts.ys[i] < dy);
      // Digit by digit the pair is a carpet digit.
      std::uint64_t x = pts.xs[i], y = pts.ys[i];
      for (std::size_t p = 0; p < depth; ++p) {
        CHECK(F.contains(static_cast<int>(x % 3), static_cast<int>(y % 2)));
        x /= 3;
        y /= 2;
      }
    }
  }
}

TEST_CASE("sampling does not depend on the worker count") {
  const Carpet F = carpet_F();
  const auto spec = BernoulliSpec::uniform(F, 99);
  const auto one = sample_self_affine(F, spec, 3 * kSampleChunk + 17, 12, 1);
  const auto four = sample_self_affine(F, spec, 3 * kSampleChunk + 17, 12, 4);
  CHECK(one.xs == four.xs);
  CHECK(one.ys == four.ys);
}

TEST_CASE("fiber samplers") {
  const Carpet F = carpet_F();
  const auto spec = BernoulliSpec::uniform(F, 3);
  const auto cantor = conditional_fiber_sampler(F, spec, SymbolSequence::constant(2, 0)).sample(20000, 12, 5);
  std::size_t first_two = 0;
  for (auto x : cantor) {
    std::uint64_t v = x;
    bool ok = true;
    for (int p = 0; p < 12; ++p) {
      ok = ok && (v % 3 != 1);
      v /= 3;
    }
    CHECK(ok);
    if (x >= 2 * 177147u) ++first_two;
  }
  // Row 0 has digits {0, 2} with equal weight.
  CHECK(std::abs(static_cast<double>(first_two) / 20000 - 0.5) <= 0.02);
  const auto h = histogram_1d(cantor, 3, 12, 3, 6);
  const auto est = entropy_dim_estimate(h, 1, 3);
  CHECK(est.slope == doctest::Approx(std::log(2.0) / std::log(3.0)).epsilon(0.05));

  const auto point = conditional_fiber_sampler(F, spec, SymbolSequence::constant(2, 1)).sample(100, 8, 5);
  for (auto x : point) CHECK(x == 0);

  BernoulliSpec row0;
  row0.support = {{0, 0}, {2, 0}};
  row0.probabilities = {Rational(1, 2), Rational(1, 2)};
  const auto missing = conditional_fiber_sampler(F, row0, SymbolSequence::constant(2, 1));
  CHECK_THROWS_AS(missing.sample(10, 4, 1), std::domain_error);
}

TEST_CASE("histograms conserve counts") {
  const Carpet F = carpet_F();
  const auto pts = sample_self_affine(F, BernoulliSpec::uniform(F, 11), 50000, 16);
  const auto fine = histogram(pts, 2, 9);
  CHECK(sum_counts(fine) == 50000);
  for (std::size_t k = 0; k <= 9; ++k) {
    const auto c = fine.coarsen(k);
    CHECK(c.total == 50000);
    CHECK(sum_counts(c) == 50000);
    CHECK(c.counts.size() <= fine.counts.size());
  }
  CHECK(fine.coarsen(0).entropy() == 0.0);
  std::uint64_t rows = 0;
  for (const auto& [i, j, c] : fine.rows()) rows += c;
  CHECK(rows == 50000);
  CHECK(GridHistogram::unpack(GridHistogram::pack(1234, 77)) == std::pair<std::int64_t, std::int64_t>{1234, 77});
}

TEST_CASE("entropy dimension estimates") {
  const Carpet full = Carpet::full(4, 2);
  const std::size_t N = 1 << 20;
  const auto uni = sample_self_affine(full, BernoulliSpec::uniform(full, 13), N, 12);
  const auto est = entropy_dim_estimate(histogram(uni, 2, 8), 2, 7);
  CHECK(est.slope == doctest::Approx(2.0).epsilon(0.02));
  CHECK(est.entropies.size() == 6);

  const auto pm = sample_self_affine(full, point_spec({3, 1}, 1), 4096, 10);
  CHECK(entropy_dim_estimate(histogram(pm, 2, 4), 1, 4).slope == doctest::Approx(0.0));

  // The window must fit the sample size.
  CHECK_THROWS_AS(entropy_dim_estimate(histogram(pm, 2, 5), 1, 5), std::invalid_argument);
  CHECK_THROWS_AS(entropy_dim_estimate(histogram(pm, 2, 5), 1, 2), std::invalid_argument);
}

TEST_CASE("restricted entropy check") {
  const Carpet full = Carpet::full(4, 2);
  const auto uni = sample_self_affine(full, BernoulliSpec::uniform(full, 17), 1 << 20, 12);
  const auto h = histogram(uni, 2, 6);
  const auto r = restricted_entropy_check(h, 1.0 / 8, 0.1);
  CHECK(r.pass);
  CHECK(r.radius_cells == 8);
  CHECK(r.sup_ball_mass == doctest::Approx(289.0 / 4096).epsilon(0.05));
  CHECK(r.lhs <= std::log(4096.0) + 1e-9);

  const auto pm = sample_self_affine(full, point_spec({1, 1}, 1), 1000, 10);
  CHECK_THROWS_AS(restricted_entropy_check(histogram(pm, 2, 6), 1.0 / 8, 0.1), PreconditionViolated);

  const Carpet F = carpet_F();
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = sample_self_affine(F, BernoulliSpec::uniform(F, seed), 1 << 18, 16);
    CHECK(restricted_entropy_check(histogram(f, 2, 6), 1.0 / 8, 0.5).pass);
  }
}

TEST_CASE("singularity observations") {
  const Carpet F = carpet_F();
  const Carpet E = Carpet::make(5, 3, {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}, {0, 2}, {1, 2}, {2, 2}, {3, 2}, {4, 2}, {1, 1}});
  const AffinePlaneMap id;
  // The origin against the fixed point (1/4, 1/2) of digit (1, 1).
  const auto far = singularity_experiment(F, point_spec({0, 0}, 1), id, E, point_spec({1, 1}, 2), 2, 6, 5000, 10);
  for (const auto& p : far.curve) CHECK(p.tv == doctest::Approx(1.0));

  const auto same = singularity_experiment(F, BernoulliSpec::uniform(F, 5), id, F, BernoulliSpec::uniform(F, 5), 1,
                                           6, 100000, 16);
  REQUIRE(same.curve.size() == 6);
  for (const auto& p : same.curve) CHECK(p.tv <= 3 * p.noise_scale + 0.01);
}

TEST_CASE("density of visits") {
  const auto even = density_of_visits([](std::uint64_t k) { return k % 2 == 0; }, 1000);
  CHECK(even.full == doctest::Approx(0.5));
  CHECK(even.last_half == doctest::Approx(0.5));
  const auto early = density_of_visits([](std::uint64_t k) { return k < 500; }, 1000);
  CHECK(early.lower == 0.0);
  CHECK(early.upper == doctest::Approx(0.5));
  CHECK_THROWS_AS(density_of_visits([](std::uint64_t) { return true; }, 0), std::invalid_argument);

  const auto angle = theta_of(3, 2);
  const RotationPoint t0 = RotationPoint::rational(Rational(1, 3));
  const std::uint64_t N = 10000;
  CHECK(visited_closure_measure(t0, angle, [](std::uint64_t) { return true; }, N) == 1.0);
  // Visits with coding symbol 1 fill [1 - theta, 1).
  const auto code = rotation_code_prefix(t0, angle, N);
  const auto ones = [&code](std::uint64_t k) { return code[k] == 1; };
  const double d = density_of_visits(ones, N).full;
  CHECK(d == doctest::Approx(angle.approx()).epsilon(0.01));
  const double closure = visited_closure_measure(t0, angle, ones, N);
  CHECK(closure >= d - 0.05);
  CHECK(closure <= d + 0.05);
}
