#include <cmath>
#include <random>

#include "carpetslice/dynamics.hpp"
#include "doctest.h"

using namespace carpetslice;

namespace {

RotationPoint rp(long long num, long long den) { return RotationPoint::rational(Rational(num, den)); }

// T_m^j by repeated multiplication, independent of t_map.
Rational t_pow(std::int64_t m, Rational x, std::size_t j) {
  for (std::size_t i = 0; i < j; ++i) {
    x *= m;
    x -= Rational(floor(x));
  }
  return x;
}

CodedProduct full_product(const RotationPoint& t0) {
  CodedProduct cp;
  cp.m1 = 3;
  cp.m2 = 2;
  cp.tau = coding_sequence(t0, theta_of(3, 2), 128);
  cp.gammas = {{0, 1, 2}};
  cp.lambdas = {{0, 1}};
  return cp;
}

}  // namespace

TEST_CASE("Phi_t examples") {
  const auto angle = theta_of(3, 2);
  const ExactPoint z{Rational(1, 5), Rational(7, 10)};
  CHECK(phi_t(rp(1, 10), angle, z) == ExactPoint{Rational(1, 5), Rational(2, 5)});
  CHECK(phi_t(rp(1, 2), angle, z) == ExactPoint{Rational(3, 5), Rational(2, 5)});
  for (int i = 0; i < 10; ++i) CHECK(phi_t(rp(i, 10), angle, ExactPoint{0, 0}) == ExactPoint{0, 0});
  CHECK(t_map(3, Rational(2, 3)) == 0);
}

TEST_CASE("U acts componentwise") {
  const auto angle = theta_of(3, 2);
  SkewState s;
  s.z = {0, 0};
  s.t = rp(1, 2);
  s.omega = SymbolSequence::periodic(2, {}, {0, 1});
  s.eta = SymbolSequence::periodic(3, {}, {0, 1, 2});
  const SkewState u = u_map(s, angle);
  CHECK(u.z == ExactPoint{0, 0});
  CHECK(u.t == (RotationPoint{Rational(-1, 2), 1}));
  CHECK(approx(angle, u.t) == doctest::Approx(0.5 + angle.approx() - 1).epsilon(1e-12));
  CHECK(u.omega[0] == 1);
  CHECK(u.eta[0] == 1);
  // From t below 1 - theta omega stays put.
  s.t = rp(1, 10);
  CHECK(u_map(s, angle).omega[0] == 0);
}

TEST_CASE("closed form for U_t^k") {
  const auto angle = theta_of(3, 2);
  const ExactPoint z{Rational(1, 7), Rational(1, 3)};
  const auto r0 = u_iterate_closed_form(z, rp(1, 5), angle, 0);
  CHECK(r0.equal);
  CHECK(r0.closed_form == z);
  const auto r10 = u_iterate_closed_form(z, rp(1, 5), angle, 10);
  CHECK(r10.equal);
  CHECK(r10.closed_form.x == t_pow(3, z.x, r10.r_k));
  CHECK(r10.closed_form.y == t_pow(2, z.y, 10));
  const auto r1 = u_iterate_closed_form(z, rp(1, 10), angle, 1);
  CHECK(r1.r_k == 0);
  CHECK(r1.closed_form.x == z.x);
  // Two u_map steps agree with k = 2.
  SkewState s{z, rp(1, 5)};
  s = u_map(u_map(s, angle), angle);
  CHECK(s.z == u_iterate_closed_form(z, rp(1, 5), angle, 2).closed_form);
}

TEST_CASE("property: closed form equals iteration on random rational inputs") {
  std::mt19937_64 rng(51);
  for (const auto& [m1, m2] : {std::pair{3, 2}, std::pair{5, 3}, std::pair{7, 2}}) {
    const auto angle = theta_of(m1, m2);
    for (int trial = 0; trial < 40; ++trial) {
      const auto den = static_cast<long long>(2 + rng() % 200);
      const ExactPoint z{Rational(static_cast<long long>(rng() % static_cast<std::uint64_t>(den)), den),
                         Rational(static_cast<long long>(rng() % static_cast<std::uint64_t>(den)), den)};
      const RotationPoint t = rp(static_cast<long long>(rng() % 1000), 1000);
      const auto rep = u_iterate_closed_form(z, t, angle, rng() % 31);
      CHECK(rep.equal);
      CHECK(rep.closed_form == rep.iterated);
    }
  }
}

TEST_CASE("empirical measures and magnification") {
  const PairWord a{{0, 0}, {1, 0}}, b{{0, 0}, {1, 1}}, c{{0, 0}, {0, 1}}, d{{1, 1}, {0, 0}};
  const auto mu = EmpiricalMeasure::uniform({a, b, c, d});
  CHECK(mu.total() == 1);
  CHECK(mu.mass({{0, 0}}) == Rational(3, 4));
  const auto [m1, x1] = magnify(mu, a);
  CHECK(x1 == PairWord{{1, 0}});
  CHECK(m1.depth() == 1);
  CHECK(m1.total() == 1);
  for (const auto& w : {PairWord{{1, 0}}, PairWord{{1, 1}}, PairWord{{0, 1}}}) CHECK(m1.mass(w) == Rational(1, 3));

  const auto point = EmpiricalMeasure::uniform({d});
  const auto [pm, px] = magnify(point, d);
  CHECK(pm.atoms().size() == 1);
  CHECK(pm.mass({{0, 0}}) == 1);
  CHECK(px == PairWord{{0, 0}});

  const auto skew = EmpiricalMeasure::from_weights(
      {{a, Rational(1, 2)}, {b, Rational(1, 4)}, {c, Rational(1, 4)}});
  const auto cond = skew.conditioned({0, 0});
  CHECK(cond.mass({{1, 0}}) == Rational(1, 2));
  CHECK(cond.mass({{1, 1}}) == Rational(1, 4));
  CHECK(cond.mass({{0, 1}}) == Rational(1, 4));

  CHECK_THROWS_AS(magnify(mu, PairWord{{2, 0}, {0, 0}}), std::domain_error);
  CHECK_THROWS_AS(magnify(mu, PairWord{}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure::from_weights({{a, Rational(1, 2)}}), std::invalid_argument);
  CHECK_THROWS_AS(EmpiricalMeasure::from_weights({{a, Rational(1, 2)}, {PairWord{{0, 0}}, Rational(1, 2)}}),
                  std::invalid_argument);
}

TEST_CASE("property: conditioning conserves unit mass") {
  std::mt19937_64 rng(52);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<std::pair<PairWord, Rational>> atoms;
    std::set<PairWord> seen;
    while (atoms.size() < 6) {
      PairWord w;
      for (int i = 0; i < 4; ++i) w.push_back({static_cast<int>(rng() % 2), static_cast<int>(rng() % 2)});
      if (seen.insert(w).second) atoms.push_back({w, Rational(static_cast<long long>(1 + rng() % 5))});
    }
    Rational total = 0;
    for (const auto& [w, p] : atoms) total += p;
    for (auto& [w, p] : atoms) p /= total;
    EmpiricalMeasure mu = EmpiricalMeasure::from_weights(atoms);
    PairWord x = atoms[rng() % atoms.size()].first;
    while (!x.empty()) {
      CHECK(mu.total() == 1);
      std::tie(mu, x) = magnify(mu, x);
    }
    CHECK(mu.total() == 1);
  }
}

TEST_CASE("slice preimages") {
  const CodedProduct cp = full_product(rp(0, 1));
  CHECK(slice_preimage(cp, Line::slope_intercept(1, 5), 4).empty());
  // Full fibers: the diagonal meets every image rectangle through which it passes;
  // compare with the adaptive partition count up to the cell bound factor.
  const auto words = slice_preimage(cp, Line::slope_intercept(1, 0), 4);
  const CoverCount grid = count_line_cells(Target{cp}, Line::slope_intercept(1, 0), 4, PartitionKind::BaseGrid);
  CHECK(words.size() >= 1);
  CHECK(Integer(words.size()) <= grid.count_upper * 10);
  CHECK(grid.count_upper <= Integer(words.size()) * 10);

  CodedProduct single = cp;
  single.gammas = {{1}};
  single.lambdas = {{1}};
  single.tau = SymbolSequence::constant(2, 1);
  // The single point is (1/2, 1); the line y = x + 1/2 passes through it.
  for (std::size_t k = 1; k <= 6; ++k) {
    CHECK(slice_preimage(single, Line::slope_intercept(1, Rational(1, 2)), k).size() == 1);
  }
}

TEST_CASE("CP chains on the full-square diagonal") {
  const auto angle = theta_of(3, 2);
  const RotationPoint t0 = rp(0, 1);
  const CodedProduct cp = full_product(t0);
  const auto E = slice_preimage(cp, Line::slope_intercept(1, 0), 10);
  const CpChain ch = build_cp_chain(E, 10, t0, angle, cp.omega, cp.eta);
  CHECK(ch.q_k.total() == 1);
  CHECK(ch.p_k.total() == 1);
  CHECK(ch.mu_k.total() == 1);
  CHECK(ch.q_k.atoms.size() == ch.q_k.support_size * 10);
  CHECK(std::abs(entropy_H(ch.q_k, 2) - 1.0) <= 0.15);
  CHECK(adaptedness_residual(ch.q_k, 2) == 0);
  CHECK(adaptedness_residual(ch.p_k, 3) == 0);
  CHECK(adaptedness_residual(ch.q_k, 0) == 0);
  CHECK(coding_consistent(ch.q_k, angle, 16));
  // t-marginal: the Cesaro average puts the atoms at R_theta^i(t0).
  for (const auto& a : ch.q_k.atoms) {
    RotationPoint t = t0;
    for (std::size_t i = 0; i < a.step; ++i) t = rotate(angle, t);
    CHECK(a.state.t == t);
  }
}

TEST_CASE("singleton products give zero entropy") {
  const auto angle = theta_of(3, 2);
  CodedProduct cp = full_product(rp(0, 1));
  cp.gammas = {{1}};
  cp.lambdas = {{1}};
  const auto E = slice_preimage(cp, Line::through(Slope::rational(1), Rational(1, 2), 1), 8);
  REQUIRE(E.size() == 1);
  const CpChain ch = build_cp_chain(E, 8, rp(0, 1), angle, cp.omega, cp.eta);
  CHECK(entropy_H(ch.q_k, 2) == 0.0);
}

TEST_CASE("entropy H examples") {
  // A single atom whose measure is uniform over the m2 first symbols.
  const auto mu = EmpiricalMeasure::uniform({PairWord{{0, 0}}, PairWord{{0, 1}}});
  ChainDistribution d;
  d.atoms.push_back({MicroState{mu, PairWord{{0, 1}}}, 1, 0});
  CHECK(entropy_H(d, 2) == doctest::Approx(1.0).epsilon(1e-14));
  ChainDistribution pm;
  pm.atoms.push_back({MicroState{EmpiricalMeasure::uniform({PairWord{{0, 1}}}), PairWord{{0, 1}}}, 1, 0});
  CHECK(entropy_H(pm, 2) == 0.0);
  ChainDistribution bad;
  bad.atoms.push_back({MicroState{mu, PairWord{{1, 1}}}, 1, 0});
  CHECK_THROWS_AS(entropy_H(bad, 2), std::domain_error);
}

TEST_CASE("adaptedness detects a point that ignores its measure") {
  const auto mu = EmpiricalMeasure::uniform({PairWord{{0, 0}}, PairWord{{0, 1}}});
  ChainDistribution d;
  d.atoms.push_back({MicroState{mu, PairWord{{0, 0}}}, 1, 0});
  CHECK(adaptedness_residual(d, 1) == Rational(1, 2));
  CHECK(adaptedness_residual(d, 0) == 0);
  ChainDistribution ok;
  ok.atoms.push_back({MicroState{mu, PairWord{{0, 0}}}, Rational(1, 2), 0});
  ok.atoms.push_back({MicroState{mu, PairWord{{0, 1}}}, Rational(1, 2), 0});
  CHECK(adaptedness_residual(ok, 1) == 0);
}

TEST_CASE("discrepancy of the rotation orbit shrinks") {
  const auto angle = theta_of(3, 2);
  const double d100 = orbit_star_discrepancy(rp(0, 1), angle, 100);
  const double d10k = orbit_star_discrepancy(rp(0, 1), angle, 10000);
  CHECK(d10k < d100);
  CHECK(d10k <= 0.05);
  CHECK(orbit_star_discrepancy(rp(0, 1), angle, 1) == doctest::Approx(1.0));
}

TEST_CASE("Z-orbit genericity") {
  const auto angle = theta_of(3, 2);
  const std::vector<Rational> half{Rational(1, 2), Rational(1, 2)};
  const auto omega = SymbolSequence::bernoulli(half, 61), eta = SymbolSequence::bernoulli(half, 62);
  const auto g = z_orbit_genericity(rp(1, 7), angle, omega, eta, half, half, 100000);
  CHECK(g.max_deviation <= 0.02);
  CHECK(g.t_deviation <= 2 * g.t_discrepancy + 1e-12);
  const auto bad = z_orbit_genericity(rp(1, 7), angle, SymbolSequence::constant(2, 0), eta, half, half, 10000);
  CHECK(bad.omega_deviation == doctest::Approx(0.5));
}

TEST_CASE("property: pi images meet at most 2 (m1 + 2) grid cells") {
  std::mt19937_64 rng(53);
  const auto angle = theta_of(3, 2);
  for (int trial = 0; trial < 5; ++trial) {
    CodedProduct cp = full_product(rp(static_cast<long long>(rng() % 1000), 1000));
    cp.tau = coding_sequence(rp(static_cast<long long>(rng() % 1000), 1000), angle, 64);
    cp.gammas = {{0, 2}, {1}};
    cp.omega = SymbolSequence::bernoulli({Rational(1, 2), Rational(1, 2)}, rng());
    for (std::size_t k = 1; k <= 6; ++k) {
      for (const auto& w : coded_product_cylinders(cp, k)) CHECK(pi_image_grid_cells(cp, w) <= 10);
    }
  }
}
