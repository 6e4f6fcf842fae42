#include <cmath>
#include <random>

#include "carpetslice/carpets.hpp"
#include "carpetslice/errors.hpp"
#include "carpetslice/rotation.hpp"
#include "doctest.h"
#include "oracles.hpp"

using namespace carpetslice;

namespace {

Carpet carpet_F() { return Carpet::make(3, 2, {{0, 0}, {0, 1}, {2, 0}}); }
Carpet carpet_E() {
  std::vector<DigitPair> d{{1, 1}};
  for (int i = 0; i < 5; ++i) d.push_back({i, 0}), d.push_back({i, 2});
  return Carpet::make(5, 3, d);
}

double lg(double a, double b) { return std::log(a) / std::log(b); }

}  // namespace

TEST_CASE("rational parsing and printing") {
  CHECK(parse_rational("2/3") == Rational(2, 3));
  CHECK(parse_rational(" -4/6 ") == Rational(-2, 3));
  CHECK(to_string(Rational(4, 6)) == "2/3");
  CHECK(to_string(Rational(5)) == "5");
  CHECK_THROWS_AS(parse_rational("1/0"), std::invalid_argument);
  CHECK_THROWS_AS(parse_rational("0.5"), std::invalid_argument);
  CHECK(floor(Rational(-1, 2)) == -1);
  CHECK(ceil(Rational(-1, 2)) == 0);
  CHECK(frac(Rational(-1, 3)) == Rational(2, 3));
}

TEST_CASE("multiplicative dependence") {
  CHECK(rational_log_ratio(8, 4) == Rational(3, 2));
  CHECK(rational_log_ratio(1, 7) == Rational(0));
  CHECK_FALSE(rational_log_ratio(3, 2).has_value());
  CHECK_FALSE(rational_log_ratio(12, 6).has_value());
  CHECK(primitive_root(64) == std::pair<std::int64_t, int>{2, 6});
  CHECK(primitive_root(36) == std::pair<std::int64_t, int>{6, 2});
}

TEST_CASE("log expressions are canonical and certified") {
  const LogExpr a = LogExpr::log_ratio(5, 5);
  CHECK(a == LogExpr(1));
  CHECK(LogExpr::log_ratio(9, 3) == LogExpr(2));
  CHECK(LogExpr::log_ratio(2, 3) + LogExpr::log_ratio(3, 3) == LogExpr(1) + LogExpr::log_ratio(2, 3));
  // log 6 / log 3 = 1 + log 2 / log 3
  CHECK(LogExpr::log_ratio(6, 3) == LogExpr(1) + LogExpr::log_ratio(2, 3));
  const Enclosure e = LogExpr::log_ratio(2, 3).enclosure(128);
  CHECK(e.width() < Rational(1, ipow(10, 30)));
  CHECK(to_double(e.lo) == doctest::Approx(lg(2, 3)).epsilon(1e-15));
  CHECK(sign(LogExpr::log_ratio(2, 3) - Rational(63, 100)) > 0);
  CHECK(compare(LogExpr::log_ratio(5, 3), LogExpr::log_ratio(3, 2)) < 0);
  CHECK(sign(LogExpr::log_ratio(4, 2) - LogExpr(2)) == 0);
  CHECK(LogExpr::log_ratio(2, 3).to_string() == "log(2)/log(3)");
}

TEST_CASE("certified enclosures") {
  const Enclosure l = log_enclosure(Integer(10), 200);
  CHECK(l.lo <= l.hi);
  CHECK(to_double(l.lo) == doctest::Approx(std::log(10.0)).epsilon(1e-15));
  const Enclosure p = pow_enclosure(Integer(2), Rational(1, 2), 128);
  CHECK(p.lo * p.lo <= 2);
  CHECK(p.hi * p.hi >= 2);
  CHECK(certainly_less(Enclosure::exact(1), p));
  CHECK_FALSE(certainly_less(p, p));
}

TEST_CASE("fibers") {
  const auto full = fibers(Carpet::full(3, 2));
  for (const auto& f : full) CHECK(f == std::vector<int>{0, 1, 2});
  const auto fF = fibers(carpet_F());
  CHECK(fF[0] == std::vector<int>{0, 2});
  CHECK(fF[1] == std::vector<int>{0});
  const auto fE = fibers(carpet_E());
  CHECK(fE[0] == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(fE[1] == std::vector<int>{1});
  CHECK(fE[2] == std::vector<int>{0, 1, 2, 3, 4});
  CHECK_THROWS_AS(Carpet::make(3, 2, {{0, 0}, {0, 1}, {3, 0}}), std::invalid_argument);
  CHECK_THROWS_AS(Carpet::make(3, 2, {{1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(Carpet::make(2, 3, {{0, 0}, {1, 1}}), std::invalid_argument);
}

TEST_CASE("dimension reports") {
  const auto full = dims(Carpet::full(4, 3));
  for (const DimValue* v : {&full.dim_box, &full.dim_hausdorff, &full.dim_p2, &full.dim_star}) {
    REQUIRE(v->exact.has_value());
    CHECK(*v->exact == LogExpr(2) - (v == &full.dim_p2 ? LogExpr(1) : LogExpr(0)));
  }
  const auto e = dims(carpet_E());
  REQUIRE(e.dim_star.exact.has_value());
  CHECK(*e.dim_star.exact == LogExpr(2));
  CHECK(e.dim_star.enclosure.is_exact());

  const auto f = dims(carpet_F());
  REQUIRE(f.dim_star.exact.has_value());
  CHECK(*f.dim_star.exact == LogExpr(1) + LogExpr::log_ratio(2, 3));
  CHECK(f.dim_star.enclosure.width() <= Rational(1, ipow(10, 12)));
  CHECK(*f.dim_box.exact == LogExpr(1) + LogExpr::log_ratio(3, 3) - LogExpr::log_ratio(2, 3));
  const double mcmullen = lg(std::pow(2.0, lg(2, 3)) + 1.0, 2);
  CHECK(f.dim_hausdorff.approx() == doctest::Approx(mcmullen).epsilon(1e-12));
  CHECK(f.dim_hausdorff.enclosure.contains(Rational(f.dim_hausdorff.enclosure.lo)));
}

TEST_CASE("box dimension matches the approximate-square count slope") {
  const Carpet F = carpet_F();
  // Exact counts at k = 10 and 20 give the slope over base n = 2.
  const double n10 = std::log(approximate_square_count(F, 10).convert_to<double>());
  const double n20 = std::log(approximate_square_count(F, 20).convert_to<double>());
  CHECK((n20 - n10) / (10 * std::log(2.0)) == doctest::Approx(2 - lg(2, 3)).epsilon(0.02));
  CHECK(approximate_square_x_depth(3, 2, 10) == 6);
  CHECK(approximate_square_count(F, 0) == 1);
}

TEST_CASE("property: dimension ordering and uniform-fiber collapse on random carpets") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 1000; ++trial) {
    const Carpet c = oracle::random_carpet(rng);
    const auto r = dims(c, 96);
    CHECK(r.dim_hausdorff.enclosure.lo <= r.dim_box.enclosure.hi);
    CHECK(r.dim_box.enclosure.lo <= r.dim_star.enclosure.hi);
    CHECK(r.dim_star.enclosure.lo <= 2);
    const BoundResult b = bound_slice_star(c);
    CHECK(b.value == clamp_nonneg(*r.dim_star.exact - LogExpr(1)));
    if (r.uniform_fibers) {
      REQUIRE(r.dim_hausdorff.exact.has_value());
      CHECK(*r.dim_hausdorff.exact == *r.dim_box.exact);
    }
  }
}

TEST_CASE("incommensurability") {
  const auto v = is_incommensurable(carpet_F(), carpet_E());
  CHECK_FALSE(v.incommensurable);
  REQUIRE(v.witness_values.has_value());
  CHECK(v.witness_values->first == 3);
  CHECK(v.witness_values->second == 3);
  const Carpet G = Carpet::make(7, 5, {{0, 0}, {1, 1}, {3, 4}});
  CHECK(is_incommensurable(carpet_F(), G).incommensurable);
  CHECK_FALSE(is_incommensurable(carpet_F(), carpet_F()).incommensurable);
  std::mt19937_64 rng(42);
  for (int i = 0; i < 100; ++i) {
    const Carpet a = oracle::random_carpet(rng), b = oracle::random_carpet(rng);
    CHECK(is_incommensurable(a, b).incommensurable == is_incommensurable(b, a).incommensurable);
  }
}

TEST_CASE("slice and intersection bounds") {
  CHECK(bound_slice_star(Carpet::full(3, 2)).value == LogExpr(1));
  CHECK(bound_slice_star(carpet_F()).value == LogExpr::log_ratio(2, 3));
  const BoundResult neg = bound_slice_star(Carpet::make(5, 4, {{0, 0}, {1, 1}}));
  CHECK(neg.value == LogExpr(0));
  const BoundResult dep = bound_slice_star(Carpet::make(4, 2, {{0, 0}, {1, 1}}));
  CHECK_FALSE(dep.hypothesis_ok);
  CHECK_FALSE(dep.warning.empty());

  CHECK(bound_intersection(Carpet::full(3, 2), Carpet::full(7, 5), Orientation::Diagonal).value == LogExpr(2));
  CHECK(bound_intersection(Carpet::full(3, 2), Carpet::full(7, 5), Orientation::Antidiagonal).value == LogExpr(2));
  // Singleton fibers: both antidiagonal terms are at most 0.
  const Carpet thin1 = Carpet::make(7, 5, {{0, 0}, {1, 1}});
  const Carpet thin2 = Carpet::make(3, 2, {{0, 0}, {1, 1}});
  CHECK(bound_intersection(thin1, thin2, Orientation::Antidiagonal).value == LogExpr(0));
  CHECK(bound_intersection(thin1, thin2, Orientation::Diagonal).value == LogExpr::log_ratio(2, 5));
}

TEST_CASE("product slice bounds") {
  CHECK(bound_product_slice({{0, 1, 2}}, {{0, 1}}, 3, 2) == LogExpr(1));
  CHECK(bound_product_slice({{0, 2}, {0}}, {{0, 1}}, 3, 2) == LogExpr::log_ratio(2, 3));
  RowWeights w{{Rational(1, 2), Rational(1, 2)}, {1}};
  CHECK(bound_product_slice({{0, 2}, {0}}, {{0}}, 3, 2, w) == LogExpr(0));
  RowWeights w2{{Rational(1, 2), Rational(1, 2)}, {1}};
  // (1/2) log 2/log 3 + 1 - 1
  CHECK(bound_product_slice({{0, 2}, {0}}, {{0, 1}}, 3, 2, w2) == LogExpr::log_ratio(2, 3) * Rational(1, 2));
}

TEST_CASE("affine maps") {
  const Rect r{0, Rational(1, 3), 0, Rational(1, 2)};
  CHECK(AffinePlaneMap::swap().apply(r) == Rect{0, Rational(1, 2), 0, Rational(1, 3)});
  const AffinePlaneMap g{Orientation::Diagonal, -1, 2, 1, 0};
  CHECK(g.apply(r) == Rect{Rational(2, 3), 1, 0, 1});
  CHECK_THROWS_AS((AffinePlaneMap{Orientation::Diagonal, 0, 1, 0, 0}).validate(), std::invalid_argument);
}

TEST_CASE("miniset covers") {
  const Carpet F = carpet_F();
  const DigitPoint origin{SymbolSequence::constant(3, 0), SymbolSequence::constant(2, 0)};
  // k = 0: the cover of F itself, which stays inside [0,1]^2.
  const RectCover c0 = miniset_cover(F, origin, 0, 2);
  CHECK(c0.exact_center);
  for (const auto& r : c0.rects) CHECK(Rect{0, 1, 0, 1}.contains(r));
  CHECK(c0.rects.size() == approximate_square_count(F, 4));
  // Full square: the window [-1,1]^2 around an interior point is covered.
  const DigitPoint mid{SymbolSequence::periodic(3, {}, {1}), SymbolSequence::periodic(2, {}, {1, 0})};
  const RectCover cf = miniset_cover(Carpet::full(3, 2), mid, 2, 1);
  CHECK(rect_union_covers(Rect{-1, 1, -1, 1}, cf.rects));
}

TEST_CASE("property: miniset covers refine as the window deepens") {
  const Carpet F = carpet_F();
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 6; ++trial) {
    const DigitPoint x{SymbolSequence::periodic(3, {}, {static_cast<int>(rng() % 2) * 2, 0}),
                       SymbolSequence::periodic(2, {}, {static_cast<int>(rng() % 2), 0})};
    const std::size_t k = 1 + rng() % 2;
    for (std::size_t w = 2; w <= 3; ++w) {
      const RectCover fine = miniset_cover(F, x, k, w);
      const RectCover coarse = miniset_cover(F, x, k, w - 1);
      const auto grown = inflate(coarse.rects, coarse.cell_width, coarse.cell_height);
      for (const auto& r : fine.rects) CHECK(rect_union_covers(r, grown));
    }
  }
}

TEST_CASE("(omega, s) set covers") {
  const Carpet F = carpet_F();
  // s = 0, z = 0, omega = 0: the Cantor set {0,2} times P2(F) = [0,1].
  const RectCover c = omega_s_set_cover(SymbolSequence::constant(2, 0), Enclosure::exact(1), F, 0, 0, 3);
  CHECK(c.rects.size() == 8);
  for (const auto& r : c.rects) {
    CHECK(r.y0 == 0);
    CHECK(r.y1 == 1);
    CHECK(r.width() == Rational(1, 27));
  }
  // A full fiber stretched by n^s covers a full rectangle.
  const Carpet full = Carpet::full(3, 2);
  const Rational ns = n_pow_frac_k_log(3, 2, 1);
  CHECK(ns == Rational(3, 2));
  const RectCover s = omega_s_set_cover(SymbolSequence::constant(2, 0), Enclosure::exact(ns), full, 0, 0, 2);
  CHECK(rect_union_covers(Rect{0, 1, 0, Rational(3, 2)}, s.rects));
}

TEST_CASE("digit set covers merge adjacent intervals") {
  const std::vector<int> all{0, 1, 2};
  const auto iv = digit_set_cover(3, 3, [&](std::size_t) -> const std::vector<int>& { return all; });
  REQUIRE(iv.size() == 1);
  CHECK(iv[0] == std::pair<Rational, Rational>{0, 1});
}
