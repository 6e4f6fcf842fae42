#pragma once

// Slow reference implementations used only by the tests.

#include <cstdint>
#include <random>
#include <set>
#include <utility>
#include <vector>

#include "carpetslice/slicer.hpp"

namespace oracle {

using carpetslice::Integer;
using carpetslice::Rational;

// An interval end: value and whether the end is excluded.
struct End {
  Rational v;
  bool open;
};

inline bool nonempty(const End& lo, const End& hi) { return lo.v < hi.v || (lo.v == hi.v && !lo.open && !hi.open); }

inline End max_lo(const End& a, const End& b) {
  if (a.v != b.v) return a.v > b.v ? a : b;
  return {a.v, a.open || b.open};
}
inline End min_hi(const End& a, const End& b) {
  if (a.v != b.v) return a.v < b.v ? a : b;
  return {a.v, a.open || b.open};
}

// Does y = y0 + s (x - x0) pass through [xl, xr] x [yl, yr] (ends open as flagged)?
// Solves for the x-interval the line spends inside the y-range.
inline bool line_meets_box(const Rational& s, const Rational& x0, const Rational& y0, End xl, End xr, End yl,
                           End yr) {
  if (!nonempty(xl, xr) || !nonempty(yl, yr)) return false;
  if (s == 0) {
    const bool in_y = (y0 > yl.v || (y0 == yl.v && !yl.open)) && (y0 < yr.v || (y0 == yr.v && !yr.open));
    return in_y;
  }
  End a{x0 + (yl.v - y0) / s, yl.open};
  End b{x0 + (yr.v - y0) / s, yr.open};
  if (s < 0) std::swap(a, b);
  return nonempty(max_lo(xl, a), min_hi(xr, b));
}

struct LeafRect {
  Rational x0, x1, y0, y1;
};

// All leaves of a cover tree, by plain enumeration.
inline std::vector<LeafRect> all_leaves(const carpetslice::CoverTree& t) {
  struct N {
    Integer X, Y, A, B;
  };
  std::vector<N> cur{{0, 0, 1, 1}};
  for (const auto& lv : t.levels) {
    std::vector<N> next;
    for (const auto& n : cur) {
      for (const auto& d : lv.digits) next.push_back({n.X * lv.xm + d.x, n.Y * lv.ym + d.y, n.A * lv.xm, n.B * lv.ym});
    }
    cur = std::move(next);
  }
  std::vector<LeafRect> out;
  for (const auto& n : cur) {
    out.push_back({Rational(n.X, n.A), Rational(n.X + 1, n.A), Rational(n.Y, n.B), Rational(n.Y + 1, n.B)});
  }
  return out;
}

// Cells of the tree's partition meeting line cap cover, checking every (leaf, cell) pair.
inline std::set<std::pair<std::int64_t, std::int64_t>> line_cells(const carpetslice::CoverTree& t, const Rational& s,
                                                                  const Rational& x0, const Rational& y0) {
  const auto Px = t.px.convert_to<std::int64_t>(), Py = t.py.convert_to<std::int64_t>();
  std::set<std::pair<std::int64_t, std::int64_t>> out;
  for (const auto& r : all_leaves(t)) {
    for (std::int64_t i = 0; i < Px; ++i) {
      const Rational cl(i, Px), cr(i + 1, Px);
      if (cr < r.x0 || cl > r.x1) continue;
      const End xl = max_lo({r.x0, false}, {cl, false});
      const End xr = min_hi({r.x1, false}, {cr, i + 1 < Px});
      for (std::int64_t j = 0; j < Py; ++j) {
        const Rational bl(j, Py), bu(j + 1, Py);
        if (bu < r.y0 || bl > r.y1) continue;
        const End yl = max_lo({r.y0, false}, {bl, false});
        const End yr = min_hi({r.y1, false}, {bu, j + 1 < Py});
        if (line_meets_box(s, x0, y0, xl, xr, yl, yr)) out.insert({i, j});
      }
    }
  }
  return out;
}

// Random carpet with m > n >= 2 and at least two distinct columns and rows.
inline carpetslice::Carpet random_carpet(std::mt19937_64& rng, std::int64_t max_m = 5) {
  for (;;) {
    const std::int64_t n = 2 + static_cast<std::int64_t>(rng() % 2);
    const std::int64_t m = n + 1 + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(max_m - n));
    std::vector<carpetslice::DigitPair> digits;
    for (int i = 0; i < m; ++i) {
      for (int j = 0; j < n; ++j) {
        if (rng() % 2) digits.push_back({i, j});
      }
    }
    try {
      return carpetslice::Carpet::make(m, n, digits);
    } catch (const std::invalid_argument&) {
    }
  }
}

inline Rational random_rational(std::mt19937_64& rng, std::int64_t lo, std::int64_t hi, std::int64_t den) {
  const std::int64_t span = (hi - lo) * den;
  return Rational(lo * den + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span + 1)), den);
}

}  // namespace oracle
