#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "carpetslice/rational.hpp"

namespace carpetslice {

/// Deterministic, indexable, one-sided infinite sequence over [0, alphabet_size).
/// Values are cheap to copy; shifting shares the underlying generator.
class SymbolSequence {
 public:
  enum class Kind { Periodic, Bernoulli, Generated };

  static SymbolSequence constant(int alphabet_size, int symbol);
  /// prefix followed by period repeated forever; period must be nonempty.
  static SymbolSequence periodic(int alphabet_size, std::vector<int> prefix, std::vector<int> period);
  /// i.i.d. symbols with the given probabilities; index i is a pure function of (seed, i).
  static SymbolSequence bernoulli(std::vector<Rational> probabilities, std::uint64_t seed);
  /// Arbitrary pure generator; `label` is only used for display and serialization.
  static SymbolSequence generated(int alphabet_size, std::function<int(std::uint64_t)> fn,
                                  std::string label);

  int alphabet_size() const;
  Kind kind() const;
  std::uint64_t offset() const { return offset_; }

  int at(std::uint64_t i) const;
  int operator[](std::uint64_t i) const { return at(i); }
  std::vector<int> prefix(std::size_t n) const;

  SymbolSequence shifted(std::uint64_t k) const;

  /// Periodic data with the offset folded in; nullopt for other kinds.
  struct PeriodicForm {
    std::vector<int> prefix;
    std::vector<int> period;
  };
  std::optional<PeriodicForm> periodic_form() const;
  /// Probabilities and seed of a Bernoulli sequence (offset not folded).
  const std::vector<Rational>& probabilities() const;
  std::uint64_t seed() const;
  std::string label() const;

 private:
  struct Impl;
  SymbolSequence(std::shared_ptr<const Impl> impl, std::uint64_t offset)
      : impl_(std::move(impl)), offset_(offset) {}

  std::shared_ptr<const Impl> impl_;
  std::uint64_t offset_ = 0;
};

/// Left shift by k: result[i] = seq[i + k].
inline SymbolSequence shift(const SymbolSequence& seq, std::uint64_t k) { return seq.shifted(k); }

/// Exact value of sum_{i>=1} s[i-1] * base^{-i}; requires a periodic sequence.
Rational periodic_expansion_value(const SymbolSequence& seq, std::int64_t base);

struct Cylinder {
  std::vector<int> word;
  std::size_t depth() const { return word.size(); }
};

struct DigitPair {
  int x;
  int y;
  bool operator==(const DigitPair& o) const { return x == o.x && y == o.y; }
  bool operator<(const DigitPair& o) const { return x != o.x ? x < o.x : y < o.y; }
};
using PairWord = std::vector<DigitPair>;

/// [value, value + width] with width = base^{-depth}.
struct DigitInterval {
  std::int64_t base;
  std::size_t depth;
  Rational value;
  Rational width;
  Rational lo() const { return value; }
  Rational hi() const { return value + width; }
};

/// Closed axis-parallel rectangle [x0, x1] x [y0, y1].
struct Rect {
  Rational x0, x1, y0, y1;
  bool operator==(const Rect& o) const {
    return x0 == o.x0 && x1 == o.x1 && y0 == o.y0 && y1 == o.y1;
  }
  bool contains(const Rect& o) const { return x0 <= o.x0 && o.x1 <= x1 && y0 <= o.y0 && o.y1 <= y1; }
  bool intersects(const Rect& o) const {
    return x0 <= o.x1 && o.x0 <= x1 && y0 <= o.y1 && o.y0 <= y1;
  }
  Rational width() const { return x1 - x0; }
  Rational height() const { return y1 - y0; }
};

DigitInterval pi_base_cylinder(std::int64_t m, const std::vector<int>& word);

/// The coded product X_{tau,omega,eta}: at coordinate p the allowed pairs are
/// Gamma_{omega[r]} x Lambda_{eta[p]} when tau[p] = 1 (r = number of 1s of tau
/// before p) and {1} x Lambda_{eta[p]} when tau[p] = 0.
struct CodedProduct {
  std::int64_t m1 = 3;
  std::int64_t m2 = 2;
  SymbolSequence tau = SymbolSequence::constant(2, 1);
  SymbolSequence omega = SymbolSequence::constant(1, 0);
  SymbolSequence eta = SymbolSequence::constant(1, 0);
  std::vector<std::vector<int>> gammas;   // over [m1], indexed by omega symbols
  std::vector<std::vector<int>> lambdas;  // over [m2], indexed by eta symbols

  void validate() const;
  /// Allowed pairs at coordinate p, given r = number of 1s of tau before p.
  std::vector<DigitPair> allowed(std::size_t p, std::size_t r) const;
};

/// Number of 1s among tau[0..k).
std::size_t ones_before(const SymbolSequence& tau, std::size_t k);

Integer coded_product_count(const CodedProduct& cp, std::size_t k);
std::vector<PairWord> coded_product_cylinders(const CodedProduct& cp, std::size_t k);
bool is_coded_product_word(const CodedProduct& cp, const PairWord& word);
/// Exact image rectangle; width m1^{-r_k(tau)}, height m2^{-k}.
Rect pi_coded_cylinder(const CodedProduct& cp, const PairWord& word);

/// Shannon entropy (natural log) with 0 log 0 = 0.
double cylinder_entropy(const std::vector<double>& weights);
double cylinder_entropy(const std::vector<Rational>& weights);

struct DrhoResult {
  Rational value;          // rho^{first disagreement}, 0 when equal to depth
  bool equal_to_depth;
  std::size_t first_difference;  // == compared depth when equal
};
DrhoResult d_rho(const std::vector<int>& x, const std::vector<int>& y, const Rational& rho);

}  // namespace carpetslice
