#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "carpetslice/rotation.hpp"
#include "carpetslice/slicer.hpp"
#include "carpetslice/symbolic.hpp"

namespace carpetslice {

/// A point of the unit square with exact coordinates.
struct ExactPoint {
  Rational x;
  Rational y;
  bool operator==(const ExactPoint& o) const { return x == o.x && y == o.y; }
};

/// T_m(x) = m x mod 1.
Rational t_map(std::int64_t m, const Rational& x);

/// (T_m1, T_m2)(z) when t is in [1 - theta, 1), else (id, T_m2)(z).
ExactPoint phi_t(const RotationPoint& t, const LogRatioAngle& angle, const ExactPoint& z);

struct SkewState {
  ExactPoint z;
  RotationPoint t;
  SymbolSequence omega = SymbolSequence::constant(1, 0);
  SymbolSequence eta = SymbolSequence::constant(1, 0);
};

/// U(z, t, omega, eta) = (Phi_t(z), R_theta(t), sigma_t(omega), sigma(eta)).
SkewState u_map(const SkewState& s, const LogRatioAngle& angle);

struct ClosedFormReport {
  ExactPoint closed_form;  // (T_m1^{r_k(t)}(x), T_m2^k(y))
  ExactPoint iterated;     // k applications of u_map
  std::size_t r_k = 0;
  bool equal = false;
};
ClosedFormReport u_iterate_closed_form(const ExactPoint& z, const RotationPoint& t, const LogRatioAngle& angle,
                                       std::size_t k);

/// Finitely supported probability measure on words over [m1] x [m2], stored as a
/// shared prefix trie. Conditioning on a first symbol returns a view into the
/// same trie, so long magnification chains stay cheap.
class EmpiricalMeasure {
 public:
  /// Words must share one depth; weights must be nonnegative and sum to 1.
  static EmpiricalMeasure from_weights(const std::vector<std::pair<PairWord, Rational>>& atoms);
  /// Uniform over distinct words of one depth.
  static EmpiricalMeasure uniform(const std::vector<PairWord>& words);

  std::size_t depth() const;
  /// mu([prefix]); 0 when the prefix is absent or longer than the depth.
  Rational mass(const PairWord& prefix) const;
  /// Words with positive mass and their weights, in lexicographic order.
  std::vector<std::pair<PairWord, Rational>> atoms() const;
  Rational total() const;
  /// mu^{[a]} shifted by one symbol; throws std::domain_error on zero mass.
  EmpiricalMeasure conditioned(const DigitPair& a) const;
  /// Same trie and node: the identity used to group chain atoms.
  bool same_view(const EmpiricalMeasure& o) const { return trie_ == o.trie_ && node_ == o.node_; }
  std::string view_key() const;

 private:
  struct Trie;
  EmpiricalMeasure(std::shared_ptr<const Trie> trie, std::uint32_t node, std::size_t depth)
      : trie_(std::move(trie)), node_(node), depth_(depth) {}
  std::shared_ptr<const Trie> trie_;
  std::uint32_t node_ = 0;
  std::size_t depth_ = 0;
};

/// M(mu, x) = (mu^{[x_0]}, sigma x). Throws std::domain_error when mu([x_0]) = 0
/// and std::invalid_argument when the word is empty.
std::pair<EmpiricalMeasure, PairWord> magnify(const EmpiricalMeasure& mu, const PairWord& x);

/// One element (mu, x, t, tau, omega, eta) of the chain space.
struct MicroState {
  EmpiricalMeasure measure = EmpiricalMeasure::uniform({PairWord{}});
  PairWord point;
  RotationPoint t;
  SymbolSequence tau = SymbolSequence::constant(2, 0);
  SymbolSequence omega = SymbolSequence::constant(1, 0);
  SymbolSequence eta = SymbolSequence::constant(1, 0);
};

/// M-hat: magnify, rotate t, shift tau, sigma_t omega, shift eta.
MicroState m_hat(const MicroState& s, const LogRatioAngle& angle);

struct ChainAtom {
  MicroState state;
  Rational weight;
  std::size_t step = 0;  // i in the Cesaro average
};

struct ChainDistribution {
  std::vector<ChainAtom> atoms;
  std::size_t n_k = 0;
  std::size_t support_size = 0;  // N(E, m2^{-n_k})
  Rational total() const;
};

/// Depth-d cylinders of X_{tau,omega,eta} whose closed image rectangle meets the line.
std::vector<PairWord> slice_preimage(const CodedProduct& cp, const Line& line, std::size_t depth,
                                     const CountOptions& options = {});

struct CpChain {
  EmpiricalMeasure mu_k = EmpiricalMeasure::uniform({PairWord{}});
  ChainDistribution p_k;
  ChainDistribution q_k;
};

/// mu_k uniform over the lexicographically least word of E in each depth-n_k
/// cylinder meeting E; P_k the matching atoms at (t0, v_t0, omega0, eta0);
/// Q_k = (1/n_k) sum_{i<n_k} M-hat^i P_k.
CpChain build_cp_chain(const std::vector<PairWord>& E, std::size_t n_k, const RotationPoint& t0,
                       const LogRatioAngle& angle, const SymbolSequence& omega0, const SymbolSequence& eta0);

/// sum over atoms of weight * (-log mu([x_0])) / log m2.
double entropy_H(const ChainDistribution& d, std::int64_t m2);

/// Star discrepancy of the weighted t-marginal of a chain.
double t_marginal_discrepancy(const ChainDistribution& d, const LogRatioAngle& angle);
/// Star discrepancy of {t0 + i theta}, i < horizon.
double orbit_star_discrepancy(const RotationPoint& t0, const LogRatioAngle& angle, std::size_t horizon);

/// max over groups G of atoms sharing (mu, t, tau, omega, eta) and words w with
/// |w| <= depth of |D(G and x in [w]) - D(G) mu([w])|. Exact.
Rational adaptedness_residual(const ChainDistribution& d, std::size_t depth);

/// True when every atom's tau agrees with the coding of its t on `prefix` symbols.
bool coding_consistent(const ChainDistribution& d, const LogRatioAngle& angle, std::size_t prefix);

struct GenericityReport {
  double max_deviation = 0;
  double omega_deviation = 0;
  double eta_deviation = 0;
  double t_deviation = 0;       // over the ten intervals [j/10, (j+1)/10)
  double t_discrepancy = 0;     // star discrepancy of the t-orbit
  std::size_t n = 0;
};

/// Birkhoff averages along the orbit of Z(t, omega, eta) = (R_theta t, sigma_t omega, sigma eta)
/// against alpha1([i]), alpha2([j]) and interval lengths.
GenericityReport z_orbit_genericity(const RotationPoint& t, const LogRatioAngle& angle, const SymbolSequence& omega,
                                    const SymbolSequence& eta, const std::vector<Rational>& alpha1,
                                    const std::vector<Rational>& alpha2, std::size_t n);

/// Number of cells of the m2^{-k} square grid (half-open, last row/column closed)
/// met by the closed image rectangle of a depth-k cylinder.
std::size_t pi_image_grid_cells(const CodedProduct& cp, const PairWord& word);

}  // namespace carpetslice
