#pragma once

#include "nullwave/rational.hpp"

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace nullwave {

// The seven vector fields plus time translation, in the fixed order used for
// derivative sequences: (d/dt, d/dx1, d/dx2, d/dx3, O1, O2, O3, S).
enum class Gamma : int {
  Dt = 0,
  Dx1 = 1,
  Dx2 = 2,
  Dx3 = 3,
  Omega1 = 4,
  Omega2 = 5,
  Omega3 = 6,
  Scaling = 7,
};

constexpr int kGammaCount = 8;
const char* gamma_name(Gamma g);

/// Propagation speeds c_1 >= ... >= c_m > 0, kept exact so the cone quadrics
/// used by the null check are exact. Strict ordering is required everywhere
/// except the repeated-speed extension.
class SpeedVector {
 public:
  explicit SpeedVector(std::vector<Rational> speeds);
  static SpeedVector from_doubles(const std::vector<double>& speeds);

  int size() const { return static_cast<int>(c_.size()); }
  const Rational& speed(int k) const { return c_[static_cast<std::size_t>(k)]; }
  double speed_double(int k) const;
  double max_speed() const { return speed_double(0); }
  /// c0 = min_k(c_k) / 2, the inner-cone slope of the pointwise estimates.
  double c0() const;

  bool strictly_decreasing() const;
  /// Indices grouped by exactly equal speed, in order of appearance.
  std::vector<std::vector<int>> equal_speed_groups() const;

 private:
  std::vector<Rational> c_;
};

/// Coupling constants of the quadratic nonlinearity, indexed by wave families
/// (i, j, k) in [0, m) and derivative slots (alpha, beta, gamma) in [0, 4).
/// Entries are exact rationals; all algebra on them is exact.
class CoeffTensor {
 public:
  explicit CoeffTensor(int m);

  int families() const { return m_; }
  const Rational& at(int i, int j, int k, int a, int b, int g) const;
  void set(int i, int j, int k, int a, int b, int g, Rational value);

  bool is_zero() const;
  double frobenius_norm() const;
  CoeffTensor scaled(const Rational& factor) const;
  CoeffTensor plus(const CoeffTensor& other) const;

  struct Entry {
    int i, j, k, a, b, g;
    Rational value;
  };
  std::vector<Entry> nonzero_entries() const;

  friend bool operator==(const CoeffTensor&, const CoeffTensor&) = default;

 private:
  std::size_t index(int i, int j, int k, int a, int b, int g) const;

  int m_;
  std::vector<Rational> e_;
};

/// Index tuple in reporting form: families 1-based, derivative slots 0-based.
struct IndexTuple {
  int i, j, k, a, b, g;
  friend bool operator==(const IndexTuple&, const IndexTuple&) = default;
};
std::string format_index_tuple(const IndexTuple& t);

struct SymmetryReport {
  bool symmetric = false;
  std::optional<IndexTuple> witness;  // lexicographically smallest violation
};

/// Checks C^{ijk}_{abg} = C^{ikj}_{abg} = C^{ijk}_{agb} entrywise.
SymmetryReport check_symmetry(const CoeffTensor& c);

/// Homogeneous cubic q(X) = sum C_{abg} X_a X_b X_g stored by its 20
/// symmetrized monomial coefficients; monomials ordered lexicographically by
/// the sorted exponent triple.
class CubicForm {
 public:
  static constexpr int kMonomialCount = 20;
  /// Sorted slot triples (a <= b <= g) addressing each monomial.
  static const std::array<std::array<int, 3>, kMonomialCount>& monomials();
  static int monomial_index(int a, int b, int g);

  CubicForm() = default;

  const Rational& coeff(int mon) const { return c_[static_cast<std::size_t>(mon)]; }
  Rational& coeff(int mon) { return c_[static_cast<std::size_t>(mon)]; }

  bool is_zero() const;
  Rational max_abs_coeff() const;

  Rational eval_exact(const std::array<Rational, 4>& x) const;
  double eval(const std::array<double, 4>& x) const;

 private:
  std::array<Rational, kMonomialCount> c_{};
};

/// The symmetrized cubic of one (i, j, k) block; self_cubic(c, k) is the
/// diagonal case entering the null condition.
CubicForm block_cubic(const CoeffTensor& c, int i, int j, int k);
CubicForm self_cubic(const CoeffTensor& c, int k);

/// A point on the null cone of family k where a cubic fails to vanish.
struct NullWitness {
  int k = 0;                       // 0-based family
  std::array<double, 4> x{};       // on {X0^2 = c_k^2 |X'|^2}
  double value = 0.0;              // cubic at x
  double cone_residual() const;    // |X0^2 - c^2 |X'|^2| / scale, needs c
  double cone_residual(double c) const;
};

struct NullCheckResult {
  std::vector<bool> null_per_family;
  bool all_null = false;
  /// For each null family, the linear form L with q = L * cone quadric.
  std::vector<std::optional<std::array<Rational, 4>>> linear_factor;
  std::optional<NullWitness> witness;  // first failing family
};

/// Exact null-condition check: q_k vanishes on the cone iff the cone quadric
/// divides it, i.e. q_k = L * (X0^2 - c_k^2 |X'|^2) for a linear form L. The
/// 20x4 rational system in L is decided exactly. Witnesses come from a
/// Fibonacci-sphere scan of both cone sheets.
NullCheckResult check_null(const CoeffTensor& c, const SpeedVector& speeds);

struct ExtendedNullCheckResult {
  bool all_null = false;
  std::vector<IndexTuple> failing_triples;  // (i, j, k) 1-based, slots unused
  std::optional<NullWitness> witness;
};

/// Repeated-speed form: every (i, j, k) triple inside an equal-speed group
/// must have its block cubic vanish on that group's cone.
ExtendedNullCheckResult check_null_extended(
    const CoeffTensor& c, const SpeedVector& speeds,
    const std::vector<std::vector<int>>& groups);

/// Coefficient tensor of [Gamma, N]: zero for translations, -3 C for scaling,
/// and the Levi-Civita contraction for rotations.
CoeffTensor commutator(const CoeffTensor& c, Gamma field);

/// Left fold of commutator over the sequence (first entry applied first).
CoeffTensor iterated_commutators(const CoeffTensor& c, std::span<const Gamma> d,
                                 int max_length = 4);

/// Pointwise N^k = sum C^{ijk}_{abg} grad_u[i][a] hess_v[j][b][g].
/// grad_u is m x 4, hess_v is m x 4 x 4 and must be symmetric in (b, g).
std::vector<double> evaluate_nonlinearity(const CoeffTensor& c,
                                          std::span<const double> grad_u,
                                          std::span<const double> hess_v);

/// Test utility: replace each diagonal block's cubic by its least-squares
/// projection onto the ideal generated by the cone quadric, so check_null
/// passes. Placement back into the block is fully slot-symmetric. Not a
/// construction from the underlying theory; used to generate null inputs.
CoeffTensor project_to_null(const CoeffTensor& c, const SpeedVector& speeds);

struct TensorFile {
  CoeffTensor tensor;
  SpeedVector speeds;
};

/// Plain-text tensor format: '#' comments, "m <int>", "speeds <m rationals>",
/// then sparse entries "i j k alpha beta gamma value" (families 1-based,
/// slots 0-based, exact rational values).
TensorFile load_tensor_file(const std::string& path);
TensorFile parse_tensor_text(std::istream& in, const std::string& origin);
void save_tensor_file(const std::string& path, const CoeffTensor& c,
                      const SpeedVector& speeds,
                      const std::string& comment = {});

}  // namespace nullwave
