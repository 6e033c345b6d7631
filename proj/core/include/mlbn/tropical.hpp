#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mlbn {
class WeightedDag;
}

namespace mlbn::tropical {

/// Element of the max-plus semiring T = R ∪ {-inf}.
///
/// -inf is a dedicated sentinel (the additive identity). Every operation checks
/// for it explicitly instead of relying on IEEE infinity arithmetic, and
/// construction rejects NaN and +inf.
class Value {
public:
  constexpr Value() noexcept : v_(kNegInf) {}
  explicit Value(double v);

  static constexpr Value neg_inf() noexcept { return Value(); }
  static constexpr Value zero() noexcept { return Value(Finite{}, 0.0); }

  constexpr bool is_neg_inf() const noexcept { return v_ == kNegInf; }
  constexpr bool is_finite() const noexcept { return v_ != kNegInf; }
  /// Raw double; -inf maps to -std::numeric_limits<double>::infinity().
  constexpr double value() const noexcept { return v_; }

  /// a ⊕ b = max(a, b)
  friend Value oplus(Value a, Value b) noexcept {
    if (a.is_neg_inf()) return b;
    if (b.is_neg_inf()) return a;
    return Value(Finite{}, a.v_ >= b.v_ ? a.v_ : b.v_);
  }
  /// a ⊙ b = a + b, with -inf absorbing
  friend Value otimes(Value a, Value b) noexcept {
    if (a.is_neg_inf() || b.is_neg_inf()) return neg_inf();
    return Value(Finite{}, a.v_ + b.v_);
  }
  friend constexpr bool operator==(Value a, Value b) noexcept { return a.v_ == b.v_; }
  friend constexpr bool operator<(Value a, Value b) noexcept {
    if (a.is_neg_inf()) return b.is_finite();
    if (b.is_neg_inf()) return false;
    return a.v_ < b.v_;
  }
  friend constexpr bool operator<=(Value a, Value b) noexcept { return !(b < a); }

private:
  struct Finite {};
  static constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  constexpr Value(Finite, double v) noexcept : v_(v) {}
  double v_;
};

/// Square matrix over the max-plus semiring, row-major.
class Matrix {
public:
  Matrix() = default;
  /// n×n matrix filled with -inf.
  explicit Matrix(std::size_t n);

  /// Tropical identity: 0 on the diagonal, -inf elsewhere.
  static Matrix identity(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  Value operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  Value& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

  /// Every row and every column has a finite entry.
  bool is_r_astic() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

private:
  std::size_t n_ = 0;
  std::vector<Value> data_;
};

/// result(i,j) = max_k a(i,k) + b(k,j). Throws std::invalid_argument on size mismatch.
Matrix matmul(const Matrix& a, const Matrix& b);

/// Entrywise ⊕.
Matrix add(const Matrix& a, const Matrix& b);

class positive_cycle_error : public std::runtime_error {
public:
  explicit positive_cycle_error(std::size_t vertex);
  /// 0-based vertex lying on a positive-weight cycle.
  std::size_t vertex() const noexcept { return vertex_; }

private:
  std::size_t vertex_;
};

struct KleeneStar {
  Matrix base;
  Matrix closure;
};

/// Diagonal entries above this after relaxation signal a positive cycle.
inline constexpr double kPositiveCycleTolerance = 1e-12;

/// Heaviest-path closure I ⊕ w ⊕ w^2 ⊕ ... by Floyd-Warshall relaxation.
/// Throws positive_cycle_error when w has a positive-weight cycle.
KleeneStar kleene_star(const Matrix& w);

/// x_j - x_i >= bound
struct Constraint {
  std::size_t i;
  std::size_t j;
  double bound;
  /// Not implied by any pair of other constraints through an intermediate vertex.
  bool facet_defining;
};

struct PolytropeFacets {
  std::size_t n = 0;
  std::vector<Constraint> constraints;
};

/// One constraint x_j - x_i >= closure(i,j) per finite off-diagonal closure entry.
PolytropeFacets polytrope_facets(const KleeneStar& ks);

/// True iff x satisfies every constraint within tol. Invariant under x + λ·1.
bool membership(std::span<const double> x, const PolytropeFacets& facets, double tol);

enum class EdgeRole { facet_defining, masked };

struct EdgeClass {
  std::size_t i;
  std::size_t j;
  double weight;
  /// Heaviest i⇝j path avoiding the edge itself; -inf when none exists.
  Value best_alternative;
  EdgeRole role;
};

/// Edge i→j is facet-defining iff its weight strictly beats every alternative
/// i⇝j path; ties are masked. Order follows dag.edges().
std::vector<EdgeClass> classify_edges(const WeightedDag& dag);

std::string to_string(EdgeRole role);

}  // namespace mlbn::tropical
