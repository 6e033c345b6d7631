#include "mlbn/tropical.hpp"

#include <cmath>

#include "mlbn/dag.hpp"

namespace mlbn::tropical {

Value::Value(double v) : v_(v) {
  if (std::isnan(v) || v == std::numeric_limits<double>::infinity()) {
    throw std::invalid_argument("tropical value must be finite or -inf");
  }
}

Matrix::Matrix(std::size_t n) : n_(n), data_(n * n, Value::neg_inf()) {}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = Value::zero();
  return m;
}

bool Matrix::is_r_astic() const {
  for (std::size_t i = 0; i < n_; ++i) {
    bool row = false;
    bool col = false;
    for (std::size_t k = 0; k < n_; ++k) {
      row = row || (*this)(i, k).is_finite();
      col = col || (*this)(k, i).is_finite();
    }
    if (!row || !col) return false;
  }
  return true;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("matmul: dimension mismatch");
  const std::size_t n = a.size();
  Matrix out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < n; ++k) {
      const Value aik = a(i, k);
      if (aik.is_neg_inf()) continue;
      for (std::size_t j = 0; j < n; ++j) out(i, j) = oplus(out(i, j), otimes(aik, b(k, j)));
    }
  }
  return out;
}

Matrix add(const Matrix& a, const Matrix& b) {
  if (a.size() != b.size()) throw std::invalid_argument("add: dimension mismatch");
  Matrix out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) out(i, j) = oplus(a(i, j), b(i, j));
  return out;
}

positive_cycle_error::positive_cycle_error(std::size_t vertex)
    : std::runtime_error("positive-weight cycle through vertex " + std::to_string(vertex + 1)), vertex_(vertex) {}

KleeneStar kleene_star(const Matrix& w) {
  const std::size_t n = w.size();
  Matrix c = add(w, Matrix::identity(n));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const Value cik = c(i, k);
      if (cik.is_neg_inf()) continue;
      for (std::size_t j = 0; j < n; ++j) c(i, j) = oplus(c(i, j), otimes(cik, c(k, j)));
    }
    if (c(k, k).value() > kPositiveCycleTolerance) throw positive_cycle_error(k);
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (c(i, i).value() > kPositiveCycleTolerance) throw positive_cycle_error(i);
    c(i, i) = Value::zero();
  }
  return {w, std::move(c)};
}

PolytropeFacets polytrope_facets(const KleeneStar& ks) {
  const Matrix& c = ks.closure;
  const std::size_t n = c.size();
  PolytropeFacets out{n, {}};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j || c(i, j).is_neg_inf()) continue;
      const double bound = c(i, j).value();
      bool implied = false;
      for (std::size_t k = 0; k < n && !implied; ++k) {
        if (k == i || k == j) continue;
        const Value via = otimes(c(i, k), c(k, j));
        implied = via.is_finite() && via.value() >= bound;
      }
      out.constraints.push_back({i, j, bound, !implied});
    }
  }
  return out;
}

bool membership(std::span<const double> x, const PolytropeFacets& facets, double tol) {
  if (x.size() != facets.n) throw std::invalid_argument("membership: point dimension mismatch");
  for (const auto& c : facets.constraints) {
    if (x[c.j] - x[c.i] < c.bound - tol) return false;
  }
  return true;
}

std::vector<EdgeClass> classify_edges(const WeightedDag& dag) {
  const KleeneStar ks = kleene_star(dag.weight_matrix());
  std::vector<EdgeClass> out;
  out.reserve(dag.edges().size());
  for (const Edge& e : dag.edges()) {
    // Any other i⇝j path leaves i through a different child k and cannot come back to i.
    Value best = Value::neg_inf();
    for (std::size_t k : dag.children(e.i)) {
      if (k == e.j) continue;
      best = oplus(best, otimes(Value(*dag.weight(e.i, k)), ks.closure(k, e.j)));
    }
    const bool facet = best.is_neg_inf() || e.omega > best.value();
    out.push_back({e.i, e.j, e.omega, best, facet ? EdgeRole::facet_defining : EdgeRole::masked});
  }
  return out;
}

std::string to_string(EdgeRole role) {
  return role == EdgeRole::facet_defining ? "facet-defining" : "masked";
}

}  // namespace mlbn::tropical
