#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/exact_rank.hpp"
#include "curvlab/polynomial.hpp"
#include "curvlab/qpoly.hpp"

namespace curvlab {

/// Free module F = H^2 (x) C^r with integer degree shifts.
struct FreeModuleSpec {
  int d = 1;
  int r = 1;
  std::vector<int> shifts{0};

  int n_min() const { return *std::min_element(shifts.begin(), shifts.end()); }
  int max_shift() const { return *std::max_element(shifts.begin(), shifts.end()); }
  void check() const {
    if (d < 1) throw InputError("d must be >= 1");
    if (r < 1) throw InputError("rank must be >= 1");
    if (static_cast<int>(shifts.size()) != r)
      throw InputError("shifts has " + std::to_string(shifts.size()) + " entries but rank is " + std::to_string(r));
  }
  bool operator==(const FreeModuleSpec&) const = default;
};

template <class S>
struct ModuleVector {
  std::vector<Polynomial<S>> components;
  bool is_zero() const {
    return std::all_of(components.begin(), components.end(), [](const auto& p) { return p.is_zero(); });
  }
  bool operator==(const ModuleVector&) const = default;
};

template <class S>
struct GradedPresentation {
  FreeModuleSpec spec;
  std::vector<ModuleVector<S>> generators;
  bool operator==(const GradedPresentation&) const = default;
};

using ExactPresentation = GradedPresentation<GaussianRational>;
using FloatPresentation = GradedPresentation<cplx>;
using AnyPresentation = std::variant<ExactPresentation, FloatPresentation>;

struct ValidationReport {
  bool ok = true;
  std::vector<std::optional<int>> degrees;  // nullopt for a zero generator
  std::vector<std::string> errors;
};

namespace detail {

inline std::string monomial_str(const ExponentVector& a) {
  std::string s;
  for (int k = 0; k < a.dim(); ++k) {
    if (a[k] == 0) continue;
    if (!s.empty()) s += "*";
    s += "z" + std::to_string(k + 1);
    if (a[k] > 1) s += "^" + std::to_string(a[k]);
  }
  return s.empty() ? "1" : s;
}

}  // namespace detail

/// Checks homogeneity of every generator against the shifts and records its degree.
template <class S>
ValidationReport validate(const GradedPresentation<S>& P) {
  ValidationReport rep;
  try {
    P.spec.check();
  } catch (const InputError& e) {
    rep.ok = false;
    rep.errors.push_back(e.what());
    return rep;
  }
  for (std::size_t g = 0; g < P.generators.size(); ++g) {
    const auto& v = P.generators[g];
    const std::string who = "generator " + std::to_string(g);
    if (static_cast<int>(v.components.size()) != P.spec.r) {
      rep.ok = false;
      rep.errors.push_back(who + ": has " + std::to_string(v.components.size()) + " components, rank is " +
                           std::to_string(P.spec.r));
      rep.degrees.emplace_back();
      continue;
    }
    std::optional<int> deg;
    std::string seen;  // first monomial that fixed the degree
    bool bad = false;
    for (int j = 0; j < P.spec.r && !bad; ++j) {
      const auto& poly = v.components[static_cast<std::size_t>(j)];
      if (poly.dim() != P.spec.d) {
        rep.errors.push_back(who + ": component " + std::to_string(j) + " has wrong number of variables");
        bad = true;
        break;
      }
      for (const auto& [a, c] : poly.terms()) {
        const int m = a.total_degree() + P.spec.shifts[static_cast<std::size_t>(j)];
        const std::string here = "component " + std::to_string(j) + " monomial " + detail::monomial_str(a);
        if (!deg) {
          deg = m;
          seen = here;
        } else if (*deg != m) {
          rep.errors.push_back(who + " not homogeneous: " + seen + " has degree " + std::to_string(*deg) + " but " +
                               here + " has degree " + std::to_string(m));
          bad = true;
          break;
        }
      }
    }
    if (bad) {
      rep.ok = false;
      rep.degrees.emplace_back();
    } else {
      rep.degrees.push_back(deg);
    }
  }
  return rep;
}

template <class S>
ValidationReport validated(const GradedPresentation<S>& P) {
  ValidationReport rep = validate(P);
  if (!rep.ok) {
    std::string msg = "invalid presentation";
    for (const auto& e : rep.errors) msg += "; " + e;
    throw InputError(msg);
  }
  return rep;
}

/// Monomial basis of the degree-n piece F_n: pairs (component j, z^alpha) with |alpha| + s_j = n.
struct FreeBasis {
  struct Element {
    int component;
    ExponentVector exponent;
  };
  int degree = 0;
  std::vector<Element> elements;
  std::map<std::pair<int, ExponentVector>, int> index;

  int size() const { return static_cast<int>(elements.size()); }
  int find(int component, const ExponentVector& a) const {
    auto it = index.find({component, a});
    return it == index.end() ? -1 : it->second;
  }
};

inline FreeBasis free_basis(const FreeModuleSpec& spec, int n) {
  FreeBasis b;
  b.degree = n;
  for (int j = 0; j < spec.r; ++j) {
    for (auto& a : monomials(spec.d, n - spec.shifts[static_cast<std::size_t>(j)])) {
      b.index.emplace(std::make_pair(j, a), static_cast<int>(b.elements.size()));
      b.elements.push_back({j, std::move(a)});
    }
  }
  return b;
}

/// dim F_n = sum_j q_{d-1}(n - s_j) over components with n - s_j >= 0.
inline long free_dim(const FreeModuleSpec& spec, int n) {
  long total = 0;
  for (int s : spec.shifts)
    if (n - s >= 0) total += q_poly_int(spec.d - 1, n - s).get_si();
  return total;
}

template <class S>
using SparseRow = std::vector<std::pair<int, S>>;

/// Coefficient rows of {z^gamma g_i : |gamma| + deg g_i = n} in the basis free_basis(spec, n).
template <class S>
std::vector<SparseRow<S>> spanning_rows(const GradedPresentation<S>& P, const ValidationReport& rep, const FreeBasis& basis) {
  std::vector<SparseRow<S>> rows;
  const int n = basis.degree;
  for (std::size_t g = 0; g < P.generators.size(); ++g) {
    if (!rep.degrees[g] || *rep.degrees[g] > n) continue;
    const auto& gen = P.generators[g];
    for (const auto& gamma : monomials(P.spec.d, n - *rep.degrees[g])) {
      SparseRow<S> row;
      for (int j = 0; j < P.spec.r; ++j)
        for (const auto& [a, c] : gen.components[static_cast<std::size_t>(j)].terms()) {
          const int col = basis.find(j, a + gamma);
          if (col < 0) throw Error("spanning_rows: monomial outside the graded piece");
          row.emplace_back(col, c);
        }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

/// Numeric rank with singular-value threshold rel_tol * max(1, sigma_max).
inline int numeric_rank(const Eigen::MatrixXcd& A, double rel_tol = 1e-8) {
  if (A.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(A);
  const auto& s = svd.singularValues();
  const double cut = rel_tol * std::max(1.0, s.size() ? s(0) : 0.0);
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut) ++r;
  return r;
}

/// Rows as a dense matrix in Fock-normalized coordinates, each row scaled to unit length.
template <class S>
Eigen::MatrixXcd normalized_dense(const std::vector<SparseRow<S>>& rows, const FreeBasis& basis) {
  Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(static_cast<Eigen::Index>(rows.size()), basis.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [c, v] : rows[r])
      A(static_cast<Eigen::Index>(r), c) =
          scalar_traits<S>::to_complex(v) * std::sqrt(fock_weight(basis.elements[static_cast<std::size_t>(c)].exponent));
    const double nr = A.row(static_cast<Eigen::Index>(r)).norm();
    if (nr > 0) A.row(static_cast<Eigen::Index>(r)) /= nr;
  }
  return A;
}

struct PieceRank {
  int dim = 0;
  bool numeric = false;
  std::vector<int> independent_rows;
  std::string method;
};

template <class S>
PieceRank rank_of_rows(const std::vector<SparseRow<S>>& rows, const FreeBasis& basis) {
  PieceRank out;
  if constexpr (scalar_traits<S>::exact) {
    RankResult r = exact_rank(rows, basis.size());
    out.dim = r.rank;
    out.independent_rows = std::move(r.independent_rows);
    out.method = r.method;
  } else {
    out.numeric = true;
    out.method = "numeric";
    out.dim = numeric_rank(normalized_dense(rows, basis));
  }
  return out;
}

/// dim M_n as the rank of the monomial-coefficient matrix of the spanning set.
template <class S>
PieceRank graded_piece_dim(const GradedPresentation<S>& P, int n) {
  const ValidationReport rep = validated(P);
  const FreeBasis basis = free_basis(P.spec, n);
  return rank_of_rows(spanning_rows(P, rep, basis), basis);
}

/// Per-degree dimensions of M, F and H = F/M for n_min <= n <= n_max.
struct DimensionTable {
  int n_min = 0;
  std::vector<long> dims_M, dims_F, dims_H;
  bool numeric = false;

  int n_max() const { return n_min + static_cast<int>(dims_H.size()) - 1; }
  bool has(int n) const { return n >= n_min && n <= n_max(); }
  long M(int n) const { return has(n) ? dims_M[static_cast<std::size_t>(n - n_min)] : 0; }
  long F(int n) const { return has(n) ? dims_F[static_cast<std::size_t>(n - n_min)] : 0; }
  long H(int n) const { return has(n) ? dims_H[static_cast<std::size_t>(n - n_min)] : 0; }
};

template <class S>
DimensionTable quotient_dims(const GradedPresentation<S>& P, int n_max) {
  const ValidationReport rep = validated(P);
  DimensionTable t;
  t.n_min = P.spec.n_min();
  if (n_max < t.n_min) throw InputError("max degree below the lowest degree of the module");
  for (int n = t.n_min; n <= n_max; ++n) {
    const FreeBasis basis = free_basis(P.spec, n);
    const PieceRank pr = rank_of_rows(spanning_rows(P, rep, basis), basis);
    t.numeric = t.numeric || pr.numeric;
    const long f = basis.size();
    if (f != free_dim(P.spec, n)) throw Error("internal: free basis size disagrees with q-polynomial count");
    if (pr.dim > f) throw NumericFailure("rank exceeds dim F_" + std::to_string(n) + " (internal rank error)");
    t.dims_M.push_back(pr.dim);
    t.dims_F.push_back(f);
    t.dims_H.push_back(f - pr.dim);
  }
  return t;
}

/// Exact rank(1 - phi^{n+1}(1)) for 0 <= n <= n_max - max_shift: the dimension of the projection
/// onto H of all vectors whose components are polynomials of degree <= n. Degreewise this is
/// dim(G_{m,n} + M_m) - dim M_m with G_{m,n} spanned by the monomials of components j with
/// 0 <= m - s_j <= n. Reduces to cumulative dims_H when all shifts coincide.
template <class S>
std::vector<long> filtration_dims(const GradedPresentation<S>& P, int n_max) {
  const ValidationReport rep = validated(P);
  const int lo = P.spec.n_min();
  const int top = n_max - P.spec.max_shift();
  if (top < 0) throw InputError("max degree too small for the filtration sequence");
  std::map<int, std::vector<SparseRow<S>>> rows_at;
  std::map<int, FreeBasis> basis_at;
  std::map<int, long> dimM;
  std::map<std::pair<int, unsigned long>, long> cache;
  std::vector<long> out;
  for (int n = 0; n <= top; ++n) {
    long total = 0;
    for (int m = lo; m <= P.spec.max_shift() + n; ++m) {
      if (!basis_at.count(m)) {
        basis_at.emplace(m, free_basis(P.spec, m));
        rows_at.emplace(m, spanning_rows(P, rep, basis_at.at(m)));
        dimM[m] = rank_of_rows(rows_at.at(m), basis_at.at(m)).dim;
      }
      unsigned long mask = 0;
      bool all = true;
      for (int j = 0; j < P.spec.r; ++j) {
        const int pd = m - P.spec.shifts[static_cast<std::size_t>(j)];
        if (pd >= 0 && pd <= n)
          mask |= 1UL << j;
        else if (pd >= 0)
          all = false;
      }
      const FreeBasis& basis = basis_at.at(m);
      if (mask == 0) continue;
      if (all) {
        total += basis.size() - dimM[m];
        continue;
      }
      auto key = std::make_pair(m, mask);
      if (!cache.count(key)) {
        auto rows = rows_at.at(m);
        for (int c = 0; c < basis.size(); ++c)
          if (mask & (1UL << basis.elements[static_cast<std::size_t>(c)].component)) rows.push_back({{c, S(1)}});
        cache[key] = rank_of_rows(rows, basis).dim - dimM[m];
      }
      total += cache[key];
    }
    out.push_back(total);
  }
  return out;
}

}  // namespace curvlab
