#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <map>
#include <numeric>
#include <span>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/scalar.hpp"

namespace curvlab {

/// Exponent vector alpha of a monomial z^alpha in d variables.
class ExponentVector {
 public:
  ExponentVector() = default;
  explicit ExponentVector(std::vector<int> exponents) : e_(std::move(exponents)) {
    for (int v : e_)
      if (v < 0) throw InputError("negative exponent in monomial");
  }
  static ExponentVector zero(int d) { return ExponentVector(std::vector<int>(static_cast<std::size_t>(d), 0)); }
  static ExponentVector unit(int d, int k) {
    ExponentVector e = zero(d);
    e.e_[static_cast<std::size_t>(k)] = 1;
    return e;
  }

  int dim() const { return static_cast<int>(e_.size()); }
  int total_degree() const { return std::accumulate(e_.begin(), e_.end(), 0); }
  int operator[](int k) const { return e_[static_cast<std::size_t>(k)]; }
  const std::vector<int>& values() const { return e_; }

  ExponentVector incremented(int k) const {
    ExponentVector out = *this;
    ++out.e_[static_cast<std::size_t>(k)];
    return out;
  }
  friend ExponentVector operator+(const ExponentVector& a, const ExponentVector& b) {
    ExponentVector out = a;
    for (std::size_t k = 0; k < out.e_.size(); ++k) out.e_[k] += b.e_[k];
    return out;
  }
  auto operator<=>(const ExponentVector&) const = default;

 private:
  std::vector<int> e_;
};

/// Total degree with a distinguished marker for the zero polynomial.
class Degree {
 public:
  static Degree minus_infinity() { return Degree(); }
  static Degree of(int n) { return Degree(n); }
  bool is_minus_infinity() const { return minus_inf_; }
  int value() const {
    if (minus_inf_) throw Error("degree of the zero polynomial has no integer value");
    return n_;
  }
  friend bool operator==(const Degree&, const Degree&) = default;

 private:
  Degree() = default;
  explicit Degree(int n) : n_(n), minus_inf_(false) {}
  int n_ = 0;
  bool minus_inf_ = true;
};

/// All exponent vectors of total degree n in d variables, z_1^n first (lex descending).
inline std::vector<ExponentVector> monomials(int d, int n) {
  std::vector<ExponentVector> out;
  if (n < 0 || d <= 0) return out;
  std::vector<int> cur(static_cast<std::size_t>(d), 0);
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == d - 1) {
      cur[static_cast<std::size_t>(pos)] = left;
      out.emplace_back(cur);
      return;
    }
    for (int v = left; v >= 0; --v) {
      cur[static_cast<std::size_t>(pos)] = v;
      self(self, pos + 1, left - v);
    }
  };
  rec(rec, 0, n);
  return out;
}

/// Fock weight alpha!/|alpha|! = ||z^alpha||^2, exactly.
inline mpq_class fock_weight_exact(const ExponentVector& a) {
  mpz_class num = 1;
  for (int v : a.values()) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(v));
    num *= f;
  }
  mpz_class den;
  mpz_fac_ui(den.get_mpz_t(), static_cast<unsigned long>(a.total_degree()));
  mpq_class w(num, den);
  w.canonicalize();
  return w;
}

/// Fock weight alpha!/|alpha|! in double precision (log-gamma route, stable for large degrees).
inline double fock_weight(const ExponentVector& a) {
  double lg = -std::lgamma(static_cast<double>(a.total_degree()) + 1.0);
  for (int v : a.values()) lg += std::lgamma(static_cast<double>(v) + 1.0);
  return std::exp(lg);
}

/// Squared norm of z^alpha in the Hardy space of the sphere: (d-1)! alpha! / (d-1+|alpha|)!.
inline mpq_class hardy_norm_sq_exact(const ExponentVector& a) {
  const int d = a.dim();
  mpz_class num;
  mpz_fac_ui(num.get_mpz_t(), static_cast<unsigned long>(d - 1));
  for (int v : a.values()) {
    mpz_class f;
    mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(v));
    num *= f;
  }
  mpz_class den;
  mpz_fac_ui(den.get_mpz_t(), static_cast<unsigned long>(d - 1 + a.total_degree()));
  mpq_class h(num, den);
  h.canonicalize();
  return h;
}

template <class S>
typename scalar_traits<S>::weight_type weight_of(const ExponentVector& a) {
  if constexpr (scalar_traits<S>::exact)
    return fock_weight_exact(a);
  else
    return fock_weight(a);
}

/// Sparse multivariate polynomial: exponent vector -> nonzero coefficient.
template <class S>
class Polynomial {
 public:
  using Terms = std::map<ExponentVector, S>;

  explicit Polynomial(int d = 1) : d_(d) {
    if (d < 1) throw InputError("polynomial dimension must be >= 1");
  }
  static Polynomial monomial(const ExponentVector& a, const S& c) {
    Polynomial p(a.dim());
    p.add_term(a, c);
    return p;
  }
  static Polynomial constant(int d, const S& c) { return monomial(ExponentVector::zero(d), c); }

  int dim() const { return d_; }
  const Terms& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  std::size_t size() const { return terms_.size(); }

  Degree degree() const {
    if (terms_.empty()) return Degree::minus_infinity();
    int n = 0;
    for (const auto& [a, c] : terms_) n = std::max(n, a.total_degree());
    return Degree::of(n);
  }
  bool is_homogeneous() const {
    if (terms_.empty()) return true;
    const int n = terms_.begin()->first.total_degree();
    return std::all_of(terms_.begin(), terms_.end(), [n](const auto& t) { return t.first.total_degree() == n; });
  }

  S coefficient(const ExponentVector& a) const {
    auto it = terms_.find(a);
    return it == terms_.end() ? S(0) : it->second;
  }

  void add_term(const ExponentVector& a, const S& c) {
    if (a.dim() != d_) throw InputError("exponent vector length does not match polynomial dimension");
    if (scalar_traits<S>::is_zero(c)) return;
    auto [it, inserted] = terms_.try_emplace(a, c);
    if (!inserted) {
      it->second += c;
      if (scalar_traits<S>::is_zero(it->second)) terms_.erase(it);
    }
  }

  Polynomial& operator+=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [a, c] : o.terms_) add_term(a, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    check_dim(o);
    for (const auto& [a, c] : o.terms_) add_term(a, S(0) - c);
    return *this;
  }
  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    a.check_dim(b);
    Polynomial out(a.d_);
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) out.add_term(ea + eb, ca * cb);
    return out;
  }
  friend Polynomial operator*(const S& s, const Polynomial& p) {
    Polynomial out(p.d_);
    for (const auto& [a, c] : p.terms_) out.add_term(a, s * c);
    return out;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.d_ == b.d_ && a.terms_ == b.terms_; }

  /// Explicit exact -> float conversion; float -> float is the identity.
  Polynomial<cplx> to_float() const {
    Polynomial<cplx> out(d_);
    for (const auto& [a, c] : terms_) out.add_term(a, scalar_traits<S>::to_complex(c));
    return out;
  }

 private:
  void check_dim(const Polynomial& o) const {
    if (o.d_ != d_) throw InputError("polynomials live in different numbers of variables");
  }
  int d_;
  Terms terms_;
};

/// Symmetric Fock inner product sum_alpha f_alpha conj(g_alpha) alpha!/|alpha|!.
template <class S>
S fock_inner(const Polynomial<S>& f, const Polynomial<S>& g) {
  if (f.dim() != g.dim()) throw InputError("fock_inner: mismatched dimension");
  S acc(0);
  const auto& small = f.size() <= g.size() ? f.terms() : g.terms();
  for (const auto& [a, c] : small) {
    auto fa = f.terms().find(a);
    auto ga = g.terms().find(a);
    if (fa == f.terms().end() || ga == g.terms().end()) continue;
    acc += fa->second * scalar_traits<S>::conj(ga->second) * weight_of<S>(a);
  }
  return acc;
}

template <class S>
double fock_norm_sq(const Polynomial<S>& f) {
  return scalar_traits<S>::to_complex(fock_inner(f, f)).real();
}

/// Plain evaluation at a point of C^d (float path).
template <class S>
cplx evaluate(const Polynomial<S>& f, std::span<const cplx> z) {
  if (static_cast<int>(z.size()) != f.dim()) throw InputError("evaluate: point has wrong dimension");
  cplx acc = 0.0;
  for (const auto& [a, c] : f.terms()) {
    cplx m = scalar_traits<S>::to_complex(c);
    for (int k = 0; k < f.dim(); ++k)
      for (int p = 0; p < a[k]; ++p) m *= z[static_cast<std::size_t>(k)];
    acc += m;
  }
  return acc;
}

/// Exact evaluation at a Gaussian-rational point.
inline GaussianRational evaluate_exact(const Polynomial<GaussianRational>& f, std::span<const GaussianRational> z) {
  if (static_cast<int>(z.size()) != f.dim()) throw InputError("evaluate: point has wrong dimension");
  GaussianRational acc(0);
  for (const auto& [a, c] : f.terms()) {
    GaussianRational m = c;
    for (int k = 0; k < f.dim(); ++k)
      for (int p = 0; p < a[k]; ++p) m *= z[static_cast<std::size_t>(k)];
    acc += m;
  }
  return acc;
}

namespace detail {

inline bool inside_ball(std::span<const cplx> w) {
  double s = 0.0;
  for (const auto& c : w) s += std::norm(c);
  return s < 1.0;
}
inline bool inside_ball(std::span<const GaussianRational> w) {
  mpq_class s = 0;
  for (const auto& c : w) s += c.norm_sq();
  return s < 1;
}

}  // namespace detail

/// Degree <= D truncation of the reproducing kernel u_w(z) = 1/(1 - <z,w>).
/// The coefficient of z^alpha is conj(w)^alpha |alpha|!/alpha!.
template <class S>
Polynomial<S> szego_truncate(std::span<const S> w, int D) {
  if (w.empty()) throw InputError("szego_truncate: empty point");
  if (D < 0) throw InputError("szego_truncate: negative truncation degree");
  if (!detail::inside_ball(w)) throw InputError("szego_truncate: point must satisfy |w| < 1");
  const int d = static_cast<int>(w.size());
  Polynomial<S> out(d);
  for (int n = 0; n <= D; ++n) {
    for (const auto& a : monomials(d, n)) {
      S c(1);
      for (int k = 0; k < d; ++k)
        for (int p = 0; p < a[k]; ++p) c = c * scalar_traits<S>::conj(w[static_cast<std::size_t>(k)]);
      if constexpr (scalar_traits<S>::exact) {
        mpq_class inv = 1 / fock_weight_exact(a);
        c *= inv;
      } else {
        c *= 1.0 / fock_weight(a);
      }
      out.add_term(a, c);
    }
  }
  return out;
}

/// Squared Fock norm of the kernel tail beyond degree D: sum_{n>D} |w|^{2n}.
inline double szego_tail_norm_sq(std::span<const cplx> w, int D) {
  double r2 = 0.0;
  for (const auto& c : w) r2 += std::norm(c);
  return std::pow(r2, D + 1) / (1.0 - r2);
}

}  // namespace curvlab
