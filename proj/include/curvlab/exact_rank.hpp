#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/scalar.hpp"

namespace curvlab {

/// Sparse row: (column, value) pairs with distinct columns, any order.
using ExactRow = std::vector<std::pair<int, GaussianRational>>;

struct RankResult {
  int rank = 0;
  std::vector<int> independent_rows;  // indices of a maximal independent subset, increasing
  std::string method;                 // "bareiss", "modular", "numeric"
  std::vector<std::uint64_t> primes;  // primes used by the modular route
};

namespace modp {

using u64 = std::uint64_t;
using u128 = unsigned __int128;

inline u64 mulmod(u64 a, u64 b, u64 p) { return static_cast<u64>(static_cast<u128>(a) * b % p); }
inline u64 addmod(u64 a, u64 b, u64 p) {
  u64 s = a + b;
  return s >= p ? s - p : s;
}
inline u64 submod(u64 a, u64 b, u64 p) { return a >= b ? a - b : a + p - b; }
inline u64 powmod(u64 a, u64 e, u64 p) {
  u64 r = 1;
  a %= p;
  while (e) {
    if (e & 1) r = mulmod(r, a, p);
    a = mulmod(a, a, p);
    e >>= 1;
  }
  return r;
}
inline u64 invmod(u64 a, u64 p) { return powmod(a, p - 2, p); }

/// Deterministic Miller-Rabin for 64-bit integers.
inline bool is_prime(u64 n) {
  if (n < 2) return false;
  for (u64 q : {2ULL, 3ULL, 5ULL, 7ULL, 11ULL, 13ULL, 17ULL, 19ULL, 23ULL, 29ULL, 31ULL, 37ULL}) {
    if (n % q == 0) return n == q;
  }
  u64 dd = n - 1;
  int s = 0;
  while ((dd & 1) == 0) {
    dd >>= 1;
    ++s;
  }
  for (u64 a : {2ULL, 325ULL, 9375ULL, 28178ULL, 450775ULL, 9780504ULL, 1795265022ULL}) {
    u64 x = powmod(a % n, dd, n);
    if (a % n == 0 || x == 1 || x == n - 1) continue;
    bool composite = true;
    for (int r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

/// A prime p = 1 mod 4 in [2^61, 2^62) together with a square root of -1 mod p.
struct Field {
  u64 p = 0;
  u64 i = 0;
};

inline Field random_field(std::mt19937_64& rng) {
  std::uniform_int_distribution<u64> dist(1ULL << 61, (1ULL << 62) - 1);
  for (;;) {
    u64 c = (dist(rng) & ~3ULL) | 1ULL;
    if (!is_prime(c)) continue;
    for (u64 a = 2;; ++a) {
      u64 t = powmod(a, (c - 1) / 4, c);
      if (mulmod(t, t, c) == c - 1) return {c, t};
    }
  }
}

inline u64 reduce(const mpz_class& z, u64 p) {
  mpz_class r;
  mpz_fdiv_r_ui(r.get_mpz_t(), z.get_mpz_t(), static_cast<unsigned long>(p));
  return r.get_ui();
}

/// Image of a rational in Z_p; returns false when the denominator vanishes mod p.
inline bool reduce(const mpq_class& q, u64 p, u64& out) {
  u64 den = reduce(q.get_den(), p);
  if (den == 0) return false;
  out = mulmod(reduce(q.get_num(), p), invmod(den, p), p);
  return true;
}

inline bool reduce(const GaussianRational& z, const Field& f, u64& out) {
  u64 re = 0, im = 0;
  if (!reduce(z.re(), f.p, re) || !reduce(z.im(), f.p, im)) return false;
  out = addmod(re, mulmod(im, f.i, f.p), f.p);
  return true;
}

using Row = std::vector<std::pair<int, u64>>;  // sorted by column, nonzero values

/// Incremental echelon basis over Z_p keyed by leading column.
class Echelon {
 public:
  explicit Echelon(u64 p) : p_(p) {}

  /// Reduces the row against the basis; inserts it and returns true when independent.
  bool insert(Row row) {
    Row scratch;
    for (;;) {
      if (row.empty()) return false;
      auto it = pivots_.find(row.front().first);
      if (it == pivots_.end()) break;
      const u64 factor = row.front().second;
      axpy(row, it->second, factor, scratch);
      row.swap(scratch);
    }
    const u64 inv = invmod(row.front().second, p_);
    for (auto& [c, v] : row) v = mulmod(v, inv, p_);
    const int lead = row.front().first;
    pivots_.emplace(lead, std::move(row));
    return true;
  }
  int rank() const { return static_cast<int>(pivots_.size()); }

 private:
  // out = row - factor * pivot, where pivot has leading coefficient 1 on the same column.
  void axpy(const Row& row, const Row& pivot, u64 factor, Row& out) const {
    out.clear();
    out.reserve(row.size() + pivot.size());
    std::size_t a = 1, b = 1;
    while (a < row.size() || b < pivot.size()) {
      if (b >= pivot.size() || (a < row.size() && row[a].first < pivot[b].first)) {
        out.push_back(row[a++]);
      } else if (a >= row.size() || pivot[b].first < row[a].first) {
        out.emplace_back(pivot[b].first, submod(0, mulmod(factor, pivot[b].second, p_), p_));
        ++b;
      } else {
        u64 v = submod(row[a].second, mulmod(factor, pivot[b].second, p_), p_);
        if (v) out.emplace_back(row[a].first, v);
        ++a;
        ++b;
      }
    }
  }

  u64 p_;
  std::map<int, Row> pivots_;
};

/// Rank over Z_p with the independent row indices (greedy, in input order).
/// Returns false when some entry has a denominator divisible by p.
inline bool rank_mod_p(const std::vector<ExactRow>& rows, const Field& f, RankResult& out) {
  Echelon ech(f.p);
  out.rank = 0;
  out.independent_rows.clear();
  for (std::size_t r = 0; r < rows.size(); ++r) {
    Row row;
    row.reserve(rows[r].size());
    for (const auto& [c, v] : rows[r]) {
      u64 x = 0;
      if (!reduce(v, f, x)) return false;
      if (x) row.emplace_back(c, x);
    }
    std::sort(row.begin(), row.end());
    if (ech.insert(std::move(row))) out.independent_rows.push_back(static_cast<int>(r));
  }
  out.rank = ech.rank();
  return true;
}

}  // namespace modp

namespace detail {

/// Gaussian integer with mpz parts; used by the fraction-free elimination.
struct GaussInt {
  mpz_class re = 0, im = 0;
  bool is_zero() const { return sgn(re) == 0 && sgn(im) == 0; }
};

inline GaussInt mul(const GaussInt& a, const GaussInt& b) {
  return {a.re * b.re - a.im * b.im, a.re * b.im + a.im * b.re};
}
inline GaussInt sub(const GaussInt& a, const GaussInt& b) { return {a.re - b.re, a.im - b.im}; }
/// Exact quotient a/b in Z[i]; the caller guarantees divisibility.
inline GaussInt exact_div(const GaussInt& a, const GaussInt& b) {
  mpz_class n = b.re * b.re + b.im * b.im;
  GaussInt num = mul(a, GaussInt{b.re, -b.im});
  GaussInt q;
  mpz_divexact(q.re.get_mpz_t(), num.re.get_mpz_t(), n.get_mpz_t());
  mpz_divexact(q.im.get_mpz_t(), num.im.get_mpz_t(), n.get_mpz_t());
  return q;
}

}  // namespace detail

/// Fraction-free (Bareiss) rank over Q(i). Dense; intended for small matrices.
inline RankResult rank_bareiss(const std::vector<ExactRow>& rows, int ncols) {
  using detail::GaussInt;
  const int m = static_cast<int>(rows.size());
  std::vector<std::vector<GaussInt>> a(static_cast<std::size_t>(m),
                                       std::vector<GaussInt>(static_cast<std::size_t>(ncols)));
  for (int r = 0; r < m; ++r) {
    mpz_class l = 1;
    for (const auto& [c, v] : rows[static_cast<std::size_t>(r)]) {
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.re().get_den_mpz_t());
      mpz_lcm(l.get_mpz_t(), l.get_mpz_t(), v.im().get_den_mpz_t());
    }
    for (const auto& [c, v] : rows[static_cast<std::size_t>(r)]) {
      if (c < 0 || c >= ncols) throw Error("rank_bareiss: column index out of range");
      mpq_class re = v.re() * l, im = v.im() * l;
      a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = {re.get_num(), im.get_num()};
    }
  }
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int r = 0; r < m; ++r) perm[static_cast<std::size_t>(r)] = r;

  GaussInt prev{1, 0};
  int k = 0;
  for (int col = 0; col < ncols && k < m; ++col) {
    int piv = -1;
    for (int r = k; r < m; ++r)
      if (!a[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)].is_zero()) {
        piv = r;
        break;
      }
    if (piv < 0) continue;
    std::swap(a[static_cast<std::size_t>(k)], a[static_cast<std::size_t>(piv)]);
    std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(piv)]);
    const auto& pk = a[static_cast<std::size_t>(k)];
    for (int r = k + 1; r < m; ++r) {
      auto& row = a[static_cast<std::size_t>(r)];
      const GaussInt f = row[static_cast<std::size_t>(col)];
      for (int j = col + 1; j < ncols; ++j) {
        auto& x = row[static_cast<std::size_t>(j)];
        GaussInt t = sub(mul(pk[static_cast<std::size_t>(col)], x), mul(f, pk[static_cast<std::size_t>(j)]));
        x = exact_div(t, prev);
      }
      row[static_cast<std::size_t>(col)] = GaussInt{};
    }
    prev = pk[static_cast<std::size_t>(col)];
    ++k;
  }
  RankResult out;
  out.rank = k;
  out.method = "bareiss";
  out.independent_rows.assign(perm.begin(), perm.begin() + k);
  std::sort(out.independent_rows.begin(), out.independent_rows.end());
  return out;
}

/// Rank over Q(i) of a sparse exact matrix.
/// Small inputs use Bareiss; larger ones the rank over two random 62-bit primes, accepted when
/// they agree (a further prime is drawn on disagreement or an unlucky denominator).
inline RankResult exact_rank(const std::vector<ExactRow>& rows, int ncols, std::uint64_t seed = 0x5eed) {
  if (rows.empty() || ncols == 0) return RankResult{0, {}, "bareiss", {}};
  if (ncols <= 40 && rows.size() <= 120) return rank_bareiss(rows, ncols);

  std::mt19937_64 rng(seed);
  std::vector<RankResult> results;
  for (int attempt = 0; attempt < 8; ++attempt) {
    modp::Field f = modp::random_field(rng);
    RankResult r;
    if (!modp::rank_mod_p(rows, f, r)) continue;
    r.primes = {f.p};
    results.push_back(std::move(r));
    if (results.size() < 2) continue;
    // rank mod p never exceeds the rank over Q(i); keep the two largest and accept on agreement.
    std::sort(results.begin(), results.end(), [](const RankResult& a, const RankResult& b) { return a.rank > b.rank; });
    if (results[0].rank == results[1].rank) {
      RankResult out = results[0];
      out.method = "modular";
      out.primes = {results[0].primes[0], results[1].primes[0]};
      return out;
    }
  }
  throw NumericFailure("exact_rank: modular ranks did not agree across primes");
}

}  // namespace curvlab
