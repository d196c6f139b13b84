#pragma once

#include <gmpxx.h>
#include <json.hpp>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/qpoly.hpp"

namespace curvlab {

/// Integer sequence a_n for n = offset, offset+1, ...
struct RankSequence {
  enum class Meaning { PerDegree, Cumulative };
  int offset = 0;
  std::vector<long> values;
  Meaning meaning = Meaning::PerDegree;

  int last() const { return offset + static_cast<int>(values.size()) - 1; }
  long at(int n) const { return values.at(static_cast<std::size_t>(n - offset)); }
  bool operator==(const RankSequence&) const = default;
};

/// Partial sums of a per-degree sequence.
inline RankSequence cumulate(const RankSequence& seq) {
  if (seq.meaning != RankSequence::Meaning::PerDegree) throw InputError("cumulate expects a per-degree sequence");
  RankSequence out{seq.offset, {}, RankSequence::Meaning::Cumulative};
  long acc = 0;
  for (long v : seq.values) out.values.push_back(acc += v);
  return out;
}

struct HilbertProfile {
  std::vector<mpq_class> c;  // c_0 .. c_d in the q-basis
  int stabilized_at = 0;     // a_n = sum_k c_k q_k(n) for all n >= stabilized_at in the data
  int offset = 0;
  std::vector<long> transient;  // a_n for offset <= n < stabilized_at
  mpq_class chi;                // c_d
  std::optional<int> degree;    // largest k with c_k != 0; empty for the zero module
  mpq_class mu;                 // c_degree
  std::string filtration = "cumulative-dims";

  mpq_class value(long n) const {
    mpq_class v = 0;
    for (std::size_t k = 0; k < c.size(); ++k) v += c[k] * q_poly(static_cast<int>(k), n);
    return v;
  }
  bool operator==(const HilbertProfile&) const = default;
};

namespace detail {

// Solves the square rational system A x = b exactly (A invertible).
inline std::vector<mpq_class> solve_exact(std::vector<std::vector<mpq_class>> A, std::vector<mpq_class> b) {
  const std::size_t m = b.size();
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    while (piv < m && sgn(A[piv][col]) == 0) ++piv;
    if (piv == m) throw Error("solve_exact: singular system");
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = 0; r < m; ++r) {
      if (r == col || sgn(A[r][col]) == 0) continue;
      const mpq_class f = A[r][col] / A[col][col];
      for (std::size_t k = col; k < m; ++k) A[r][k] -= f * A[col][k];
      b[r] -= f * b[col];
    }
  }
  std::vector<mpq_class> x(m);
  for (std::size_t i = 0; i < m; ++i) x[i] = b[i] / A[i][i];
  return x;
}

}  // namespace detail

/// Fits a_n = sum_{k<m} c_k q_k(n) on the tail of the sequence, where m is the smallest order whose
/// trailing m-th forward differences vanish on `window` consecutive positions (m <= d+1).
inline HilbertProfile fit_hilbert_polynomial(const RankSequence& seq, int d, int window = 3) {
  if (d < 0) throw InputError("fit: d must be >= 0");
  if (window < 1) throw InputError("fit: window must be >= 1");
  const int L = static_cast<int>(seq.values.size());
  std::vector<mpz_class> diff(seq.values.begin(), seq.values.end());
  int order = -1;
  for (int m = 0; m <= d + 1 && m < L; ++m) {
    if (m > 0) {
      for (std::size_t i = 0; i + 1 < diff.size(); ++i) diff[i] = diff[i + 1] - diff[i];
      diff.pop_back();
    }
    if (static_cast<int>(diff.size()) < window) break;
    bool zero = true;
    for (int i = 0; i < window; ++i) zero = zero && sgn(diff[diff.size() - 1 - static_cast<std::size_t>(i)]) == 0;
    if (zero) {
      order = m;
      break;
    }
  }
  if (order < 0)
    throw NotStabilized("sequence not stabilized by degree " + std::to_string(seq.last()) +
                        " (no polynomial of degree <= " + std::to_string(d) + " fits the last " +
                        std::to_string(window) + " differences); raise --max-degree");

  HilbertProfile prof;
  prof.offset = seq.offset;
  prof.c.assign(static_cast<std::size_t>(d + 1), mpq_class(0));
  if (order > 0) {
    std::vector<std::vector<mpq_class>> A;
    std::vector<mpq_class> b;
    for (int i = 0; i < order; ++i) {
      const int n = seq.last() - i;
      auto& row = A.emplace_back();
      for (int k = 0; k < order; ++k) row.push_back(q_poly(k, n));
      b.emplace_back(seq.at(n));
    }
    auto x = detail::solve_exact(std::move(A), std::move(b));
    for (int k = 0; k < order; ++k) prof.c[static_cast<std::size_t>(k)] = x[static_cast<std::size_t>(k)];
  }
  for (const auto& ck : prof.c)
    if (ck.get_den() != 1) throw NumericFailure("fit mismatch: non-integral coefficient " + ck.get_str());

  int nstar = seq.last() + 1;
  while (nstar > seq.offset && prof.value(nstar - 1) == seq.at(nstar - 1)) --nstar;
  prof.stabilized_at = nstar;
  for (int n = seq.offset; n < nstar; ++n) prof.transient.push_back(seq.at(n));
  prof.chi = prof.c[static_cast<std::size_t>(d)];
  for (int k = d; k >= 0; --k)
    if (sgn(prof.c[static_cast<std::size_t>(k)]) != 0) {
      prof.degree = k;
      prof.mu = prof.c[static_cast<std::size_t>(k)];
      break;
    }
  return prof;
}

/// c(M) = d! lim a_n / n^d, the top coefficient of the fit.
inline mpq_class c_invariant(const RankSequence& cumulative, int d, int window = 3) {
  return fit_hilbert_polynomial(cumulative, d, window).chi;
}

/// Partial fractions sum_n a_n t^n = p(t) + sum_k c_k / (1-t)^{k+1}; p is a Laurent polynomial
/// with exponents from offset up to stabilized_at - 1.
struct GeneratingFunction {
  int p_offset = 0;
  std::vector<mpq_class> p;      // coefficient of t^{p_offset + i}
  std::vector<mpq_class> poles;  // poles[k] multiplies 1/(1-t)^{k+1}

  /// Taylor/Laurent coefficient of t^n.
  mpq_class coefficient(long n) const {
    mpq_class v = 0;
    const long i = n - p_offset;
    if (i >= 0 && i < static_cast<long>(p.size())) v += p[static_cast<std::size_t>(i)];
    if (n >= 0)
      for (std::size_t k = 0; k < poles.size(); ++k) v += poles[k] * q_poly(static_cast<int>(k), n);
    return v;
  }
  std::string str() const {
    std::string s;
    auto add = [&s](const mpq_class& c, const std::string& what) {
      if (sgn(c) == 0) return;
      if (!s.empty()) s += sgn(c) > 0 ? " + " : " - ";
      else if (sgn(c) < 0) s += "-";
      s += mpq_class(abs(c)).get_str() + what;
    };
    for (std::size_t i = 0; i < p.size(); ++i) {
      const long e = p_offset + static_cast<long>(i);
      add(p[i], e == 0 ? "" : "*t^" + std::to_string(e));
    }
    for (std::size_t k = 0; k < poles.size(); ++k)
      add(poles[k], k == 0 ? "/(1-t)" : "/(1-t)^" + std::to_string(k + 1));
    return s.empty() ? "0" : s;
  }
};

inline GeneratingFunction generating_function(const HilbertProfile& prof) {
  GeneratingFunction g;
  g.poles = prof.c;
  g.p_offset = prof.offset;
  // Negative degrees never receive pole contributions, so they stay in p even past stabilization.
  const long end = std::max<long>(prof.stabilized_at, 0);
  for (long n = prof.offset; n < end; ++n) {
    const long i = n - prof.offset;
    mpq_class v = i < static_cast<long>(prof.transient.size()) ? mpq_class(prof.transient[static_cast<std::size_t>(i)])
                                                              : prof.value(n);
    if (n >= 0) v -= prof.value(n);
    g.p.push_back(v);
  }
  while (!g.p.empty() && sgn(g.p.back()) == 0) g.p.pop_back();
  std::size_t lead = 0;
  while (lead < g.p.size() && sgn(g.p[lead]) == 0) ++lead;
  g.p.erase(g.p.begin(), g.p.begin() + static_cast<long>(lead));
  g.p_offset += static_cast<int>(lead);
  if (g.p.empty()) g.p_offset = 0;
  return g;
}

inline nlohmann::json profile_to_json(const HilbertProfile& p) {
  nlohmann::json c = nlohmann::json::array();
  for (const auto& x : p.c) c.push_back(x.get_str());
  nlohmann::json j{{"c", c},
                   {"chi", p.chi.get_str()},
                   {"mu", p.mu.get_str()},
                   {"stabilized_at", p.stabilized_at},
                   {"offset", p.offset},
                   {"transient", p.transient},
                   {"filtration", p.filtration}};
  if (p.degree)
    j["degree"] = *p.degree;
  else
    j["degree"] = "zero-module";
  return j;
}

inline HilbertProfile profile_from_json(const nlohmann::json& j) {
  HilbertProfile p;
  for (const auto& x : j.at("c")) p.c.emplace_back(x.get<std::string>());
  p.chi = mpq_class(j.at("chi").get<std::string>());
  p.mu = mpq_class(j.at("mu").get<std::string>());
  p.stabilized_at = j.at("stabilized_at").get<int>();
  p.offset = j.at("offset").get<int>();
  p.transient = j.at("transient").get<std::vector<long>>();
  p.filtration = j.at("filtration").get<std::string>();
  if (j.at("degree").is_number_integer()) p.degree = j.at("degree").get<int>();
  return p;
}

}  // namespace curvlab
