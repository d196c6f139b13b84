#pragma once

#include <gmpxx.h>

#include <map>
#include <utility>

#include "curvlab/errors.hpp"

namespace curvlab {

/// q_k(x) = (x+1)(x+2)...(x+k)/k!, with q_0 = 1. Integer-valued on the integers.
inline mpq_class q_poly(int k, const mpq_class& x) {
  if (k < 0) throw InputError("q_poly: k must be >= 0");
  mpq_class v = 1;
  for (int j = 1; j <= k; ++j) v *= (x + j) / mpq_class(j);
  v.canonicalize();
  return v;
}

inline mpz_class q_poly_int(int k, long x) {
  if (k < 0) throw InputError("q_poly: k must be >= 0");
  mpz_class num = 1;
  mpz_class den = 1;
  for (int j = 1; j <= k; ++j) {
    num *= x + j;
    den *= j;
  }
  return num / den;  // exact: k consecutive integers are divisible by k!
}

inline double q_poly_double(int k, double x) {
  double v = 1.0;
  for (int j = 1; j <= k; ++j) v *= (x + j) / j;
  return v;
}

/// Memoized q_k(x) values on the integers.
class QPolynomialTable {
 public:
  const mpz_class& operator()(int k, long x) {
    auto key = std::make_pair(k, x);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, q_poly_int(k, x)).first;
    return it->second;
  }
  std::size_t size() const { return cache_.size(); }

 private:
  std::map<std::pair<int, long>, mpz_class> cache_;
};

}  // namespace curvlab
