#pragma once

#include <random>
#include <vector>

#include "curvlab/curvlab.hpp"

namespace curvlab::testing {

using GR = GaussianRational;
using ExactPoly = Polynomial<GR>;

inline ExponentVector ev(std::vector<int> e) { return ExponentVector(std::move(e)); }

inline ExactPoly mono(std::vector<int> e, GR c = GR(1)) { return ExactPoly::monomial(ev(std::move(e)), c); }

inline GR gr(long p, long q = 1, long r = 0, long s = 1) { return GR(mpq_class(p, q), mpq_class(r, s)); }

inline GR random_gr(std::mt19937_64& rng, int span = 9) {
  std::uniform_int_distribution<int> num(-span, span), den(1, span);
  return GR(mpq_class(num(rng), den(rng)), mpq_class(num(rng), den(rng)));
}

/// Random polynomial with up to `terms` terms of degree <= max_deg (homogeneous of degree `exact_deg` if >= 0).
inline ExactPoly random_poly(std::mt19937_64& rng, int d, int max_deg, int terms, int exact_deg = -1) {
  std::uniform_int_distribution<int> deg(0, max_deg), var(0, d - 1);
  ExactPoly f(d);
  for (int t = 0; t < terms; ++t) {
    const int n = exact_deg >= 0 ? exact_deg : deg(rng);
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    for (int p = 0; p < n; ++p) ++e[static_cast<std::size_t>(var(rng))];
    f.add_term(ev(e), random_gr(rng));
  }
  return f;
}

/// Ideal of d variables generated by the given polynomials (rank 1, shift 0).
inline ExactPresentation ideal(int d, const std::vector<ExactPoly>& gens) {
  ExactPresentation P;
  P.spec = FreeModuleSpec{d, 1, {0}};
  for (const auto& g : gens) P.generators.push_back({{g}});
  return P;
}

inline ExactPresentation fixture(const std::string& name) {
  return find_fixture(name).presentation;
}

/// Random graded ideal: 1..max_gens random homogeneous generators of degree 1..max_deg.
inline ExactPresentation random_ideal(std::mt19937_64& rng, int d, int max_gens, int max_deg) {
  std::uniform_int_distribution<int> ng(1, max_gens), dg(1, max_deg), nt(1, 3);
  std::vector<ExactPoly> gens;
  const int count = ng(rng);
  for (int i = 0; i < count; ++i) {
    ExactPoly g(d);
    while (g.is_zero()) {
      std::uniform_int_distribution<int> num(-3, 3);
      const int deg = dg(rng), terms = nt(rng);
      std::uniform_int_distribution<int> var(0, d - 1);
      for (int t = 0; t < terms; ++t) {
        std::vector<int> e(static_cast<std::size_t>(d), 0);
        for (int p = 0; p < deg; ++p) ++e[static_cast<std::size_t>(var(rng))];
        g.add_term(ev(e), GR(num(rng)));
      }
    }
    gens.push_back(g);
  }
  return ideal(d, gens);
}

}  // namespace curvlab::testing
