#pragma once

#include <string>
#include <utility>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/presentation.hpp"

namespace curvlab {

struct Fixture {
  std::string name;
  std::string description;
  ExactPresentation presentation;
};

namespace detail {

using Term = std::pair<std::vector<int>, long>;

inline Polynomial<GaussianRational> poly(int d, const std::vector<Term>& terms) {
  Polynomial<GaussianRational> p(d);
  for (const auto& [e, c] : terms) p.add_term(ExponentVector(e), GaussianRational(c));
  return p;
}

inline std::vector<int> unit(int d, int k, int power = 1) {
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  e[static_cast<std::size_t>(k)] = power;
  return e;
}

inline std::vector<int> pair_exp(int d, int a, int b) {
  std::vector<int> e(static_cast<std::size_t>(d), 0);
  ++e[static_cast<std::size_t>(a)];
  ++e[static_cast<std::size_t>(b)];
  return e;
}

inline ExactPresentation ideal(int d, std::vector<Polynomial<GaussianRational>> gens) {
  ExactPresentation P;
  P.spec = {d, 1, {0}};
  for (auto& g : gens) P.generators.push_back({{std::move(g)}});
  return P;
}

inline ExactPresentation free_module(int d) { return ideal(d, {}); }

inline ExactPresentation maximal_ideal(int d) {
  std::vector<Polynomial<GaussianRational>> gens;
  for (int k = 0; k < d; ++k) gens.push_back(poly(d, {{unit(d, k), 1}}));
  return ideal(d, std::move(gens));
}

// Quadratic minor z_a z_b - z_c z_e (0-based variable indices).
inline Polynomial<GaussianRational> minor(int a, int b, int c, int e) {
  return poly(6, {{pair_exp(6, a, b), 1}, {pair_exp(6, c, e), -1}});
}

inline ExactPresentation graph(int N) {
  ExactPresentation P;
  P.spec = {2, 2, {0, -N}};
  P.generators.push_back({{poly(2, {{{0, 0}, 1}}), poly(2, {{{N, 0}, 1}})}});
  return P;
}

}  // namespace detail

/// Built-in fixtures, in listing order.
inline std::vector<Fixture> fixture_registry() {
  using namespace detail;
  std::vector<Fixture> out;
  for (int d = 1; d <= 4; ++d)
    out.push_back({"free_d" + std::to_string(d), "free module H^2 in d=" + std::to_string(d) + ", rank 1",
                   free_module(d)});
  for (int d = 2; d <= 3; ++d)
    out.push_back({"maximal_ideal_d" + std::to_string(d), "ideal (z1,...,zd) in d=" + std::to_string(d),
                   maximal_ideal(d)});
  out.push_back({"z1_d2", "principal ideal (z1) in d=2", ideal(2, {poly(2, {{{1, 0}, 1}})})});
  out.push_back({"even_d2", "ideal (z3^2 - z1 z2) in d=3; quotient models the even functions in two variables",
                 ideal(3, {poly(3, {{{0, 0, 2}, 1}, {{1, 1, 0}, -1}})})});
  // Symmetric catalecticant [[z1,z4,z5],[z4,z2,z6],[z5,z6,z3]]; the quotient is the even part of H^2 in d=3.
  out.push_back({"veronese", "vanishing ideal of the quadratic Veronese cone in d=6 (six 2x2 minors)",
                 ideal(6, {minor(0, 1, 3, 3), minor(0, 2, 4, 4), minor(1, 2, 5, 5), minor(0, 5, 3, 4),
                           minor(1, 4, 3, 5), minor(2, 3, 4, 5)})});
  for (int N = 1; N <= 2; ++N)
    out.push_back({"graph_d2_N" + std::to_string(N),
                   "graph {(f, z1^" + std::to_string(N) + " f)} in H^2 (+) H^2 with shifts [0,-" + std::to_string(N) +
                       "], d=2",
                   graph(N)});
  return out;
}

inline Fixture find_fixture(const std::string& name) {
  for (auto& f : fixture_registry())
    if (f.name == name) return f;
  throw InputError("unknown fixture '" + name + "'");
}

}  // namespace curvlab
