#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace curvlab;
using namespace curvlab::testing;

namespace {

ExactPresentation monomial_ideal(int d, const std::vector<std::vector<int>>& gens) {
  std::vector<ExactPoly> g;
  for (const auto& e : gens) g.push_back(mono(e));
  return ideal(d, g);
}

ExactPresentation coordinate_ideal(int d) {
  std::vector<std::vector<int>> gens;
  for (int k = 0; k < d; ++k) {
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    e[static_cast<std::size_t>(k)] = 1;
    gens.push_back(e);
  }
  return monomial_ideal(d, gens);
}

bool divides(const std::vector<int>& g, const ExponentVector& a) {
  for (std::size_t k = 0; k < g.size(); ++k)
    if (a[static_cast<int>(k)] < g[k]) return false;
  return true;
}

// Brute-force defect spectrum of a monomial ideal: in the normalized monomial basis of M_n the shift
// sends e_a to sqrt((a_k+1)/(|a|+1)) e_{a+e_k}, so Delta^2 is diagonal with entries
// 1 - sum_{k : a-e_k in M} a_k/|a|.
std::vector<double> monomial_defect(int d, const std::vector<std::vector<int>>& gens, int n) {
  auto in_ideal = [&](const ExponentVector& a) {
    return std::any_of(gens.begin(), gens.end(), [&](const auto& g) { return divides(g, a); });
  };
  std::vector<double> out;
  for (const auto& a : monomials(d, n)) {
    if (!in_ideal(a)) continue;
    double v = 1.0;
    for (int k = 0; k < d && n > 0; ++k)
      if (a[k] > 0) {
        std::vector<int> prev(static_cast<std::size_t>(d));
        for (int j = 0; j < d; ++j) prev[static_cast<std::size_t>(j)] = a[j] - (j == k);
        if (in_ideal(ev(prev))) v -= static_cast<double>(a[k]) / n;
      }
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> eigenvalues(const Mat& X) {
  if (X.size() == 0) return {};
  Eigen::SelfAdjointEigenSolver<Mat> es(X, Eigen::EigenvaluesOnly);
  std::vector<double> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(v.begin(), v.end());
  return v;
}

// Frame operator of Phi_n in normalized coordinates of F_n.
Mat ambient_frame(const MetricBasis& b, int n, int dimF) {
  Mat F = Mat::Zero(dimF, dimF);
  for (const auto& el : b.at(n)) F += el.coords * el.coords.adjoint();
  return F;
}

Mat frame_matrix(const MetricBasis& b, int n, int dimF) {
  const auto& els = b.at(n);
  Mat S(dimF, static_cast<Eigen::Index>(els.size()));
  for (std::size_t i = 0; i < els.size(); ++i) S.col(static_cast<Eigen::Index>(i)) = els[i].coords;
  return S;
}

Mat random_unitary(std::mt19937_64& rng, int k) {
  std::normal_distribution<double> g;
  Mat A(k, k);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = cplx(g(rng), g(rng));
  Eigen::HouseholderQR<Mat> qr(A);
  return qr.householderQ() * Mat::Identity(k, k);
}

Polynomial<cplx> random_cpoly(std::mt19937_64& rng, int d, int max_deg) {
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> deg(0, max_deg), var(0, d - 1), nt(1, 4);
  Polynomial<cplx> p(d);
  const int terms = nt(rng);
  for (int t = 0; t < terms; ++t) {
    std::vector<int> e(static_cast<std::size_t>(d), 0);
    const int n = deg(rng);
    for (int i = 0; i < n; ++i) ++e[static_cast<std::size_t>(var(rng))];
    p.add_term(ev(e), cplx(g(rng), g(rng)));
  }
  return p;
}

}  // namespace

TEST(SubmoduleModel, PrincipalZ1Blocks) {
  const auto m = SubmoduleModel::build(fixture("z1_d2"), 4);
  ASSERT_EQ(m.dim(1), 1);
  EXPECT_NEAR(m.defect(1)(0, 0).real(), 1.0, 1e-12);
  const auto e2 = eigenvalues(m.defect(2));
  ASSERT_EQ(e2.size(), 2u);
  EXPECT_NEAR(e2[0], 0.0, 1e-12);
  EXPECT_NEAR(e2[1], 0.5, 1e-12);
}

TEST(SubmoduleModel, MatchesBruteForceOnMonomialIdeals) {
  const std::vector<std::pair<int, std::vector<std::vector<int>>>> cases = {
      {2, {{1, 0}}}, {2, {{1, 0}, {0, 1}}}, {2, {{2, 0}, {0, 2}}}, {2, {{2, 0}, {1, 1}}},
      {3, {{1, 1, 0}, {0, 0, 2}}}, {3, {{0, 1, 0}}}};
  for (const auto& [d, gens] : cases) {
    const auto m = SubmoduleModel::build(monomial_ideal(d, gens), 7);
    for (int n = 0; n <= 7; ++n) {
      const auto want = monomial_defect(d, gens, n);
      const auto got = eigenvalues(m.defect(n));
      ASSERT_EQ(got.size(), want.size()) << "n=" << n;
      for (std::size_t i = 0; i < want.size(); ++i) EXPECT_NEAR(got[i], want[i], 1e-10) << "n=" << n;
    }
  }
}

TEST(SubmoduleModel, CoordinateIdealDefect) {
  for (int d : {2, 3}) {
    const auto m = SubmoduleModel::build(coordinate_ideal(d), 5);
    EXPECT_EQ(m.dim(0), 0);
    EXPECT_LE((m.defect(1) - Mat::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-12);
    for (int n = 2; n <= 5; ++n) EXPECT_LE(m.defect(n).cwiseAbs().maxCoeff(), 1e-12) << n;
    EXPECT_EQ(m.defect_rank(), d);
  }
}

TEST(SubmoduleModel, UnitIdealIsWholeSpace) {
  const auto m = SubmoduleModel::build(ideal(2, {mono({0, 0})}), 4);
  EXPECT_NEAR(m.defect(0)(0, 0).real(), 1.0, 1e-12);
  for (int n = 1; n <= 4; ++n) EXPECT_LE(m.defect(n).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(SubmoduleModel, DefectPositivityOnFixtures) {
  for (const char* name : {"z1_d2", "even_d2", "maximal_ideal_d3", "veronese"}) {
    const auto m = SubmoduleModel::build(fixture(name), name == std::string("veronese") ? 4 : 8);
    bool first = true;
    for (int n = 0; n <= m.n_max(); ++n) {
      if (m.dim(n) == 0) continue;
      const auto e = eigenvalues(m.defect(n));
      EXPECT_GE(e.front(), -1e-10) << name << " n=" << n;
      EXPECT_LE(e.back(), 1.0 + 1e-9) << name << " n=" << n;
      if (first) EXPECT_LE((m.defect(n) - Mat::Identity(m.dim(n), m.dim(n))).cwiseAbs().maxCoeff(), 1e-10) << name;
      first = false;
    }
  }
}

TEST(SubmoduleModel, FiniteCodimensionRankBound) {
  // M = {f : f(0) = 0} in d = 2 has rank >= 2; here exactly d.
  const auto m = SubmoduleModel::build(fixture("maximal_ideal_d2"), 6);
  EXPECT_GE(m.defect_rank(), 2);
  EXPECT_EQ(m.defect_rank(), 2);
}

TEST(SubmoduleModel, RejectsNonIdeals) {
  EXPECT_THROW(SubmoduleModel::build(fixture("graph_d2_N1"), 4), InputError);
  EXPECT_THROW(SubmoduleModel::build(fixture("free_d2"), 4), InputError);
}

TEST(MetricBasis, CoordinateIdealGivesVariables) {
  for (int d : {2, 3}) {
    const auto m = SubmoduleModel::build(coordinate_ideal(d), 4);
    const auto b = metric_basis(m);
    EXPECT_EQ(b.size(), static_cast<std::size_t>(d));
    ASSERT_EQ(b.at(1).size(), static_cast<std::size_t>(d));
    std::vector<bool> seen(static_cast<std::size_t>(d), false);
    for (const auto& el : b.at(1)) {
      ASSERT_EQ(el.phi.size(), 1u);
      const auto& [a, c] = *el.phi.terms().begin();
      EXPECT_NEAR(std::abs(c), 1.0, 1e-12);
      for (int k = 0; k < d; ++k)
        if (a[k] == 1) seen[static_cast<std::size_t>(k)] = true;
    }
    for (bool s : seen) EXPECT_TRUE(s);
    EXPECT_LE(frame_residual(b, m, 1), 1e-12);
  }
}

TEST(MetricBasis, PrincipalZ1GivesZ1Z2Powers) {
  const auto m = SubmoduleModel::build(fixture("z1_d2"), 10);
  const auto b = metric_basis(m);
  for (int n = 1; n <= 10; ++n) {
    ASSERT_EQ(b.at(n).size(), 1u) << n;
    const auto& el = b.at(n).front();
    EXPECT_NEAR(el.lambda_sq, 1.0 / n, 1e-10);
    Polynomial<cplx> want = Polynomial<cplx>::monomial(ev({1, n - 1}), 1.0);
    double err = 0.0;
    for (const auto& [a, c] : el.phi.terms()) err = std::max(err, std::abs(c - want.coefficient(a)));
    err = std::max(err, std::abs(el.phi.coefficient(ev({1, n - 1})) - 1.0));
    EXPECT_LE(err, 1e-9) << "degree " << n;
    EXPECT_LE(frame_residual(b, m, n), 1e-10);
  }
}

TEST(MetricBasis, UnitIdealGivesOne) {
  const auto m = SubmoduleModel::build(ideal(2, {mono({0, 0})}), 4);
  const auto b = metric_basis(m);
  ASSERT_EQ(b.size(), 1u);
  ASSERT_EQ(b.at(0).size(), 1u);
  EXPECT_NEAR(std::abs(b.at(0).front().phi.coefficient(ev({0, 0})) - 1.0), 0.0, 1e-12);
}

TEST(MetricBasis, ElementsOrthogonalAndEigen) {
  const auto m = SubmoduleModel::build(fixture("even_d2"), 7);
  const auto b = metric_basis(m);
  for (const auto& [n, els] : b.by_degree) {
    for (std::size_t i = 0; i < els.size(); ++i) {
      EXPECT_NEAR(fock_norm_sq(els[i].phi), els[i].lambda_sq, 1e-10);
      EXPECT_NEAR(fock_norm_sq(els[i].psi), 1.0, 1e-10);
      const Vec Dv = m.defect(n) * els[i].m_coords;
      EXPECT_LE((Dv - els[i].lambda_sq * els[i].m_coords).cwiseAbs().maxCoeff(), 1e-10);
      for (std::size_t j = i + 1; j < els.size(); ++j)
        EXPECT_LE(std::abs(fock_inner(els[i].phi, els[j].phi)), 1e-10) << "degree " << n;
    }
  }
}

TEST(MetricBasis, FrameIdentityOnFixtures) {
  for (const char* name : {"z1_d2", "even_d2", "maximal_ideal_d2", "maximal_ideal_d3"}) {
    const auto m = SubmoduleModel::build(fixture(name), 8);
    const auto b = metric_basis(m);
    for (int n = 0; n <= 8; ++n) EXPECT_LE(frame_residual(b, m, n), 1e-8) << name << " n=" << n;
  }
  const auto m = SubmoduleModel::build(fixture("maximal_ideal_d2"), 4);
  const auto b = metric_basis(m);
  EXPECT_TRUE(b.at(3).empty());
  EXPECT_LE(frame_residual(b, m, 3), 1e-15);
}

TEST(MetricBasis, NearCutoffWarning) {
  const auto m = SubmoduleModel::build(fixture("z1_d2"), 6);
  const auto b = metric_basis(m, 0.3);
  EXPECT_EQ(b.count_through(6), 3u);
  EXPECT_FALSE(b.warnings.empty());
  EXPECT_TRUE(metric_basis(m).warnings.empty());
}

TEST(MetricBasis, RedundantGeneratorsGiveEquivalentBases) {
  const auto P1 = fixture("z1_d2");
  const auto P2 = ideal(2, {mono({1, 0}), mono({1, 1}), mono({2, 0}) + mono({1, 1})});
  const auto m1 = SubmoduleModel::build(P1, 6), m2 = SubmoduleModel::build(P2, 6);
  const auto b1 = metric_basis(m1), b2 = metric_basis(m2);
  for (int n = 0; n <= 6; ++n) {
    const int f = m1.space(n).dim_F();
    EXPECT_LE((ambient_frame(b1, n, f) - ambient_frame(b2, n, f)).cwiseAbs().maxCoeff(), 1e-10) << n;
    if (b1.at(n).empty()) continue;
    EXPECT_NO_THROW(frame_unitary(frame_matrix(b1, n, f), frame_matrix(b2, n, f))) << n;
  }
  // Even-subspace ideal with a redundant multiple of its generator.
  const auto E1 = fixture("even_d2");
  auto gens = std::vector<ExactPoly>{E1.generators[0].components[0],
                                     mono({1, 0, 0}) * E1.generators[0].components[0]};
  const auto n1 = SubmoduleModel::build(E1, 5), n2 = SubmoduleModel::build(ideal(3, gens), 5);
  const auto c1 = metric_basis(n1), c2 = metric_basis(n2);
  for (int n = 0; n <= 5; ++n) {
    const int f = n1.space(n).dim_F();
    EXPECT_LE((ambient_frame(c1, n, f) - ambient_frame(c2, n, f)).cwiseAbs().maxCoeff(), 1e-10) << n;
    if (!c1.at(n).empty()) EXPECT_NO_THROW(frame_unitary(frame_matrix(c1, n, f), frame_matrix(c2, n, f))) << n;
  }
}

TEST(MetricBasis, Contractivity) {
  std::mt19937_64 rng(21);
  for (const char* name : {"z1_d2", "even_d2", "maximal_ideal_d2"}) {
    const auto P = fixture(name);
    const auto m = SubmoduleModel::build(P, 5);
    const auto b = metric_basis(m);
    std::vector<Polynomial<cplx>> phis;
    for (const auto& [n, els] : b.by_degree)
      for (const auto& el : els) phis.push_back(el.phi);
    for (int t = 0; t < 100; ++t) {
      std::vector<Polynomial<cplx>> fs;
      for (std::size_t i = 0; i < phis.size(); ++i) fs.push_back(random_cpoly(rng, P.spec.d, 3));
      EXPECT_LE(contractivity_excess(phis, fs), 1e-9) << name;
    }
  }
}

TEST(InnerSequence, PrincipalZ1Examples) {
  const auto m = SubmoduleModel::build(fixture("z1_d2"), 30);
  const auto b = metric_basis(m);
  const auto rows = inner_sequence_profile(b, m, {{cplx(0.6), cplx(0.0)}, {cplx(0.6), cplx(0.5)}, {cplx(0), cplx(0)}}, 30);
  EXPECT_NEAR(rows[0].partial_sum, 0.36, 1e-12);
  EXPECT_NEAR(rows[0].oracle, 0.36, 1e-12);
  // sum_{k < 30} 0.36 * 0.25^k
  EXPECT_NEAR(rows[1].partial_sum, 0.36 * (1.0 - std::pow(0.25, 30)) / 0.75, 1e-12);
  EXPECT_NEAR(rows[1].partial_sum, 0.48, 1e-12);
  EXPECT_EQ(rows[2].partial_sum, 0.0);
  EXPECT_EQ(rows[2].oracle, 0.0);
}

TEST(InnerSequence, InteriorIdentityAtRandomPoints) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 0.7);
  for (const char* name : {"z1_d2", "even_d2"}) {
    const auto P = fixture(name);
    const int d = P.spec.d;
    const auto m = SubmoduleModel::build(P, 30);
    const auto b = metric_basis(m);
    std::vector<std::vector<cplx>> pts;
    for (int i = 0; i < 20; ++i) {
      auto z = sphere_point(d, rng);
      const double r = u(rng);
      for (auto& c : z) c *= r;
      pts.push_back(z);
    }
    for (const auto& row : inner_sequence_profile(b, m, pts, 30)) {
      EXPECT_LE(row.residual, row.tail_bound + row.rounding) << name;
      EXPECT_LE(row.rounding, 1e-9);
      EXPECT_LE(row.tail_bound, 1e-6);
      EXPECT_TRUE(row.monotone);
      EXPECT_LE(row.max_partial, 1.0 + 1e-8);
    }
  }
}

TEST(InnerSequence, RejectsBoundaryPoints) {
  const auto m = SubmoduleModel::build(fixture("z1_d2"), 4);
  const auto b = metric_basis(m);
  EXPECT_THROW(inner_sequence_profile(b, m, {{cplx(1.0), cplx(0.0)}}, 4), InputError);
  EXPECT_THROW(inner_sequence_profile(b, m, {{cplx(0.1), cplx(0.0)}}, 5), InputError);
}

TEST(Codimension, Examples) {
  const auto a = codimension_report(fixture("maximal_ideal_d2"), 6);
  EXPECT_TRUE(a.conclusive);
  EXPECT_TRUE(a.finite);
  EXPECT_EQ(a.codimension, 1);
  EXPECT_EQ(metric_basis(SubmoduleModel::build(fixture("maximal_ideal_d2"), 6)).size(), 2u);

  const auto b = codimension_report(monomial_ideal(2, {{2, 0}, {0, 2}}), 8);
  EXPECT_TRUE(b.finite);
  EXPECT_EQ(b.codimension, 4);

  const auto c = codimension_report(fixture("z1_d2"), 8);
  EXPECT_TRUE(c.conclusive);
  EXPECT_FALSE(c.finite);
  const auto basis = metric_basis(SubmoduleModel::build(fixture("z1_d2"), 8));
  for (int n = 1; n <= 8; ++n) EXPECT_EQ(basis.count_through(n), static_cast<std::size_t>(n));
}

TEST(Codimension, InconclusiveWhenTooShallow) {
  const auto r = codimension_report(monomial_ideal(2, {{3, 0}, {0, 3}}), 3);
  EXPECT_FALSE(r.conclusive);
}

TEST(FrameUnitary, Examples) {
  const Mat S = Mat::Identity(2, 2);
  EXPECT_LE((frame_unitary(S, S) - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  Mat T(2, 2);
  const double h = 1.0 / std::sqrt(2.0);
  T << h, h, h, -h;
  const Mat W = frame_unitary(S, T);
  // eta_i = sum_j W(i,j) xi_j
  for (int i = 0; i < 2; ++i) {
    Vec eta = Vec::Zero(2);
    for (int j = 0; j < 2; ++j) eta += W(i, j) * S.col(j);
    EXPECT_LE((eta - T.col(i)).cwiseAbs().maxCoeff(), 1e-12);
  }
  Mat e1 = Mat::Zero(2, 1), twice = Mat::Zero(2, 1);
  e1(0, 0) = 1.0;
  twice(0, 0) = 2.0;
  EXPECT_THROW(frame_unitary(e1, twice), Error);
  Mat dep(2, 2);
  dep << 1, 1, 0, 0;
  EXPECT_THROW(frame_unitary(dep, dep), InputError);
}

TEST(FrameUnitary, RecoversRandomMixing) {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> g;
  std::uniform_int_distribution<int> kd(1, 5);
  for (int t = 0; t < 100; ++t) {
    const int k = kd(rng), n = k + kd(rng);
    Mat S(n, k);
    for (Eigen::Index i = 0; i < S.size(); ++i) S.data()[i] = cplx(g(rng), g(rng));
    const Mat U = random_unitary(rng, k);
    // eta_i = sum_j U(i,j) xi_j
    const Mat T = S * U.transpose();
    const Mat W = frame_unitary(S, T);
    EXPECT_LE((S * W.transpose() - T).cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LE((W * W.adjoint() - Mat::Identity(k, k)).cwiseAbs().maxCoeff(), 1e-8);
    Mat Tbad = T;
    Tbad.col(0) *= 1.5;
    EXPECT_THROW(frame_unitary(S, Tbad), Error);
  }
}
