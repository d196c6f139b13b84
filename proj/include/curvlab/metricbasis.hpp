#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/graded_space.hpp"
#include "curvlab/oplab.hpp"
#include "curvlab/parallel.hpp"
#include "curvlab/presentation.hpp"

namespace curvlab {

/// Float model of a graded ideal M = [I] in H^2: orthonormal bases of M_n, multiplication blocks and defect blocks.
class SubmoduleModel {
 public:
  template <class S>
  static SubmoduleModel build(const GradedPresentation<S>& P, int n_max, int threads = 1) {
    const ValidationReport rep = validated(P);
    if (P.spec.r != 1 || P.spec.shifts[0] != 0) throw InputError("metric basis needs an ideal: rank 1 with shift 0");
    bool any = false;
    for (const auto& g : P.generators) any = any || !g.is_zero();
    if (!any) throw InputError("metric basis needs a nonzero generator list");
    if (n_max < 1) throw InputError("max degree must be >= 1");
    SubmoduleModel m;
    m.d_ = P.spec.d;
    m.n_max_ = n_max;
    m.spaces_.resize(static_cast<std::size_t>(n_max + 1));
    parallel_for(0, n_max + 1, threads, [&](int n) { m.spaces_[static_cast<std::size_t>(n)] = decompose_degree(P, rep, n, true); });
    m.A_.assign(static_cast<std::size_t>(m.d_), std::vector<Mat>(static_cast<std::size_t>(n_max + 1)));
    parallel_for(1, n_max + 1, threads, [&](int n) {
      const DegreeSpace& a = m.spaces_[static_cast<std::size_t>(n - 1)];
      const DegreeSpace& b = m.spaces_[static_cast<std::size_t>(n)];
      for (int k = 0; k < m.d_; ++k) {
        Mat blk = Mat::Zero(b.dim_M, a.dim_M);
        if (a.dim_M > 0 && b.dim_M > 0) blk = b.onb_M.adjoint() * (shift_matrix(a.basis, b.basis, k) * a.onb_M);
        m.A_[static_cast<std::size_t>(k)][static_cast<std::size_t>(n)] = std::move(blk);
      }
    });
    for (int n = 0; n <= n_max; ++n) {
      Mat D = Mat::Identity(m.dim(n), m.dim(n));
      if (n > 0)
        for (int k = 0; k < m.d_; ++k) D -= m.A(k, n) * m.A(k, n).adjoint();
      m.defect_.push_back(std::move(D));
    }
    return m;
  }

  int d() const { return d_; }
  int n_max() const { return n_max_; }
  int dim(int n) const { return space(n).dim_M; }
  const DegreeSpace& space(int n) const { return spaces_.at(static_cast<std::size_t>(n)); }
  /// Multiplication by z_k from M_{n-1} to M_n in the orthonormal bases.
  const Mat& A(int k, int n) const { return A_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(n)); }
  const Mat& defect(int n) const { return defect_.at(static_cast<std::size_t>(n)); }
  int defect_rank() const {
    int r = 0;
    for (const auto& D : defect_) r += hermitian_rank(D);
    return r;
  }

 private:
  int d_ = 1, n_max_ = 0;
  std::vector<DegreeSpace> spaces_;
  std::vector<std::vector<Mat>> A_;
  std::vector<Mat> defect_;
};

struct MetricBasisElement {
  int degree = 0;
  double lambda_sq = 0.0;
  Vec coords;     // phi in normalized coordinates of F_n
  Vec m_coords;   // phi in the orthonormal basis of M_n
  Polynomial<cplx> phi{1};
  Polynomial<cplx> psi{1};
};

struct MetricBasis {
  int d = 1;
  double cutoff = 0.0;
  std::map<int, std::vector<MetricBasisElement>> by_degree;
  std::vector<std::string> warnings;

  std::size_t size() const {
    std::size_t s = 0;
    for (const auto& [n, v] : by_degree) s += v.size();
    return s;
  }
  /// Number of elements of degree <= n.
  std::size_t count_through(int n) const {
    std::size_t s = 0;
    for (const auto& [deg, v] : by_degree)
      if (deg <= n) s += v.size();
    return s;
  }
  const std::vector<MetricBasisElement>& at(int n) const {
    static const std::vector<MetricBasisElement> none;
    auto it = by_degree.find(n);
    return it == by_degree.end() ? none : it->second;
  }
};

namespace detail {

inline Polynomial<cplx> coords_to_poly(const DegreeSpace& sp, const Vec& x, double floor) {
  Polynomial<cplx> p(sp.basis.elements.empty() ? 1 : sp.basis.elements.front().exponent.dim());
  const Vec c = sp.to_coefficients(x);
  for (int i = 0; i < c.size(); ++i)
    if (std::abs(c(i)) > floor) p.add_term(sp.basis.elements[static_cast<std::size_t>(i)].exponent, c(i));
  return p;
}

}  // namespace detail

/// Degreewise eigendecomposition of Delta^2: each eigenpair with lambda^2 above the cutoff gives
/// phi = lambda psi. Phase convention: the first coordinate of psi with modulus above 1e-12 is real positive.
inline MetricBasis metric_basis(const SubmoduleModel& m, double rel_cutoff = 1e-10) {
  MetricBasis out;
  out.d = m.d();
  double top = 0.0;
  for (int n = 0; n <= m.n_max(); ++n)
    if (m.dim(n) > 0) {
      Eigen::SelfAdjointEigenSolver<Mat> es(m.defect(n), Eigen::EigenvaluesOnly);
      top = std::max(top, es.eigenvalues().maxCoeff());
    }
  out.cutoff = rel_cutoff * std::max(1.0, top);
  for (int n = 0; n <= m.n_max(); ++n) {
    if (m.dim(n) == 0) continue;
    const DegreeSpace& sp = m.space(n);
    Eigen::SelfAdjointEigenSolver<Mat> es(m.defect(n));
    // Largest eigenvalue first.
    for (Eigen::Index i = es.eigenvalues().size() - 1; i >= 0; --i) {
      const double l2 = es.eigenvalues()(i);
      if (l2 > out.cutoff / 10 && l2 < out.cutoff * 10)
        out.warnings.push_back("degree " + std::to_string(n) + ": eigenvalue " + std::to_string(l2) +
                               " within a factor 10 of the cutoff");
      if (l2 <= out.cutoff) continue;
      Vec v = es.eigenvectors().col(i);
      Vec amb = sp.onb_M * v;
      for (Eigen::Index j = 0; j < amb.size(); ++j)
        if (std::abs(amb(j)) > 1e-12) {
          const cplx phase = std::conj(amb(j)) / std::abs(amb(j));
          amb *= phase;
          v *= phase;
          break;
        }
      MetricBasisElement el;
      el.degree = n;
      el.lambda_sq = l2;
      el.m_coords = std::sqrt(l2) * v;
      el.coords = std::sqrt(l2) * amb;
      el.psi = detail::coords_to_poly(sp, amb, 1e-14);
      el.phi = detail::coords_to_poly(sp, el.coords, 1e-14);
      out.by_degree[n].push_back(std::move(el));
    }
  }
  return out;
}

/// || sum_{phi in Phi_n} phi phi^dagger - Delta^2_n ||_max in the orthonormal coordinates of M_n.
inline double frame_residual(const MetricBasis& b, const SubmoduleModel& m, int n) {
  if (n < 0 || n > m.n_max()) throw InputError("frame_residual: degree outside the model");
  Mat F = Mat::Zero(m.dim(n), m.dim(n));
  for (const auto& el : b.at(n)) F += el.m_coords * el.m_coords.adjoint();
  if (F.size() == 0) return 0.0;
  return (F - m.defect(n)).cwiseAbs().maxCoeff();
}

struct InnerSequenceRow {
  std::vector<cplx> point;
  int D = 0;
  double partial_sum = 0.0;  // s_D(z) = sum_{deg phi <= D} |phi(z)|^2
  double oracle = 0.0;       // (1-|z|^2) sum_{n<=D} ||P_{M_n} kappa_n(z)||^2
  double residual = 0.0;
  double tail_bound = 0.0;   // |z|^{2(D+1)} / (1-|z|^2)
  double rounding = 0.0;     // floating-point allowance: 16 eps (terms summed) max(1, s_D)
  bool monotone = true;      // s_0 <= s_1 <= ... <= s_D
  double max_partial = 0.0;  // max_D s_D
};

/// Interior identity for the metric basis: s_D(z) - oracle(z) = |z|^2 ||P_{M_D} kappa_D(z)||^2, which lies
/// in [0, |z|^{2(D+1)}].
inline std::vector<InnerSequenceRow> inner_sequence_profile(const MetricBasis& b, const SubmoduleModel& m,
                                                            const std::vector<std::vector<cplx>>& points, int D) {
  if (D > m.n_max()) throw InputError("inner_sequence_profile: D exceeds the model degree");
  std::vector<InnerSequenceRow> out;
  for (const auto& z : points) {
    if (static_cast<int>(z.size()) != m.d()) throw InputError("point has the wrong dimension");
    double r2 = 0.0;
    for (const auto& c : z) r2 += std::norm(c);
    if (r2 >= 1.0) throw InputError("inner-sequence identity needs |z| < 1");
    InnerSequenceRow row;
    row.point = z;
    row.D = D;
    double s = 0.0, g = 0.0, prev = 0.0;
    long terms = 0;
    for (int n = 0; n <= D; ++n) {
      for (const auto& el : b.at(n)) {
        s += std::norm(evaluate(el.phi, std::span<const cplx>(z)));
        terms += static_cast<long>(el.phi.size());
      }
      if (s < prev - 1e-14) row.monotone = false;
      prev = s;
      row.max_partial = std::max(row.max_partial, s);
      if (m.dim(n) == 0) continue;
      const DegreeSpace& sp = m.space(n);
      Vec kappa(sp.dim_F());
      for (int i = 0; i < sp.dim_F(); ++i) {
        const auto& a = sp.basis.elements[static_cast<std::size_t>(i)].exponent;
        cplx mono = 1.0;
        for (int k = 0; k < m.d(); ++k)
          for (int p = 0; p < a[k]; ++p) mono *= z[static_cast<std::size_t>(k)];
        kappa(i) = std::conj(mono) / sp.sqrt_w(i);
      }
      g += (sp.onb_M.adjoint() * kappa).squaredNorm();
      terms += static_cast<long>(sp.dim_F()) + sp.dim_M;
    }
    row.partial_sum = s;
    row.oracle = (1.0 - r2) * g;
    row.residual = std::abs(s - row.oracle);
    row.tail_bound = std::pow(r2, D + 1) / (1.0 - r2);
    row.rounding = 16.0 * std::numeric_limits<double>::epsilon() * static_cast<double>(terms + 1) * std::max(1.0, s);
    out.push_back(std::move(row));
  }
  return out;
}

struct CodimensionReport {
  std::vector<long> dims_quotient;  // dim (A/I)_n, n = 0..n_max
  bool conclusive = false;
  bool finite = false;
  long codimension = -1;            // total when finite
  std::optional<int> vanishing_from;
  std::string note;
};

/// Finite codimension is declared once dim (A/I)_n vanishes on d+1 consecutive degrees.
template <class S>
CodimensionReport codimension_report(const GradedPresentation<S>& P, int n_max) {
  if (P.spec.r != 1 || P.spec.shifts[0] != 0) throw InputError("codimension report needs an ideal");
  const DimensionTable t = quotient_dims(P, n_max);
  CodimensionReport rep;
  rep.dims_quotient = t.dims_H;
  const int need = P.spec.d + 1;
  int run = 0;
  for (int n = 0; n <= n_max; ++n) {
    run = t.H(n) == 0 ? run + 1 : 0;
    if (run == need) {
      rep.conclusive = rep.finite = true;
      rep.vanishing_from = n - need + 1;
      rep.codimension = 0;
      for (int k = 0; k < *rep.vanishing_from; ++k) rep.codimension += t.H(k);
      rep.note = "dim (A/I)_n = 0 on " + std::to_string(need) + " consecutive degrees";
      return rep;
    }
  }
  // A graded quotient of A with one vanishing piece vanishes from there on; infinite codimension is
  // declared when every computed piece is nonzero and the last d+1 pieces do not decrease.
  bool growing = n_max + 1 >= need;
  for (int n = n_max - need + 2; growing && n <= n_max; ++n) growing = t.H(n) > 0 && t.H(n) >= t.H(n - 1);
  if (growing) {
    rep.conclusive = true;
    rep.finite = false;
    rep.note = "dim (A/I)_n > 0 through degree " + std::to_string(n_max);
  } else {
    rep.note = "inconclusive: raise max degree";
  }
  return rep;
}

/// Unitary W with eta_i = sum_j W(i,j) xi_j for frames xi (columns of S) and eta (columns of T) with equal
/// frame operators, via polar decompositions. Throws InputError for dependent input and Error("not equivalent").
inline Mat frame_unitary(const Mat& S, const Mat& T, double tol = 1e-8) {
  if (S.rows() != T.rows() || S.cols() != T.cols()) throw InputError("frame_unitary: frames have different shapes");
  const Eigen::Index k = S.cols();
  if (k == 0) return Mat(0, 0);
  auto check_independent = [&](const Mat& X) {
    Eigen::JacobiSVD<Mat> svd(X);
    const auto& s = svd.singularValues();
    if (X.cols() > X.rows() || s(s.size() - 1) <= 1e-10 * std::max(1.0, s(0)))
      throw InputError("frame_unitary: vectors are linearly dependent");
  };
  check_independent(S);
  check_independent(T);
  const double mismatch = (S * S.adjoint() - T * T.adjoint()).cwiseAbs().maxCoeff();
  if (mismatch > tol) throw Error("not equivalent: frame operators differ by " + std::to_string(mismatch));
  auto inv_sqrt = [](const Mat& G) {
    Eigen::SelfAdjointEigenSolver<Mat> es(G);
    return Mat(es.eigenvectors() * es.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * es.eigenvectors().adjoint());
  };
  const Mat UA = S * inv_sqrt(S.adjoint() * S);
  const Mat VB = T * inv_sqrt(T.adjoint() * T);
  const Mat W = UA.adjoint() * VB;  // T = S W
  const Mat out = W.transpose();
  const double residual = (T - S * W).cwiseAbs().maxCoeff();
  if (residual > tol) throw NumericFailure("frame_unitary: residual " + std::to_string(residual));
  return out;
}

/// ||phi_1 f_1 + ... + phi_r f_r||^2 - (||f_1||^2 + ... + ||f_r||^2); contractivity means this is <= 0.
inline double contractivity_excess(const std::vector<Polynomial<cplx>>& phis, const std::vector<Polynomial<cplx>>& fs) {
  if (phis.size() != fs.size()) throw InputError("contractivity_excess: length mismatch");
  if (phis.empty()) return 0.0;
  Polynomial<cplx> acc(phis.front().dim());
  double rhs = 0.0;
  for (std::size_t i = 0; i < phis.size(); ++i) {
    acc += phis[i] * fs[i];
    rhs += fock_norm_sq(fs[i]);
  }
  return fock_norm_sq(acc) - rhs;
}

}  // namespace curvlab
