#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <string>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/presentation.hpp"

namespace curvlab {

using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using SpMat = Eigen::SparseMatrix<cplx>;

/// One graded piece F_n = M_n (+) H_n in Fock-normalized monomial coordinates
/// (coordinate of z^alpha e_j is f_alpha * sqrt(alpha!/|alpha|!)), where the Fock inner product is Euclidean.
struct DegreeSpace {
  int degree = 0;
  FreeBasis basis;
  Eigen::VectorXd sqrt_w;
  int dim_M = 0;
  bool free = true;  // M_n = 0, so H_n = F_n with the monomial basis
  Mat onb_H;         // columns: orthonormal basis of H_n (unused when free)
  Mat onb_M;         // columns: orthonormal basis of M_n (kept on request)
  double conditioning = 1.0;  // smallest / largest |R_ii| of the pivoted QR of the spanning set
  std::string rank_method = "none";

  int dim_F() const { return basis.size(); }
  int dim_H() const { return dim_F() - dim_M; }
  Mat H_basis() const { return free ? Mat::Identity(dim_F(), dim_F()) : onb_H; }

  /// Monomial coefficients (over z^alpha e_j) of a vector given in normalized coordinates.
  Vec to_coefficients(const Vec& x) const { return x.cwiseQuotient(sqrt_w.cast<cplx>()); }
};

/// Relative threshold below which a pivot of the spanning-set QR counts as zero.
inline constexpr double kRankTolerance = 1e-8;

/// Splits F_n into M_n and its Fock-orthogonal complement H_n. On the exact path the rank is taken
/// from the exact route and the float QR must agree with it; a disagreement is a NumericFailure.
template <class S>
DegreeSpace decompose_degree(const GradedPresentation<S>& P, const ValidationReport& rep, int n, bool keep_M) {
  DegreeSpace sp;
  sp.degree = n;
  sp.basis = free_basis(P.spec, n);
  const int F = sp.basis.size();
  sp.sqrt_w.resize(F);
  for (int c = 0; c < F; ++c) sp.sqrt_w(c) = std::sqrt(fock_weight(sp.basis.elements[static_cast<std::size_t>(c)].exponent));

  auto rows = spanning_rows(P, rep, sp.basis);
  if (rows.empty() || F == 0) return sp;

  int exact_dim = -1;
  if constexpr (scalar_traits<S>::exact) {
    const PieceRank pr = rank_of_rows(rows, sp.basis);
    exact_dim = pr.dim;
    sp.rank_method = pr.method;
    std::vector<SparseRow<S>> picked;
    for (int i : pr.independent_rows) picked.push_back(std::move(rows[static_cast<std::size_t>(i)]));
    rows = std::move(picked);
    if (exact_dim == 0) return sp;
  } else {
    sp.rank_method = "numeric";
  }

  const Mat C = normalized_dense(rows, sp.basis).transpose();
  Eigen::ColPivHouseholderQR<Mat> qr(C);
  qr.setThreshold(kRankTolerance);
  const int r = static_cast<int>(qr.rank());
  if (exact_dim >= 0 && r != exact_dim)
    throw NumericFailure("numeric degeneracy at degree " + std::to_string(n) + ": float rank " + std::to_string(r) +
                         " disagrees with exact rank " + std::to_string(exact_dim));
  if (r == 0) return sp;
  const auto R = qr.matrixQR();
  sp.conditioning = std::abs(R(r - 1, r - 1)) / std::abs(R(0, 0));
  sp.dim_M = r;
  sp.free = false;
  const Mat I = Mat::Identity(F, F);
  sp.onb_H = qr.householderQ() * I.rightCols(F - r);
  if (keep_M) sp.onb_M = qr.householderQ() * I.leftCols(r);
  return sp;
}

/// Multiplication by z_k from F_n to F_{n+1} in normalized coordinates:
/// e_alpha -> sqrt((alpha_k+1)/(|alpha|+1)) e_{alpha+e_k}.
inline SpMat shift_matrix(const FreeBasis& from, const FreeBasis& to, int k) {
  std::vector<Eigen::Triplet<cplx>> trips;
  trips.reserve(from.elements.size());
  for (int c = 0; c < from.size(); ++c) {
    const auto& el = from.elements[static_cast<std::size_t>(c)];
    const int row = to.find(el.component, el.exponent.incremented(k));
    if (row < 0) throw Error("shift_matrix: target monomial missing");
    trips.emplace_back(row, c, std::sqrt((el.exponent[k] + 1.0) / (el.exponent.total_degree() + 1.0)));
  }
  SpMat S(to.size(), from.size());
  S.setFromTriplets(trips.begin(), trips.end());
  return S;
}

/// A degree-raising operator block: sparse when both ends use monomial bases, dense otherwise.
struct ShiftBlock {
  bool sparse = true;
  SpMat sp;
  Mat dn;

  Eigen::Index rows() const { return sparse ? sp.rows() : dn.rows(); }
  Eigen::Index cols() const { return sparse ? sp.cols() : dn.cols(); }
  Mat operator*(const Mat& X) const { return sparse ? Mat(sp * X) : Mat(dn * X); }
  Mat dense() const { return sparse ? Mat(sp) : dn; }
  /// X * block^dagger
  Mat times_adjoint(const Mat& X) const { return sparse ? Mat(X * sp.adjoint()) : Mat(X * dn.adjoint()); }
};

/// Compression P_{to} S_k |_{from} expressed in the bases of the two pieces (H or M parts).
inline ShiftBlock compress(const SpMat& S, bool from_identity, const Mat& from_onb, bool to_identity, const Mat& to_onb) {
  ShiftBlock b;
  if (from_identity && to_identity) {
    b.sp = S;
    return b;
  }
  b.sparse = false;
  if (from_identity)
    b.dn = Mat(S.adjoint() * to_onb).adjoint();
  else if (to_identity)
    b.dn = S * from_onb;
  else
    b.dn = to_onb.adjoint() * (S * from_onb);
  return b;
}

}  // namespace curvlab
