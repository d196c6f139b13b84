#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/graded_space.hpp"
#include "curvlab/hilbert.hpp"
#include "curvlab/parallel.hpp"
#include "curvlab/presentation.hpp"
#include "curvlab/qpoly.hpp"

namespace curvlab {

/// Degree -> block in the orthonormal coordinates of H_n; finitely many blocks.
using BlockOperator = std::map<int, Mat>;

/// Eigenvalues above this (relative to max(1, largest)) count towards a numeric rank.
inline constexpr double kEigenRankTolerance = 1e-8;
/// Defect blocks with max-entry below this are treated as zero when locating the defect support.
inline constexpr double kDefectFloor = 1e-10;

inline int hermitian_rank(const Mat& X, double rel_tol = kEigenRankTolerance) {
  if (X.size() == 0) return 0;
  Eigen::SelfAdjointEigenSolver<Mat> es(X, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double cut = rel_tol * std::max(1.0, ev.cwiseAbs().maxCoeff());
  return static_cast<int>((ev.array() > cut).count());
}

/// Float model of H = F/M up to degree n_max: orthonormal bases of H_n, compressions T_k and defect blocks.
class QuotientModel {
 public:
  template <class S>
  static QuotientModel build(const GradedPresentation<S>& P, int n_max, int threads = 1) {
    const ValidationReport rep = validated(P);
    QuotientModel m;
    m.spec_ = P.spec;
    m.n_min_ = P.spec.n_min();
    m.n_max_ = n_max;
    m.exact_ = scalar_traits<S>::exact;
    if (n_max < m.n_min_ + 1) throw InputError("max degree must exceed the lowest module degree");
    const int count = n_max - m.n_min_ + 1;
    m.spaces_.resize(static_cast<std::size_t>(count));
    parallel_for(0, count, threads, [&](int i) {
      m.spaces_[static_cast<std::size_t>(i)] = decompose_degree(P, rep, m.n_min_ + i, false);
    });
    m.T_.assign(static_cast<std::size_t>(P.spec.d), std::vector<ShiftBlock>(static_cast<std::size_t>(count - 1)));
    parallel_for(0, count - 1, threads, [&](int i) {
      const DegreeSpace& a = m.spaces_[static_cast<std::size_t>(i)];
      const DegreeSpace& b = m.spaces_[static_cast<std::size_t>(i + 1)];
      for (int k = 0; k < P.spec.d; ++k)
        m.T_[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)] =
            compress(shift_matrix(a.basis, b.basis, k), a.free, a.onb_H, b.free, b.onb_H);
    });
    // Blocks with every entry below kDefectFloor are not stored; defect(n) returns zeros for them.
    for (int n = m.n_min_; n <= n_max; ++n) {
      const int dn = m.dim(n);
      if (dn == 0) continue;
      bool sparse = n > m.n_min_ && m.space(n).free;
      for (int k = 0; sparse && k < P.spec.d; ++k) sparse = m.T(k, n - 1).sparse;
      Mat D;
      if (sparse) {
        SpMat I(dn, dn);
        I.setIdentity();
        SpMat acc = I;
        for (int k = 0; k < P.spec.d; ++k) {
          const SpMat& t = m.T(k, n - 1).sp;
          acc -= SpMat(t * SpMat(t.adjoint()));
        }
        double peak = 0.0;
        for (int c = 0; c < acc.outerSize(); ++c)
          for (SpMat::InnerIterator it(acc, c); it; ++it) peak = std::max(peak, std::abs(it.value()));
        if (peak <= kDefectFloor) {
          m.dropped_peak_ = std::max(m.dropped_peak_, peak);
          m.dropped_ = true;
          continue;
        }
        D = Mat(acc);
      } else {
        D = Mat::Identity(dn, dn);
        if (n > m.n_min_)
          for (int k = 0; k < P.spec.d; ++k) {
            const ShiftBlock& t = m.T(k, n - 1);
            D -= t * t.dense().adjoint();
          }
        const double peak = D.cwiseAbs().maxCoeff();
        if (peak <= kDefectFloor) {
          m.dropped_peak_ = std::max(m.dropped_peak_, peak);
          m.dropped_ = true;
          continue;
        }
      }
      m.defect_.emplace(n, std::move(D));
    }
    return m;
  }

  int d() const { return spec_.d; }
  int n_min() const { return n_min_; }
  int n_max() const { return n_max_; }
  bool exact_input() const { return exact_; }
  const FreeModuleSpec& spec() const { return spec_; }
  const DegreeSpace& space(int n) const { return spaces_.at(static_cast<std::size_t>(n - n_min_)); }
  int dim(int n) const { return n < n_min_ || n > n_max_ ? 0 : space(n).dim_H(); }
  /// Compression of z_k from H_n to H_{n+1}, n_min <= n < n_max.
  const ShiftBlock& T(int k, int n) const {
    return T_.at(static_cast<std::size_t>(k)).at(static_cast<std::size_t>(n - n_min_));
  }
  /// Delta^2 on H_n (zero matrix when the block was below kDefectFloor).
  Mat defect(int n) const {
    auto it = defect_.find(n);
    if (it != defect_.end()) return it->second;
    return Mat::Zero(dim(n), dim(n));
  }

  /// Degrees carrying a nonzero defect block.
  std::vector<int> defect_support() const {
    std::vector<int> out;
    for (const auto& [n, D] : defect_)
      if (D.size() && D.cwiseAbs().maxCoeff() > kDefectFloor) out.push_back(n);
    return out;
  }
  std::optional<int> top_defect_degree() const {
    auto s = defect_support();
    if (s.empty()) return std::nullopt;
    return s.back();
  }
  /// Delta^2 restricted to its support.
  BlockOperator defect_operator() const {
    BlockOperator out;
    for (int n : defect_support()) out.emplace(n, defect_.at(n));
    return out;
  }
  /// Sum of numeric ranks of the defect blocks (rank(H), exact once the support lies inside the window).
  int defect_rank() const {
    int r = 0;
    for (int n : defect_support()) r += hermitian_rank(defect_.at(n));
    return r;
  }
  double max_gram_residual() const {
    double worst = 0.0;
    for (const auto& sp : spaces_)
      if (!sp.free && sp.onb_H.cols() > 0)
        worst = std::max(worst, (sp.onb_H.adjoint() * sp.onb_H - Mat::Identity(sp.onb_H.cols(), sp.onb_H.cols()))
                                    .cwiseAbs()
                                    .maxCoeff());
    return worst;
  }
  std::pair<double, double> defect_eigen_range() const {
    double lo = 1.0, hi = 0.0;
    if (dropped_) {
      lo = -dropped_peak_;
      hi = dropped_peak_;
    }
    for (const auto& [n, D] : defect_) {
      if (D.size() == 0) continue;
      Eigen::SelfAdjointEigenSolver<Mat> es(D, Eigen::EigenvaluesOnly);
      lo = std::min(lo, es.eigenvalues().minCoeff());
      hi = std::max(hi, es.eigenvalues().maxCoeff());
    }
    return {lo, hi};
  }

 private:
  FreeModuleSpec spec_;
  int n_min_ = 0, n_max_ = 0;
  bool exact_ = true;
  std::vector<DegreeSpace> spaces_;
  std::vector<std::vector<ShiftBlock>> T_;
  std::map<int, Mat> defect_;
  double dropped_peak_ = 0.0;
  bool dropped_ = false;
};

struct PhiResult {
  BlockOperator op;
  bool truncated = false;  // some block would have landed above n_max
};

/// phi(X) = sum_k T_k X T_k^dagger; raises the degree support by one.
inline PhiResult phi_apply(const QuotientModel& m, const BlockOperator& X) {
  PhiResult out;
  for (const auto& [n, B] : X) {
    if (n < m.n_min() || n > m.n_max()) throw InputError("phi_apply: block degree outside the model");
    if (B.rows() != m.dim(n) || B.cols() != m.dim(n)) throw InputError("phi_apply: block has the wrong size");
    if (n == m.n_max()) {
      if (B.size() && B.cwiseAbs().maxCoeff() > 0) out.truncated = true;
      continue;
    }
    Mat Y = Mat::Zero(m.dim(n + 1), m.dim(n + 1));
    for (int k = 0; k < m.d(); ++k) {
      const ShiftBlock& t = m.T(k, n);
      Y += t.times_adjoint(t * B);
    }
    out.op.emplace(n + 1, std::move(Y));
  }
  return out;
}

inline double trace_of(const BlockOperator& X) {
  double t = 0.0;
  for (const auto& [n, B] : X) t += B.trace().real();
  return t;
}

inline BlockOperator identity_operator(const QuotientModel& m) {
  BlockOperator I;
  for (int n = m.n_min(); n <= m.n_max(); ++n) I.emplace(n, Mat::Identity(m.dim(n), m.dim(n)));
  return I;
}

struct DefectSums {
  std::vector<double> step_trace;  // trace phi^n(Delta^2), n = 0..N
  std::vector<double> trace_seq;   // trace S_n, S_n = sum_{k<=n} phi^k(Delta^2)
  std::vector<long> rank_seq;      // numeric rank of S_n
  int complete_through = 0;        // N: largest n whose S_n lies inside the window
};

/// Accumulates S_n = 1 - phi^{n+1}(1) = sum_{k<=n} phi^k(Delta^2) for every n whose support fits below n_max.
inline DefectSums defect_sum_sequence(const QuotientModel& m) {
  DefectSums out;
  const auto top = m.top_defect_degree();
  const int N = top ? m.n_max() - *top : m.n_max() - m.n_min();
  if (N < 0) throw NotStabilized("defect support reaches the top of the model; raise --max-degree");
  out.complete_through = N;
  BlockOperator power = m.defect_operator();
  BlockOperator sum;
  std::map<int, int> block_rank;
  double trace_acc = 0.0;
  for (int n = 0; n <= N; ++n) {
    if (n > 0) power = phi_apply(m, power).op;
    const double t = trace_of(power);
    out.step_trace.push_back(t);
    trace_acc += t;
    out.trace_seq.push_back(trace_acc);
    for (const auto& [deg, B] : power) {
      auto it = sum.find(deg);
      if (it == sum.end())
        it = sum.emplace(deg, B).first;
      else
        it->second += B;
      block_rank[deg] = hermitian_rank(it->second);
    }
    long r = 0;
    for (const auto& [deg, rk] : block_rank) r += rk;
    out.rank_seq.push_back(r);
  }
  return out;
}

/// Euler characteristic from the numeric ranks of 1 - phi^{n+1}(1).
inline HilbertProfile euler_numeric(const QuotientModel& m, int window = 3) {
  const DefectSums s = defect_sum_sequence(m);
  RankSequence seq{0, s.rank_seq, RankSequence::Meaning::Cumulative};
  HilbertProfile p = fit_hilbert_polynomial(seq, m.d(), window);
  p.filtration = "rank(1-phi^{n+1}(1))";
  return p;
}

struct CurvatureEstimate {
  std::string method;  // "asymptotic", "boundary-mc", "gauss-bonnet"
  double value = 0.0;
  double uncertainty = 0.0;
  nlohmann::json diagnostics = nlohmann::json::object();
  bool operator==(const CurvatureEstimate&) const = default;
};

namespace detail {

// Value at h = 0 of the interpolating polynomial through (h_i, y_i) (Neville).
inline double extrapolate_to_zero(std::vector<double> h, std::vector<double> y) {
  const std::size_t n = y.size();
  for (std::size_t level = 1; level < n; ++level)
    for (std::size_t i = 0; i + level < n; ++i)
      y[i] = (h[i + level] * y[i] - h[i] * y[i + 1]) / (h[i + level] - h[i]);
  return y[0];
}

// Levin u-transform (beta = 1) of s_0..s_n, remainder estimates (j+1)(s_j - s_{j-1}) for j >= 1.
// Returns nullopt when a difference vanishes to rounding level.
inline std::optional<double> levin_u(const std::vector<double>& s, double noise) {
  const std::size_t n = s.size() - 1;
  if (n < 2) return std::nullopt;
  const std::size_t k = n - 1;
  long double num = 0.0L, den = 0.0L, binom = 1.0L;
  for (std::size_t j = 0; j <= k; ++j) {
    const std::size_t idx = j + 1;
    const long double diff = static_cast<long double>(s[idx]) - s[idx - 1];
    if (std::abs(static_cast<double>(diff)) <= noise) return std::nullopt;
    const long double w = (static_cast<long double>(idx) + 1.0L) * diff;
    const long double ratio = (1.0L + j + 1.0L) / (1.0L + k + 1.0L);
    long double c = binom * std::pow(ratio, static_cast<long double>(k) - 1.0L);
    if (j % 2) c = -c;
    num += c * s[idx] / w;
    den += c / w;
    binom = binom * static_cast<long double>(k - j) / static_cast<long double>(j + 1);
  }
  if (den == 0.0L) return std::nullopt;
  return static_cast<double>(num / den);
}

inline double binomial(int n, int k) {
  double v = 1.0;
  for (int j = 1; j <= k; ++j) v = v * (n - k + j) / j;
  return v;
}

}  // namespace detail

/// K(H) from the asymptotics of a_p = trace phi^p(Delta^2): the (d-1)-th backward difference of a_p tends
/// to K. A constant tail is returned directly; otherwise the tail is extrapolated polynomially in 1/(p+1)
/// and by Levin's u-transform, keeping whichever has the smaller last-step change.
inline CurvatureEstimate curvature_asymptotic(const QuotientModel& m) {
  const DefectSums s = defect_sum_sequence(m);
  const auto& a = s.step_trace;
  const int d = m.d();
  std::vector<double> rho, h;
  for (std::size_t p = static_cast<std::size_t>(d - 1); p < a.size(); ++p) {
    double v = 0.0;
    for (int j = 0; j < d; ++j) v += ((j % 2) ? -1.0 : 1.0) * detail::binomial(d - 1, j) * a[p - static_cast<std::size_t>(j)];
    rho.push_back(v);
    h.push_back(1.0 / (static_cast<double>(p) + 1.0));
  }
  CurvatureEstimate est;
  est.method = "asymptotic";
  est.diagnostics["degrees_used"] = static_cast<int>(a.size());
  est.diagnostics["model_max_degree"] = m.n_max();
  if (rho.size() < 3)
    throw NotStabilized("curvature: only " + std::to_string(rho.size()) +
                        " usable differences of trace phi^n(Delta^2); raise --max-degree");
  const std::size_t L = rho.size();
  const double scale = std::max(1.0, std::abs(rho[L - 1]));
  double spread = 0.0;
  for (std::size_t i = L - 3; i < L; ++i) spread = std::max(spread, std::abs(rho[i] - rho[L - 1]));
  if (spread <= 1e-10 * scale) {
    est.value = rho[L - 1];
    est.uncertainty = spread;
    est.diagnostics["extrapolation"] = "constant-tail";
    est.diagnostics["window"] = 3;
    return est;
  }
  const std::size_t order = std::min<std::size_t>(4, L - 2);
  auto window_at = [&](std::size_t end) {
    std::vector<double> hh(h.begin() + static_cast<long>(end - order - 1), h.begin() + static_cast<long>(end));
    std::vector<double> yy(rho.begin() + static_cast<long>(end - order - 1), rho.begin() + static_cast<long>(end));
    return detail::extrapolate_to_zero(hh, yy);
  };
  const double r0 = window_at(L);
  const double r1 = window_at(L - 1);
  est.value = r0;
  est.uncertainty = std::abs(r0 - r1);
  est.diagnostics["extrapolation"] = "richardson-1/(n+1)";
  est.diagnostics["order"] = static_cast<int>(order);
  est.diagnostics["window"] = static_cast<int>(order + 1);

  // Levin u over every admissible start; the most self-consistent start (and method) wins.
  const double noise = 1e-13 * scale;
  // The uncertainty is the larger of the last two step changes.
  for (std::size_t start = 0; start + 5 <= L; ++start) {
    const std::vector<double> full(rho.begin() + static_cast<long>(start), rho.end());
    const std::vector<double> prev(rho.begin() + static_cast<long>(start), rho.end() - 1);
    const std::vector<double> prev2(rho.begin() + static_cast<long>(start), rho.end() - 2);
    const auto l0 = detail::levin_u(full, noise);
    const auto l1 = detail::levin_u(prev, noise);
    const auto l2 = detail::levin_u(prev2, noise);
    if (!l0 || !l1 || !l2 || !std::isfinite(*l0) || !std::isfinite(*l1) || !std::isfinite(*l2)) continue;
    const double u = std::max(std::abs(*l0 - *l1), std::abs(*l1 - *l2));
    if (u < est.uncertainty) {
      est.value = *l0;
      est.uncertainty = u;
      est.diagnostics["extrapolation"] = "levin-u";
      est.diagnostics["order"] = static_cast<int>(full.size() - 2);
      est.diagnostics["window"] = static_cast<int>(full.size());
      est.diagnostics["start_degree"] = static_cast<int>(start) + d - 1;
    }
  }
  return est;
}

/// Squared norms h_m = sum_i ||T(zeta)^m Delta e_i||^2 for m = 0..depth, T(z) = sum_k conj(z_k) T_k.
inline std::vector<double> boundary_profile(const QuotientModel& m, const std::vector<cplx>& zeta_in, int depth) {
  if (static_cast<int>(zeta_in.size()) != m.d()) throw InputError("boundary point has the wrong dimension");
  double nz = 0.0;
  for (const auto& c : zeta_in) nz += std::norm(c);
  if (nz == 0.0) throw InputError("boundary direction must be nonzero");
  std::vector<cplx> zeta(zeta_in);
  for (auto& c : zeta) c /= std::sqrt(nz);
  std::vector<double> hm(static_cast<std::size_t>(depth + 1), 0.0);
  for (int n : m.defect_support()) {
    if (n + depth > m.n_max())
      throw InputError("Neumann depth " + std::to_string(depth) + " from defect degree " + std::to_string(n) +
                       " exceeds the model degree " + std::to_string(m.n_max()) + "; raise max degree or lower r");
    Eigen::SelfAdjointEigenSolver<Mat> es(m.defect(n));
    const auto& ev = es.eigenvalues();
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < ev.size(); ++i)
      if (ev(i) > kDefectFloor) keep.push_back(i);
    Mat V(m.dim(n), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t c = 0; c < keep.size(); ++c)
      V.col(static_cast<Eigen::Index>(c)) = es.eigenvectors().col(keep[c]) * std::sqrt(ev(keep[c]));
    for (int step = 0; step <= depth; ++step) {
      hm[static_cast<std::size_t>(step)] += V.squaredNorm();
      if (step == depth) break;
      Mat W = Mat::Zero(m.dim(n + step + 1), V.cols());
      for (int k = 0; k < m.d(); ++k) W += std::conj(zeta[static_cast<std::size_t>(k)]) * (m.T(k, n + step) * V);
      V = std::move(W);
    }
  }
  return hm;
}

/// Smallest depth D with trace(Delta^2) r^{2(D+1)} <= tail_tol (bounds the discarded Neumann tail).
inline int neumann_depth(double defect_trace, double r, double tail_tol) {
  if (!(r > 0.0 && r < 1.0)) throw InputError("r must lie strictly between 0 and 1");
  if (defect_trace <= 0.0) return 0;
  const double need = std::log(tail_tol / defect_trace) / (2.0 * std::log(r)) - 1.0;
  return std::max(0, static_cast<int>(std::ceil(need)));
}

struct BoundaryValue {
  double value = 0.0;
  double tail_bound = 0.0;
  int depth = 0;
};

/// (1 - r^2) trace F(r zeta), F(z) = Delta (1 - T(z)^*)^{-1} (1 - T(z))^{-1} Delta, truncated at depth D.
inline BoundaryValue boundary_curvature_point(const QuotientModel& m, const std::vector<cplx>& zeta, double r,
                                              double tail_tol) {
  const double dt = trace_of(m.defect_operator());
  BoundaryValue out;
  out.depth = neumann_depth(dt, r, tail_tol);
  const auto hm = boundary_profile(m, zeta, out.depth);
  double acc = 0.0, rr = 1.0;
  for (double v : hm) {
    acc += rr * v;
    rr *= r * r;
  }
  out.value = (1.0 - r * r) * acc;
  out.tail_bound = dt * rr;
  const double rank = m.defect_rank();
  if (out.value < -1e-9 || out.value > rank + 1e-9 + out.tail_bound)
    throw NumericFailure("boundary value " + std::to_string(out.value) + " outside [0, rank]");
  return out;
}

/// Uniform point on the unit sphere of C^d from a normalized complex Gaussian vector.
template <class Rng>
std::vector<cplx> sphere_point(int d, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<cplx> z(static_cast<std::size_t>(d));
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (auto& c : z) {
      c = {g(rng), g(rng)};
      n2 += std::norm(c);
    }
  } while (n2 == 0.0);
  for (auto& c : z) c /= std::sqrt(n2);
  return z;
}

namespace detail {

inline void check_r_schedule(const std::vector<double>& r_schedule) {
  if (r_schedule.empty()) throw InputError("empty r schedule");
  for (std::size_t i = 0; i < r_schedule.size(); ++i) {
    if (!(r_schedule[i] > 0.0 && r_schedule[i] < 1.0)) throw InputError("r values must lie strictly in (0,1)");
    if (i && r_schedule[i] <= r_schedule[i - 1]) throw InputError("r schedule must be increasing");
  }
}

// Sphere average of the radially extrapolated boundary value; profile(zeta) returns h_0..h_depth.
template <class Profile>
CurvatureEstimate monte_carlo_average(int d, int samples, const std::vector<double>& r_schedule, unsigned long seed,
                                      int depth, double defect_trace, int threads, Profile profile) {
  if (samples < 1) throw InputError("samples must be >= 1");
  std::vector<double> per(static_cast<std::size_t>(samples));
  parallel_for(0, samples, threads, [&](int i) {
    std::seed_seq ss{static_cast<unsigned long>(seed), static_cast<unsigned long>(i)};
    std::mt19937_64 rng(ss);
    const auto zeta = sphere_point(d, rng);
    const std::vector<double> hm = profile(zeta);
    std::vector<double> vals;
    for (double r : r_schedule) {
      double acc = 0.0, rr = 1.0;
      for (double v : hm) {
        acc += rr * v;
        rr *= r * r;
      }
      vals.push_back((1.0 - r * r) * acc);
    }
    double k0 = vals.back();
    if (vals.size() >= 2) {
      const double xa = 1.0 - r_schedule[r_schedule.size() - 2] * r_schedule[r_schedule.size() - 2];
      const double xb = 1.0 - r_schedule.back() * r_schedule.back();
      const double va = vals[vals.size() - 2], vb = vals.back();
      k0 = vb - xb * (va - vb) / (xa - xb);
    }
    per[static_cast<std::size_t>(i)] = k0;
  });
  double mean = 0.0;
  for (double v : per) mean += v;
  mean /= samples;
  double var = 0.0;
  for (double v : per) var += (v - mean) * (v - mean);
  const double se = samples > 1 ? std::sqrt(var / (samples - 1) / samples) : 0.0;
  CurvatureEstimate est;
  est.method = "boundary-mc";
  est.value = mean;
  est.uncertainty = se;
  est.diagnostics["samples"] = samples;
  est.diagnostics["seed"] = seed;
  est.diagnostics["r_schedule"] = r_schedule;
  est.diagnostics["depth"] = depth;
  est.diagnostics["tail_bound"] = defect_trace * std::pow(r_schedule.back(), 2.0 * (depth + 1));
  est.diagnostics["radial_model"] = "affine in (1-r^2), two largest r";
  return est;
}

}  // namespace detail

/// Monte-Carlo integral of the boundary curvature over the sphere. Per direction the values at the
/// r-schedule are extrapolated affinely in (1 - r^2) to 0 using the two largest r.
inline CurvatureEstimate curvature_monte_carlo(const QuotientModel& m, int samples, std::vector<double> r_schedule,
                                               unsigned long seed, double tail_tol = 1e-10, int threads = 1) {
  if (samples < 1) throw InputError("samples must be >= 1");
  detail::check_r_schedule(r_schedule);
  const double dt = trace_of(m.defect_operator());
  const int depth = neumann_depth(dt, r_schedule.back(), tail_tol);
  auto est = detail::monte_carlo_average(m.d(), samples, r_schedule, seed, depth, dt, threads,
                                         [&](const std::vector<cplx>& zeta) { return boundary_profile(m, zeta, depth); });
  est.diagnostics["integrand"] = "model";
  return est;
}

/// Same estimator for a free module of the given rank, whose boundary profile is h_m = rank for every m
/// (Delta^2 projects onto the generators and ||<z, zeta>^m||^2 = |zeta|^{2m} in the Fock norm).
inline CurvatureEstimate curvature_monte_carlo_free(int d, int rank, int samples, std::vector<double> r_schedule,
                                                    unsigned long seed, double tail_tol = 1e-10, int threads = 1) {
  if (d < 1 || rank < 0) throw InputError("free module needs d >= 1 and rank >= 0");
  detail::check_r_schedule(r_schedule);
  const int depth = neumann_depth(rank, r_schedule.back(), tail_tol);
  auto est = detail::monte_carlo_average(
      d, samples, r_schedule, seed, depth, rank, threads,
      [&](const std::vector<cplx>&) { return std::vector<double>(static_cast<std::size_t>(depth + 1), rank); });
  est.diagnostics["integrand"] = "closed-form free";
  return est;
}

struct PurityReport {
  struct Row {
    int power = 0;
    std::optional<int> lowest_support;  // lowest degree with a nonzero block of phi^n(1)
    double max_block_norm = 0.0;        // largest spectral norm over the blocks inside the window
  };
  std::vector<Row> rows;
  bool pure = true;
};

/// phi^n(1) restricted to the window: its support must climb with n (so phi^n(1) -> 0 strongly).
inline PurityReport purity_check(const QuotientModel& m) {
  PurityReport rep;
  BlockOperator X = identity_operator(m);
  for (int n = 0; n <= m.n_max() - m.n_min(); ++n) {
    if (n > 0) X = phi_apply(m, X).op;
    PurityReport::Row row;
    row.power = n;
    for (const auto& [deg, B] : X) {
      if (B.size() == 0) continue;
      const double nb = Eigen::JacobiSVD<Mat>(B).singularValues()(0);
      if (nb > 1e-12 && !row.lowest_support) row.lowest_support = deg;
      row.max_block_norm = std::max(row.max_block_norm, nb);
    }
    if (row.lowest_support && *row.lowest_support < m.n_min() + n) rep.pure = false;
    if (row.max_block_norm > 1.0 + 1e-9) rep.pure = false;
    rep.rows.push_back(row);
  }
  return rep;
}

/// Both sides of the dilation trace identity
///   trace phi^n(Delta^2) = sum_{|alpha|=n} (n!/alpha!) sum_i ||T^alpha Delta e_i||^2.
inline std::pair<double, double> dilation_trace_identity(const QuotientModel& m, int n) {
  if (n < 0) throw InputError("n must be >= 0");
  BlockOperator X = m.defect_operator();
  for (int k = 0; k < n; ++k) X = phi_apply(m, X).op;
  const double lhs = trace_of(X);
  double rhs = 0.0;
  for (int deg : m.defect_support()) {
    if (deg + n > m.n_max()) throw InputError("identity degree exceeds the model");
    Eigen::SelfAdjointEigenSolver<Mat> es(m.defect(deg));
    Mat root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().adjoint();
    for (const auto& a : monomials(m.d(), n)) {
      Mat V = root;
      int cur = deg;
      for (int k = 0; k < m.d(); ++k)
        for (int p = 0; p < a[k]; ++p) V = m.T(k, cur++) * V;
      rhs += V.squaredNorm() / fock_weight(a);
    }
  }
  return {lhs, rhs};
}

/// Hardy-space form of the free model: degree-n Hardy norm^2 = Fock norm^2 / q_{d-1}(n), and the
/// shift in Hardy-normalized coordinates is Z_k e_alpha = sqrt((alpha_k+1)/(|alpha|+d)) e_{alpha+e_k}.
/// For a block-diagonal X on the free rank-one module returns
///   lhs = sum_{m<=n} trace(Y_m - sum_k Z_k Y_{m-1} Z_k^dagger),  Y_m = X_m / q_{d-1}(m),
///   rhs = trace(X_n) / trace(E_n) = trace(X_n) / q_{d-1}(n).
inline std::pair<double, double> hardy_trace_identity(const QuotientModel& m, const BlockOperator& X, int n) {
  if (m.spec().r != 1 || m.spec().shifts[0] != 0) throw InputError("hardy_trace_identity needs a free rank-one model");
  if (n < 0 || n > m.n_max()) throw InputError("n out of range");
  for (int deg = 0; deg <= n; ++deg)
    if (!m.space(deg).free) throw InputError("hardy_trace_identity needs a free model");
  const int d = m.d();
  auto Y = [&](int deg) -> Mat {
    auto it = X.find(deg);
    const double q = q_poly_double(d - 1, deg);
    if (it == X.end()) return Mat::Zero(m.dim(deg), m.dim(deg));
    return it->second / q;
  };
  auto hardy_shift = [&](int deg, int k) {
    const FreeBasis& from = m.space(deg).basis;
    const FreeBasis& to = m.space(deg + 1).basis;
    std::vector<Eigen::Triplet<cplx>> trips;
    for (int c = 0; c < from.size(); ++c) {
      const auto& e = from.elements[static_cast<std::size_t>(c)].exponent;
      trips.emplace_back(to.find(0, e.incremented(k)), c, std::sqrt((e[k] + 1.0) / (e.total_degree() + d)));
    }
    SpMat Z(to.size(), from.size());
    Z.setFromTriplets(trips.begin(), trips.end());
    return Z;
  };
  double lhs = 0.0;
  for (int deg = 0; deg <= n; ++deg) {
    Mat block = Y(deg);
    if (deg > 0) {
      const Mat prev = Y(deg - 1);
      for (int k = 0; k < d; ++k) {
        const SpMat Z = hardy_shift(deg - 1, k);
        block -= Z * prev * Z.adjoint();
      }
    }
    lhs += block.trace().real();
  }
  auto it = X.find(n);
  const double rhs = it == X.end() ? 0.0 : it->second.trace().real() / q_poly_double(d - 1, n);
  return {lhs, rhs};
}

}  // namespace curvlab
