#pragma once

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "curvlab/errors.hpp"
#include "curvlab/fixtures.hpp"
#include "curvlab/hilbert.hpp"
#include "curvlab/metricbasis.hpp"
#include "curvlab/oplab.hpp"
#include "curvlab/parallel.hpp"
#include "curvlab/polynomial.hpp"
#include "curvlab/presentation.hpp"
#include "curvlab/spec_io.hpp"

namespace curvlab {

struct RunConfig {
  std::string command;
  std::string input;  // spec path, or @name for a built-in fixture
  int max_degree = 12;
  double tolerance = 1e-8;
  int samples = 100;
  std::vector<double> r_schedule{0.9, 0.99};
  unsigned long seed = 0;
  std::string method = "asymptotic";  // asymptotic | boundary | both
  std::string output = "text";        // text | json
  int threads = 1;

  void check() const {
    if (max_degree < 2) throw InputError("--max-degree must be >= 2");
    if (!(tolerance > 0.0)) throw InputError("--tolerance must be positive");
    if (samples < 1) throw InputError("--samples must be >= 1");
    if (r_schedule.empty()) throw InputError("--r-schedule must not be empty");
    for (std::size_t i = 0; i < r_schedule.size(); ++i) {
      if (!(r_schedule[i] > 0.0 && r_schedule[i] < 1.0)) throw InputError("--r-schedule values must lie in (0,1)");
      if (i && r_schedule[i] <= r_schedule[i - 1]) throw InputError("--r-schedule must be increasing");
    }
    if (method != "asymptotic" && method != "boundary" && method != "both")
      throw InputError("--method must be asymptotic, boundary or both");
    if (output != "text" && output != "json") throw InputError("--output must be text or json");
    if (threads < 1) throw InputError("--threads must be >= 1");
  }
  // Thread count is left out: results do not depend on it.
  nlohmann::json to_json() const {
    return {{"max_degree", max_degree}, {"tolerance", tolerance}, {"samples", samples}, {"r_schedule", r_schedule},
            {"seed", seed},           {"method", method}};
  }
};

struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
  bool operator==(const CheckResult&) const = default;
};

/// Command output. Timing is measured but kept out of the JSON so reports are byte-reproducible;
/// equality ignores it for the same reason.
struct Report {
  std::string command;
  nlohmann::json input;
  nlohmann::json config;
  unsigned long seed = 0;
  std::optional<DimensionTable> dims;
  std::optional<HilbertProfile> profile;
  nlohmann::json generating_function;
  std::vector<CurvatureEstimate> curvature;
  nlohmann::json metric_basis;
  nlohmann::json extra;
  std::vector<CheckResult> checks;
  std::optional<std::string> first_failure;
  int exit_code = 0;
  double timing_seconds = 0.0;

  friend bool operator==(const Report& a, const Report& b) {
    auto key = [](const Report& r) {
      return std::tie(r.command, r.input, r.config, r.seed, r.profile, r.generating_function, r.curvature,
                      r.metric_basis, r.extra, r.checks, r.first_failure, r.exit_code);
    };
    const bool dims_eq = a.dims.has_value() == b.dims.has_value() &&
                         (!a.dims || (a.dims->n_min == b.dims->n_min && a.dims->dims_M == b.dims->dims_M &&
                                      a.dims->dims_F == b.dims->dims_F && a.dims->dims_H == b.dims->dims_H &&
                                      a.dims->numeric == b.dims->numeric));
    return dims_eq && key(a) == key(b);
  }
};

// ---- JSON conversion -------------------------------------------------------

inline nlohmann::json dims_to_json(const DimensionTable& t) {
  return {{"n_min", t.n_min}, {"dims_M", t.dims_M}, {"dims_F", t.dims_F}, {"dims_H", t.dims_H},
          {"method", t.numeric ? "numeric" : "exact"}};
}
inline DimensionTable dims_from_json(const nlohmann::json& j) {
  DimensionTable t;
  t.n_min = j.at("n_min").get<int>();
  t.dims_M = j.at("dims_M").get<std::vector<long>>();
  t.dims_F = j.at("dims_F").get<std::vector<long>>();
  t.dims_H = j.at("dims_H").get<std::vector<long>>();
  t.numeric = j.at("method").get<std::string>() == "numeric";
  return t;
}

inline nlohmann::json estimate_to_json(const CurvatureEstimate& e) {
  return {{"method", e.method}, {"value", e.value}, {"uncertainty", e.uncertainty}, {"diagnostics", e.diagnostics}};
}
inline CurvatureEstimate estimate_from_json(const nlohmann::json& j) {
  return {j.at("method").get<std::string>(), j.at("value").get<double>(), j.at("uncertainty").get<double>(),
          j.at("diagnostics")};
}

inline nlohmann::json check_to_json(const CheckResult& c) {
  return {{"name", c.name}, {"passed", c.passed}, {"residual", c.residual}, {"tolerance", c.tolerance}, {"detail", c.detail}};
}
inline CheckResult check_from_json(const nlohmann::json& j) {
  return {j.at("name").get<std::string>(), j.at("passed").get<bool>(), j.at("residual").get<double>(),
          j.at("tolerance").get<double>(), j.at("detail").get<std::string>()};
}

inline nlohmann::json gf_to_json(const GeneratingFunction& g) {
  nlohmann::json p = nlohmann::json::array(), poles = nlohmann::json::array();
  for (const auto& x : g.p) p.push_back(x.get_str());
  for (const auto& x : g.poles) poles.push_back(x.get_str());
  return {{"p_offset", g.p_offset}, {"p", p}, {"poles", poles}, {"text", g.str()}};
}

inline nlohmann::json report_to_json(const Report& r) {
  nlohmann::json j;
  j["command"] = r.command;
  j["input"] = r.input;
  j["config"] = r.config;
  j["seed"] = r.seed;
  j["dims"] = r.dims ? dims_to_json(*r.dims) : nlohmann::json();
  j["profile"] = r.profile ? profile_to_json(*r.profile) : nlohmann::json();
  j["generating_function"] = r.generating_function;
  j["curvature"] = nlohmann::json::array();
  for (const auto& e : r.curvature) j["curvature"].push_back(estimate_to_json(e));
  j["metric_basis"] = r.metric_basis;
  j["extra"] = r.extra;
  j["checks"] = nlohmann::json::array();
  for (const auto& c : r.checks) j["checks"].push_back(check_to_json(c));
  j["first_failure"] = r.first_failure ? nlohmann::json(*r.first_failure) : nlohmann::json();
  j["exit_code"] = r.exit_code;
  return j;
}

inline Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.command = j.at("command").get<std::string>();
  r.input = j.at("input");
  r.config = j.at("config");
  r.seed = j.at("seed").get<unsigned long>();
  if (!j.at("dims").is_null()) r.dims = dims_from_json(j.at("dims"));
  if (!j.at("profile").is_null()) r.profile = profile_from_json(j.at("profile"));
  r.generating_function = j.at("generating_function");
  for (const auto& e : j.at("curvature")) r.curvature.push_back(estimate_from_json(e));
  r.metric_basis = j.at("metric_basis");
  r.extra = j.at("extra");
  for (const auto& c : j.at("checks")) r.checks.push_back(check_from_json(c));
  if (!j.at("first_failure").is_null()) r.first_failure = j.at("first_failure").get<std::string>();
  r.exit_code = j.at("exit_code").get<int>();
  return r;
}

inline std::string report_json_text(const Report& r) { return report_to_json(r).dump(2) + "\n"; }

/// Human-readable rendering, derived from the JSON form.
inline std::string render_text(const Report& r) {
  const nlohmann::json j = report_to_json(r);
  std::ostringstream out;
  out << "command: " << j["command"].get<std::string>() << "\n";
  if (j["input"].contains("source")) out << "input: " << j["input"]["source"].get<std::string>() << "\n";
  if (!j["dims"].is_null()) {
    const auto& t = j["dims"];
    out << "dims (" << t["method"].get<std::string>() << "), degree n: dim H_n [dim M_n / dim F_n]\n";
    for (std::size_t i = 0; i < t["dims_H"].size(); ++i)
      out << "  " << t["n_min"].get<int>() + static_cast<int>(i) << ": " << t["dims_H"][i] << " [" << t["dims_M"][i]
          << " / " << t["dims_F"][i] << "]\n";
  }
  if (!j["profile"].is_null()) {
    const auto& p = j["profile"];
    out << "hilbert profile (" << p["filtration"].get<std::string>() << "): c = [";
    for (std::size_t i = 0; i < p["c"].size(); ++i) out << (i ? ", " : "") << p["c"][i].get<std::string>();
    out << "], stabilized at n = " << p["stabilized_at"] << "\n";
    out << "  chi = " << p["chi"].get<std::string>() << ", deg = "
        << (p["degree"].is_string() ? p["degree"].get<std::string>() : std::to_string(p["degree"].get<int>()))
        << ", mu = " << p["mu"].get<std::string>() << "\n";
  }
  if (!j["generating_function"].is_null())
    out << "generating function: " << j["generating_function"]["text"].get<std::string>() << "\n";
  for (const auto& e : j["curvature"]) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "curvature [%s]: %.10f +- %.3g\n", e["method"].get<std::string>().c_str(),
                  e["value"].get<double>(), e["uncertainty"].get<double>());
    out << buf;
  }
  if (!j["metric_basis"].is_null()) {
    const auto& mb = j["metric_basis"];
    out << "metric basis through degree " << mb["numeric_max_degree"] << ": " << mb["elements"].size() << " elements\n";
    for (const auto& el : mb["elements"]) {
      out << "  deg " << el["degree"] << "  lambda^2 = " << el["lambda_sq"] << "  phi =";
      for (const auto& t : el["terms"]) out << " (" << t["coeff"].get<std::string>() << ")" << t["monomial"].get<std::string>();
      out << "\n";
    }
    for (const auto& w : mb["warnings"]) out << "  warning: " << w.get<std::string>() << "\n";
  }
  if (!j["extra"].is_null())
    for (auto it = j["extra"].begin(); it != j["extra"].end(); ++it) out << it.key() << ": " << it.value().dump() << "\n";
  for (const auto& c : j["checks"]) {
    char buf[256];
    std::snprintf(buf, sizeof buf, "[%s] %s  residual=%.3g tol=%.3g", c["passed"].get<bool>() ? "pass" : "FAIL",
                  c["name"].get<std::string>().c_str(), c["residual"].get<double>(), c["tolerance"].get<double>());
    out << buf;
    if (!c["detail"].get<std::string>().empty()) out << "  " << c["detail"].get<std::string>();
    out << "\n";
  }
  if (!j["first_failure"].is_null()) out << "first failing property: " << j["first_failure"].get<std::string>() << "\n";
  out << "seed: " << j["seed"] << "\n";
  if (r.timing_seconds > 0) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "time: %.2f s\n", r.timing_seconds);
    out << buf;
  }
  return out.str();
}

// ---- helpers ---------------------------------------------------------------

struct LoadedInput {
  std::string source;
  AnyPresentation presentation;
};

inline LoadedInput load_input(const std::string& input) {
  if (input.empty()) throw InputError("no input spec given");
  if (input.front() == '@') return {input, find_fixture(input.substr(1)).presentation};
  return {input, load_presentation(input)};
}

/// Size budget for float models: sum of dim F_n^3 over degrees carrying generators, plus sum of dim F_n
/// over generator-free degrees (these use sparse shifts only).
inline constexpr double kDenseBudget = 4e9;
inline constexpr double kSparseBudget = 2e7;

template <class S>
bool model_fits_budget(const GradedPresentation<S>& P, int n_max) {
  const ValidationReport rep = validated(P);
  std::optional<int> first;
  for (const auto& d : rep.degrees)
    if (d && (!first || *d < *first)) first = *d;
  double dense = 0.0, sparse = 0.0;
  for (int n = P.spec.n_min(); n <= n_max; ++n) {
    const double f = static_cast<double>(free_dim(P.spec, n));
    if (first && n >= *first)
      dense += f * f * f;
    else
      sparse += f * P.spec.d;
  }
  return dense <= kDenseBudget && sparse <= kSparseBudget;
}

/// Largest degree <= requested whose float model fits the size budget.
template <class S>
int numeric_degree_cap(const GradedPresentation<S>& P, int requested) {
  int n = requested;
  while (n > P.spec.n_min() + 1 && !model_fits_budget(P, n)) --n;
  return n;
}

inline bool is_ideal(const FreeModuleSpec& s) { return s.r == 1 && s.shifts[0] == 0; }

template <class S>
bool has_nonzero_generator(const GradedPresentation<S>& P) {
  for (const auto& g : P.generators)
    if (!g.is_zero()) return true;
  return false;
}

inline Report start_report(const RunConfig& cfg, const LoadedInput& in) {
  Report r;
  r.command = cfg.command;
  r.input = {{"source", in.source}, {"spec", presentation_to_json(in.presentation)}};
  r.config = cfg.to_json();
  r.seed = cfg.seed;
  return r;
}

template <class S>
HilbertProfile exact_profile(const GradedPresentation<S>& P, const DimensionTable& t) {
  return fit_hilbert_polynomial(cumulate(RankSequence{t.n_min, t.dims_H}), P.spec.d);
}

inline CheckResult make_check(std::string name, double residual, double tol, std::string detail = {}) {
  return {std::move(name), residual <= tol, residual, tol, std::move(detail)};
}

// ---- commands --------------------------------------------------------------

inline Report run_invariants(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedInput in = load_input(cfg.input);
  Report r = start_report(cfg, in);
  std::visit(
      [&](const auto& P) {
        const DimensionTable t = quotient_dims(P, cfg.max_degree);
        r.dims = t;
        const HilbertProfile prof = exact_profile(P, t);
        r.profile = prof;
        r.generating_function = gf_to_json(generating_function(prof));
      },
      in.presentation);
  r.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

template <class S>
void curvature_into(const RunConfig& cfg, const GradedPresentation<S>& P, Report& r, const QuotientModel& model,
                    const mpq_class& chi) {
  const CurvatureEstimate asym = curvature_asymptotic(model);
  r.curvature.push_back(asym);
  const double chi_d = chi.get_d();
  r.checks.push_back(make_check("gauss-bonnet", std::abs(asym.value - chi_d), 1e-6, "|K_asymptotic - chi|"));
  const double rank = model.defect_rank();
  const double tol = 1e-6 + asym.uncertainty;
  double viol = std::max({0.0, -asym.value - tol, asym.value - chi_d - tol, chi_d - rank});
  r.checks.push_back(make_check("sandwich", viol, 0.0, "0 <= K <= chi <= rank(H), rank(H) = " + std::to_string(static_cast<int>(rank))));
  if (cfg.method == "asymptotic") return;

  if (!has_nonzero_generator(P)) {
    CurvatureEstimate mc = curvature_monte_carlo_free(P.spec.d, P.spec.r, cfg.samples, cfg.r_schedule, cfg.seed,
                                                      cfg.tolerance, cfg.threads);
    mc.diagnostics["residual_vs_chi"] = std::abs(mc.value - chi_d);
    r.curvature.push_back(mc);
    return;
  }
  const auto top = model.top_defect_degree();
  const double dt = trace_of(model.defect_operator());
  const int depth = neumann_depth(dt, cfg.r_schedule.back(), cfg.tolerance);
  const int need = (top ? *top : model.n_min()) + depth;
  CurvatureEstimate mc;
  if (need <= model.n_max()) {
    mc = curvature_monte_carlo(model, cfg.samples, cfg.r_schedule, cfg.seed, cfg.tolerance, cfg.threads);
    mc.diagnostics["model_max_degree"] = model.n_max();
  } else {
    if (!model_fits_budget(P, need))
      throw InputError("boundary method needs Neumann depth " + std::to_string(depth) + " (model degree " +
                       std::to_string(need) + "), beyond the size budget; raise max degree or lower r");
    const QuotientModel deep = QuotientModel::build(P, need, cfg.threads);
    mc = curvature_monte_carlo(deep, cfg.samples, cfg.r_schedule, cfg.seed, cfg.tolerance, cfg.threads);
    mc.diagnostics["model_max_degree"] = need;
  }
  mc.diagnostics["residual_vs_chi"] = std::abs(mc.value - chi_d);
  r.curvature.push_back(mc);
}

inline Report run_curvature(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedInput in = load_input(cfg.input);
  Report r = start_report(cfg, in);
  std::visit(
      [&](const auto& P) {
        const DimensionTable t = quotient_dims(P, cfg.max_degree);
        r.dims = t;
        const HilbertProfile prof = exact_profile(P, t);
        r.profile = prof;
        const int cap = numeric_degree_cap(P, cfg.max_degree);
        const QuotientModel model = QuotientModel::build(P, cap, cfg.threads);
        r.extra["numeric_max_degree"] = cap;
        r.extra["chi"] = prof.chi.get_str();
        r.extra["rank"] = model.defect_rank();
        curvature_into(cfg, P, r, model, prof.chi);
        r.extra["gauss_bonnet_residual"] = std::abs(r.curvature.front().value - prof.chi.get_d());
      },
      in.presentation);
  r.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

namespace detail {

inline std::vector<std::vector<cplx>> interior_points(int d, int count, double radius, unsigned long seed) {
  std::seed_seq ss{seed, 0x1e7UL};
  std::mt19937_64 rng(ss);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<cplx>> pts;
  for (int i = 0; i < count; ++i) {
    auto z = sphere_point(d, rng);
    const double rho = radius * u(rng);
    for (auto& c : z) c *= rho;
    pts.push_back(std::move(z));
  }
  return pts;
}

inline nlohmann::json poly_terms_json(const Polynomial<cplx>& p) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [a, c] : p.terms()) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.12g%+.12gi", c.real(), c.imag());
    out.push_back({{"exponents", a.values()}, {"coeff", std::string(buf)}, {"monomial", monomial_str(a)}});
  }
  return out;
}

}  // namespace detail

struct IdealChecks {
  double frame = 0.0;
  double inner_excess = 0.0;  // max over points of residual - tail bound - rounding (<= 0 passes)
  double inner_max_partial = 0.0;
  bool inner_monotone = true;
};

template <class S>
IdealChecks metric_basis_into(const RunConfig& cfg, const GradedPresentation<S>& P, Report& r, int cap) {
  const SubmoduleModel sm = SubmoduleModel::build(P, cap, cfg.threads);
  const MetricBasis b = metric_basis(sm);
  IdealChecks ic;
  nlohmann::json mb;
  mb["numeric_max_degree"] = cap;
  mb["cutoff"] = b.cutoff;
  mb["submodule_rank"] = sm.defect_rank();
  mb["elements"] = nlohmann::json::array();
  nlohmann::json counts = nlohmann::json::array(), residuals = nlohmann::json::array();
  for (int n = 0; n <= cap; ++n) {
    counts.push_back(b.at(n).size());
    const double fr = frame_residual(b, sm, n);
    residuals.push_back(fr);
    ic.frame = std::max(ic.frame, fr);
    for (const auto& el : b.at(n))
      mb["elements"].push_back({{"degree", n}, {"lambda_sq", el.lambda_sq}, {"terms", detail::poly_terms_json(el.phi)}});
  }
  mb["count_by_degree"] = counts;
  mb["frame_residuals"] = residuals;
  mb["warnings"] = b.warnings;
  const auto pts = detail::interior_points(P.spec.d, 5, 0.7, cfg.seed);
  nlohmann::json rows = nlohmann::json::array();
  ic.inner_excess = -1.0;
  for (const auto& row : inner_sequence_profile(b, sm, pts, cap)) {
    nlohmann::json pt = nlohmann::json::array();
    for (const auto& c : row.point) pt.push_back({c.real(), c.imag()});
    rows.push_back({{"point", pt},
                    {"D", row.D},
                    {"partial_sum", row.partial_sum},
                    {"oracle", row.oracle},
                    {"residual", row.residual},
                    {"tail_bound", row.tail_bound},
                    {"rounding", row.rounding}});
    ic.inner_excess = std::max(ic.inner_excess, row.residual - row.tail_bound - row.rounding);
    ic.inner_max_partial = std::max(ic.inner_max_partial, row.max_partial);
    ic.inner_monotone = ic.inner_monotone && row.monotone;
  }
  mb["inner_sequence"] = rows;
  const CodimensionReport cr = codimension_report(P, cfg.max_degree);
  mb["codimension"] = {{"dims_quotient", cr.dims_quotient},
                       {"conclusive", cr.conclusive},
                       {"finite", cr.finite},
                       {"codimension", cr.codimension},
                       {"note", cr.note}};
  r.metric_basis = mb;
  return ic;
}

inline Report run_metric_basis(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedInput in = load_input(cfg.input);
  Report r = start_report(cfg, in);
  std::visit(
      [&](const auto& P) {
        validated(P);
        if (!is_ideal(P.spec)) throw InputError("metric-basis needs an ideal spec: rank 1, shifts [0]");
        if (!has_nonzero_generator(P)) throw InputError("metric-basis needs at least one nonzero generator");
        const int cap = numeric_degree_cap(P, cfg.max_degree);
        const IdealChecks ic = metric_basis_into(cfg, P, r, cap);
        r.checks.push_back(make_check("frame-identity", ic.frame, 1e-8));
        r.checks.push_back(make_check("inner-sequence-identity", std::max(0.0, ic.inner_excess), 0.0,
                                      "|s_D - oracle| <= tail bound"));
        r.checks.push_back(make_check("inner-sequence-bound", std::max(0.0, ic.inner_max_partial - 1.0), 1e-8,
                                      ic.inner_monotone ? "partial sums monotone" : "partial sums NOT monotone"));
        if (!ic.inner_monotone) r.checks.back().passed = false;
      },
      in.presentation);
  r.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

/// Exact reproducing-kernel check with random rational data: <f, szego_truncate(w, D)> = f(w).
inline bool reproducing_kernel_exact(int d, int D, int trials, unsigned long seed) {
  std::seed_seq ss{seed, 0x4b5UL};
  std::mt19937_64 rng(ss);
  std::uniform_int_distribution<int> num(-9, 9), den(1, 9), deg(0, D);
  auto rational = [&] { return mpq_class(num(rng), den(rng)); };
  for (int t = 0; t < trials; ++t) {
    std::vector<GaussianRational> w;
    for (int k = 0; k < d; ++k) w.emplace_back(mpq_class(num(rng), 20 * d), mpq_class(num(rng), 20 * d));
    Polynomial<GaussianRational> f(d);
    for (int i = 0; i < 6; ++i) {
      const auto ms = monomials(d, deg(rng));
      f.add_term(ms[static_cast<std::size_t>(rng() % ms.size())], GaussianRational(rational(), rational()));
    }
    const auto K = szego_truncate(std::span<const GaussianRational>(w), D);
    if (!(fock_inner(f, K) == evaluate_exact(f, std::span<const GaussianRational>(w)))) return false;
  }
  return true;
}

inline Report run_verify(const RunConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  const LoadedInput in = load_input(cfg.input);
  Report r = start_report(cfg, in);
  std::visit(
      [&](const auto& P) {
        const int d = P.spec.d;
        r.checks.push_back(make_check("reproducing-kernel", reproducing_kernel_exact(d, 4, 20, cfg.seed) ? 0.0 : 1.0, 0.0,
                                      "exact, 20 random rational polynomials"));
        const DimensionTable t = quotient_dims(P, cfg.max_degree);
        r.dims = t;
        const HilbertProfile prof = exact_profile(P, t);
        r.profile = prof;
        const int cap = numeric_degree_cap(P, cfg.max_degree);
        const QuotientModel model = QuotientModel::build(P, cap, cfg.threads);
        r.extra["numeric_max_degree"] = cap;
        r.checks.push_back(make_check("orthonormality", model.max_gram_residual(), 1e-10));
        const auto [lo, hi] = model.defect_eigen_range();
        r.checks.push_back(make_check("defect-positivity", std::max({0.0, -lo - 1e-10, hi - 1.0 - 1e-9}), 0.0,
                                      "eigenvalues of Delta^2 in [-1e-10, 1+1e-9]"));
        const DefectSums sums = defect_sum_sequence(model);
        {
          const auto exact = filtration_dims(P, cap);
          long mismatches = 0;
          const std::size_t n = std::min(exact.size(), sums.rank_seq.size());
          for (std::size_t i = 0; i < n; ++i) mismatches += exact[i] != sums.rank_seq[i];
          r.checks.push_back(make_check("filtration-rank", static_cast<double>(mismatches), 0.0,
                                        "numeric rank(1-phi^{n+1}(1)) vs exact, n <= " + std::to_string(n - 1)));
        }
        try {
          const HilbertProfile en = euler_numeric(model);
          r.checks.push_back(make_check("euler-numeric", mpq_class(abs(en.chi - prof.chi)).get_d(), 0.0, "chi from numeric ranks"));
        } catch (const NotStabilized& e) {
          r.checks.push_back({"euler-numeric", false, 1.0, 0.0, e.what()});
        }
        curvature_into(cfg, P, r, model, prof.chi);
        {
          double worst = 0.0;
          const std::vector<long> per(t.dims_H.begin(), t.dims_H.end());
          for (int k = 1; k <= 3 && k < static_cast<int>(per.size()); ++k) {
            RankSequence cut{t.n_min + k, std::vector<long>(per.begin() + k, per.end())};
            try {
              const HilbertProfile p2 = fit_hilbert_polynomial(cumulate(cut), d);
              worst = std::max(worst, mpq_class(abs(p2.chi - prof.chi)).get_d());
            } catch (const NotStabilized&) {
              worst = std::max(worst, 1.0);
            }
          }
          r.checks.push_back(make_check("euler-stability", worst, 0.0, "chi after dropping the lowest 1..3 pieces"));
        }
        {
          const PurityReport pr = purity_check(model);
          r.checks.push_back({"purity", pr.pure, pr.pure ? 0.0 : 1.0, 0.0, "support of phi^n(1) climbs with n"});
        }
        {
          double worst = 0.0;
          const auto top = model.top_defect_degree();
          const int nmax = top ? std::min(4, model.n_max() - *top) : 0;
          for (int n = 0; n <= nmax; ++n) {
            const auto [lhs, rhs] = dilation_trace_identity(model, n);
            worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
          }
          r.checks.push_back(make_check("dilation-trace-identity", worst, 1e-9));
        }
        if (is_ideal(P.spec)) {
          const HilbertProfile pI = fit_hilbert_polynomial(cumulate(RankSequence{0, t.dims_M}), d);
          const mpq_class total = pI.chi + prof.chi;
          r.checks.push_back(make_check("additivity", mpq_class(abs(total - 1)).get_d(), 0.0, "c(I) + c(A/I) = 1"));
          if (has_nonzero_generator(P)) {
            const IdealChecks ic = metric_basis_into(cfg, P, r, cap);
            r.checks.push_back(make_check("frame-identity", ic.frame, 1e-8));
            r.checks.push_back(make_check("inner-sequence-identity", std::max(0.0, ic.inner_excess), 0.0));
            CheckResult bound = make_check("inner-sequence-bound", std::max(0.0, ic.inner_max_partial - 1.0), 1e-8);
            bound.passed = bound.passed && ic.inner_monotone;
            r.checks.push_back(bound);
          }
        }
      },
      in.presentation);
  for (const auto& c : r.checks)
    if (!c.passed) {
      r.first_failure = c.name;
      r.exit_code = 3;
      break;
    }
  r.timing_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline nlohmann::json registry_list() {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& f : fixture_registry()) out.push_back({{"name", f.name}, {"description", f.description}});
  return out;
}

inline nlohmann::json registry_show(const std::string& name) { return presentation_to_json(AnyPresentation(find_fixture(name).presentation)); }

/// Process exit code for an exception escaping a command.
inline int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const InputError*>(&e)) return 1;
  if (dynamic_cast<const NotStabilized*>(&e)) return 2;
  return 3;
}

}  // namespace curvlab
