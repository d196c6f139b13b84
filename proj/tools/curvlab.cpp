#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "curvlab/curvlab.hpp"

namespace {

std::vector<double> parse_schedule(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw curvlab::InputError("bad --r-schedule entry '" + item + "'");
    }
    if (used != item.size()) throw curvlab::InputError("bad --r-schedule entry '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void emit(const curvlab::Report& r, const std::string& format) {
  if (format == "json")
    std::cout << curvlab::report_json_text(r);
  else
    std::cout << curvlab::render_text(r);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvlab: curvature invariant, Euler characteristic and metric bases of graded Hilbert modules"};
  app.require_subcommand(1);

  curvlab::RunConfig cfg;
  cfg.threads = curvlab::default_threads();
  std::string schedule = "0.9,0.99";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("spec", cfg.input, "module spec JSON file, or @name for a built-in fixture")->required();
    sub->add_option("--max-degree", cfg.max_degree, "largest degree computed")->capture_default_str();
    sub->add_option("--tolerance", cfg.tolerance, "numeric tolerance (Neumann tail bound)")->capture_default_str();
    sub->add_option("--samples", cfg.samples, "Monte-Carlo sphere samples")->capture_default_str();
    sub->add_option("--r-schedule", schedule, "increasing radii in (0,1), comma separated")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "random seed")->capture_default_str();
    sub->add_option("--method", cfg.method, "asymptotic | boundary | both")->capture_default_str();
    sub->add_option("--output", cfg.output, "text | json")->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads (default: CURVLAB_THREADS or hardware)");
  };
  auto* inv = app.add_subcommand("invariants", "exact dimensions, Hilbert polynomial, chi, deg, mu");
  auto* cur = app.add_subcommand("curvature", "curvature invariant (asymptotic and/or boundary Monte-Carlo)");
  auto* mb = app.add_subcommand("metric-basis", "metric basis of an ideal, frame residuals, inner-sequence profile");
  auto* ver = app.add_subcommand("verify", "full property battery; nonzero exit on the first failure");
  for (auto* s : {inv, cur, mb, ver}) add_common(s);

  auto* ex = app.add_subcommand("examples", "built-in fixtures");
  ex->require_subcommand(1);
  std::string show_name;
  std::string ex_output = "text";
  auto* ex_list = ex->add_subcommand("list", "list fixture names");
  ex_list->add_option("--output", ex_output, "text | json");
  auto* ex_show = ex->add_subcommand("show", "print a fixture spec as JSON");
  ex_show->add_option("name", show_name, "fixture name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (ex->parsed()) {
      if (ex_list->parsed()) {
        const auto list = curvlab::registry_list();
        if (ex_output == "json") {
          std::cout << list.dump(2) << "\n";
        } else {
          for (const auto& f : list) std::printf("%-18s %s\n", f["name"].get<std::string>().c_str(), f["description"].get<std::string>().c_str());
        }
      } else {
        std::cout << curvlab::registry_show(show_name).dump(2) << "\n";
      }
      return 0;
    }

    cfg.r_schedule = parse_schedule(schedule);
    cfg.check();
    curvlab::Report report;
    if (inv->parsed()) {
      cfg.command = "invariants";
      report = curvlab::run_invariants(cfg);
    } else if (cur->parsed()) {
      cfg.command = "curvature";
      report = curvlab::run_curvature(cfg);
    } else if (mb->parsed()) {
      cfg.command = "metric-basis";
      report = curvlab::run_metric_basis(cfg);
    } else {
      cfg.command = "verify";
      report = curvlab::run_verify(cfg);
    }
    emit(report, cfg.output);
    if (report.exit_code != 0)
      std::cerr << "error: property '" << report.first_failure.value_or("?") << "' failed\n";
    return report.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return curvlab::exit_code_for(e);
  }
}
