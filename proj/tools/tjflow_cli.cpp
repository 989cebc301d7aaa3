// tjflow: command-line driver.
//
//   tjflow check-cone     --config PATH [--out DIR]
//   tjflow run-flow       --config PATH [--out DIR] [--parallel K]
//   tjflow solve-elliptic --config PATH [--out DIR] [--seed S] [--parallel K]
//   tjflow acceptance     [--config PATH] [--out DIR] [--seed S] [--parallel K] [--only 1,2]
//
// Exit codes: 0 success, 2 validation failure, 3 designed fallback,
// 4 numerical failure.

#include <atomic>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "tjflow/acceptance.hpp"
#include "tjflow/config.hpp"
#include "tjflow/elliptic.hpp"
#include "tjflow/errors.hpp"
#include "tjflow/flow.hpp"
#include "tjflow/io.hpp"
#include "tjflow/random.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tjflow;

namespace {

enum Exit { kOk = 0, kValidation = 2, kFallback = 3, kNumerical = 4 };

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int parallel = 1;
};

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = ExperimentConfig::load(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (!c.out.empty()) cfg.output.dir = c.out;
  return cfg;
}

json point_json(const Grid& grid, std::size_t p) {
  const auto x = grid.coordinates(p);
  json coords = json::array();
  for (int d = 0; d < grid.dim(); ++d) coords.push_back(x[static_cast<std::size_t>(d)]);
  return {{"index", p}, {"x", coords}};
}

json header(const ExperimentConfig& cfg, const std::string& command) {
  return {{"command", command}, {"config_hash", cfg.hash_hex()}, {"seed", cfg.seed},
          {"n", cfg.geometry.n}, {"N", cfg.geometry.N}};
}

int cmd_check_cone(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const ThetaSpec spec = cfg.theta_spec();
  const ThetaValidation v = validate_theta(spec);
  const Grid grid = cfg.grid();
  json summary = header(cfg, "check-cone");
  summary["theta_min_eigenvalue"] = v.min_eigenvalue;
  summary["theta_min_point"] = point_json(grid, v.argmin);
  summary["semipositive"] = v.semipositive;
  summary["warnings"] = v.warnings;
  if (spec.degeneracy) {
    summary["degeneracy_ok"] = v.degeneracy_ok;
    summary["degeneracy_constant"] = v.degeneracy_constant.value_or(0.0);
  }
  const double c_beta = cohomology_constant(spec, cfg.geometry.beta);
  summary["c_beta"] = c_beta;

  int code = kOk;
  std::string verdict = "cone condition holds";
  if (!v.semipositive) {
    code = kValidation;
    verdict = "theta is not semi-positive";
  } else if (!v.degeneracy_ok) {
    code = kValidation;
    verdict = "declared degeneracy bound fails";
    summary["violating_point"] = point_json(grid, v.degeneracy_worst_point);
  }
  if (code == kOk) {
    const FormField theta = spec.realize();
    const SubsolutionReport eig = subsolution_check(PotentialField(grid), theta, c_beta);
    summary["eigenvalue_margin"] = eig.margin;
    summary["eigenvalue_margin_point"] = point_json(grid, eig.argmin);
    SubsolutionReport sub = eig;
    if (cfg.geometry.subsolution) {
      sub = subsolution_check(sample_modes(grid, *cfg.geometry.subsolution), theta, c_beta);
    }
    summary["subsolution_margin"] = sub.margin;
    summary["subsolution_margin_point"] = point_json(grid, sub.argmin);
    if (!sub.holds()) {
      code = kValidation;
      verdict = "cone condition fails";
      summary["violating_point"] = point_json(grid, sub.argmin);
    }
  }
  summary["verdict"] = verdict;
  summary["exit_code"] = code;
  write_json(cfg.output.dir / "cone.json", summary);
  std::cout << summary.dump(2) << '\n';
  for (const auto& w : v.warnings) std::cerr << "warning: " << w << '\n';
  if (code != kOk) std::cerr << "check-cone: " << verdict << '\n';
  return code;
}

json track_json(const MaximumPrincipleTrack& t) {
  return {{"initial_sup_abs_dphi", t.initial_sup_abs},
          {"running_max_sup_abs_dphi", t.running_max_sup_abs},
          {"worst_sup_increase", t.worst_sup_increase},
          {"worst_inf_decrease", t.worst_inf_decrease},
          {"worst_trace_margin", t.worst_trace_margin},
          {"worst_energy_drift", t.worst_energy},
          {"min_sup_phi", t.worst_sup_phi},
          {"max_inf_phi", t.worst_inf_phi}};
}

json record_json(const EpsilonRecord& rec) {
  json j = {{"epsilon", rec.epsilon}, {"oscillation", rec.oscillation},
            {"weighted_c2", rec.weighted_c2}, {"error", rec.error}};
  if (rec.result) {
    const FlowResult& r = *rec.result;
    j["converged"] = r.converged;
    j["steps"] = r.steps;
    j["rejected_steps"] = r.rejected_steps;
    j["t"] = r.t;
    j["final_sup_abs_dphi"] = r.final_sup_abs_speed;
    j["rows"] = r.series.size();
    j["maximum_principle"] = track_json(r.track);
  } else {
    j["converged"] = false;
  }
  return j;
}

void snapshot(const ExperimentConfig& cfg, const fs::path& dir, std::size_t index,
              const EpsilonRecord& rec) {
  if (!cfg.output.snapshots || !rec.result) return;
  write_field(dir / ("limit_eps" + std::to_string(index)), rec.result->limit,
              {{"config_hash", cfg.hash_hex()}, {"epsilon", rec.epsilon},
               {"normalization", "mean-zero"}});
}

int cmd_run_flow(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const GeometrySetup setup = cfg.setup();
  const PotentialField phi0 = cfg.initial_potential();
  const fs::path dir = cfg.output.dir;
  json summary = header(cfg, "run-flow");
  summary["c_beta"] = setup.c_beta;
  summary["warnings"] = setup.validation.warnings;

  std::vector<EpsilonRecord> records;
  const auto& schedule = cfg.flow.epsilon_schedule;
  if (c.parallel > 1 && schedule.size() > 1) {
    // Independent cold starts, one output directory per entry.
    summary["mode"] = "parallel-cold-start";
    std::vector<std::optional<EpsilonRecord>> slots(schedule.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t i = next++; i < schedule.size(); i = next++) {
        FlowConfig single = cfg.flow;
        single.epsilon_schedule = {schedule[i]};
        const fs::path sub = dir / ("eps" + std::to_string(i));
        DiagnosticsCsv csv(sub / "diagnostics.csv", cfg.hash_hex());
        ContinuationResult r = epsilon_continuation(
            phi0, setup, single, [&](double e, const DiagnosticsRow& row) { csv.write(row, e); });
        snapshot(cfg, sub, i, r.records.front());
        slots[i] = std::move(r.records.front());
      }
    };
    std::vector<std::thread> pool;
    const int threads = std::min<int>(c.parallel, static_cast<int>(schedule.size()));
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    for (auto& s : slots) records.push_back(std::move(*s));
  } else {
    summary["mode"] = "warm-start-continuation";
    DiagnosticsCsv csv(dir / "diagnostics.csv", cfg.hash_hex());
    ContinuationResult r = epsilon_continuation(
        phi0, setup, cfg.flow, [&](double e, const DiagnosticsRow& row) { csv.write(row, e); });
    for (std::size_t i = 0; i < r.records.size(); ++i) snapshot(cfg, dir, i, r.records[i]);
    records = std::move(r.records);
  }

  bool all = records.size() == schedule.size();
  double max_osc = 0.0;
  json per = json::array();
  for (const auto& rec : records) {
    per.push_back(record_json(rec));
    all = all && rec.result && rec.result->converged;
    max_osc = std::max(max_osc, rec.oscillation);
  }
  summary["runs"] = per;
  summary["all_converged"] = all;
  summary["max_oscillation"] = max_osc;
  const int code = all ? kOk : kNumerical;
  summary["exit_code"] = code;
  write_json(dir / "summary.json", summary);
  for (const auto& rec : records) {
    std::cout << "eps=" << format_double(rec.epsilon)
              << (rec.result && rec.result->converged ? " converged" : " FAILED")
              << " steps=" << (rec.result ? rec.result->steps : 0)
              << " osc=" << format_double(rec.oscillation)
              << (rec.error.empty() ? "" : " error: " + rec.error) << '\n';
  }
  return code;
}

int cmd_solve_elliptic(const Common& c) {
  const ExperimentConfig cfg = load(c);
  const GeometrySetup setup = cfg.setup();
  const fs::path dir = cfg.output.dir;
  json summary = header(cfg, "solve-elliptic");
  EllipticProblem problem =
      EllipticProblem::twisted(setup, cfg.solver.epsilon, std::nullopt, cfg.solver.gauge);
  summary["epsilon"] = cfg.solver.epsilon;
  summary["c"] = setup.c_epsilon(cfg.solver.epsilon);
  if (problem.subsolution_margin) summary["subsolution_margin"] = *problem.subsolution_margin;

  std::vector<PotentialField> seeds{cfg.initial_potential()};
  for (int i = 1; i < cfg.solver.seeds; ++i) {
    Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
    seeds.push_back(random_potential(setup.grid, rng, cfg.solver.seed_hessian));
  }

  int code = kOk;
  try {
    if (problem.degenerate()) {
      throw DesignedFallback("degenerate theta with beta = 0 has no uniformly elliptic linearization");
    }
    const UniquenessReport rep = uniqueness_probe(problem, seeds, cfg.solver.newton,
                                                  cfg.solver.agreement_tol, c.parallel);
    json runs = json::array();
    for (const auto& r : rep.runs) {
      runs.push_back({{"iterations", r.iterations},
                      {"linear_iterations", r.linear_iterations},
                      {"final_residual", r.final_residual},
                      {"residual_history", r.residual_history},
                      {"step_lengths", r.step_lengths}});
    }
    summary["runs"] = runs;
    summary["failures"] = rep.failures;
    summary["max_pairwise_distance"] = rep.max_pairwise_distance;
    summary["agree"] = rep.agree;
    if (!rep.runs.empty()) {
      const PotentialField& u = rep.runs.front().solution;
      summary["oscillation"] = u.oscillation();
      if (cfg.output.snapshots) {
        write_field(dir / "solution", u,
                    {{"config_hash", cfg.hash_hex()},
                     {"normalization",
                      cfg.solver.gauge == Gauge::MeanZero ? "mean-zero" : "sup-zero"}});
      }
      std::cout << "residual=" << format_double(rep.runs.front().final_residual)
                << " iterations=" << rep.runs.front().iterations;
      if (seeds.size() > 1) {
        std::cout << " seeds=" << seeds.size()
                  << " max_pairwise=" << format_double(rep.max_pairwise_distance)
                  << (rep.agree ? " agree" : " DISAGREE");
      }
      std::cout << '\n';
    }
    if (!rep.agree) {
      code = kNumerical;
      for (const auto& f : rep.failures) {
        if (!f.empty()) std::cerr << "solve-elliptic: " << f << '\n';
      }
    }
  } catch (const DesignedFallback& e) {
    code = kFallback;
    summary["fallback"] = e.what();
    summary["exit_code"] = code;
    write_json(dir / "summary.json", summary);
    std::cerr << "solve-elliptic: use continuation (run-flow with an epsilon schedule): "
              << e.what() << '\n';
    return code;
  }
  summary["exit_code"] = code;
  write_json(dir / "summary.json", summary);
  return code;
}

std::set<int> parse_only(const std::string& s) {
  std::set<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    int id = 0;
    const auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), id);
    if (ec != std::errc() || end != item.data() + item.size()) id = 0;
    if (id < 1 || id > 12) throw ValidationError("acceptance: criterion " + item + " unknown");
    out.insert(id);
  }
  return out;
}

int cmd_acceptance(const Common& c, const std::string& only) {
  AcceptanceOptions opt;
  fs::path dir = "out";
  std::string hash = "defaults";
  if (!c.config.empty()) {
    const ExperimentConfig cfg = load(c);
    opt.tol.apply(cfg.acceptance);
    opt.seed = cfg.seed;
    opt.N = cfg.geometry.N;
    dir = cfg.output.dir;
    hash = cfg.hash_hex();
  } else {
    if (c.seed) opt.seed = *c.seed;
    if (!c.out.empty()) dir = c.out;
  }
  opt.parallel = c.parallel;
  opt.only = parse_only(only);
  opt.on_result = [](const CriterionResult& r) { std::cout << format_result(r) << std::endl; };
  const auto results = run_acceptance(opt);
  json table = json::array();
  bool all = true;
  for (const auto& r : results) {
    table.push_back({{"id", r.id}, {"name", r.name}, {"passed", r.passed},
                     {"detail", r.detail}, {"metrics", r.metrics}});
    all = all && r.passed;
  }
  const int code = all ? kOk : kNumerical;
  write_json(dir / "acceptance.json", {{"command", "acceptance"},
                                       {"config_hash", hash},
                                       {"seed", opt.seed},
                                       {"tolerances", opt.tol.to_json()},
                                       {"criteria", table},
                                       {"all_passed", all},
                                       {"exit_code", code}});
  std::cout << (all ? "ALL PASS" : "FAILURES PRESENT") << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twisted J-flow lab on the flat torus"};
  app.require_subcommand(1);
  Common common;
  std::string only;
  std::uint64_t seed_value = 0;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* opt = sub->add_option("--config", common.config, "YAML configuration file");
    if (config_required) opt->required();
    opt->check(CLI::ExistingFile);
    sub->add_option("--out", common.out, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed_value, "random seed (overrides the config seed)");
    sub->add_option("--parallel", common.parallel, "worker threads")
        ->check(CLI::Range(1, 256));
  };
  auto* cone = app.add_subcommand("check-cone", "validate theta and report cone margins");
  add_common(cone, true);
  auto* flow = app.add_subcommand("run-flow", "run the flow over the epsilon schedule");
  add_common(flow, true);
  auto* ell = app.add_subcommand("solve-elliptic", "Newton solve of the twisted J-equation");
  add_common(ell, true);
  auto* acc = app.add_subcommand("acceptance", "run the acceptance suite");
  add_common(acc, false);
  acc->add_option("--only", only, "comma-separated criterion ids");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kValidation;
  }
  for (auto* sub : {cone, flow, ell, acc}) {
    if (sub->parsed() && sub->count("--seed")) common.seed = seed_value;
  }

  try {
    if (cone->parsed()) return cmd_check_cone(common);
    if (flow->parsed()) return cmd_run_flow(common);
    if (ell->parsed()) return cmd_solve_elliptic(common);
    return cmd_acceptance(common, only);
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return kValidation;
  } catch (const DesignedFallback& e) {
    std::cerr << "designed fallback: " << e.what() << '\n';
    return kFallback;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  }
}
