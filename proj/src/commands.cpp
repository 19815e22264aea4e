// Copyright 2026 The dysoncirc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dysoncirc/commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <sstream>

#include "dysoncirc/stability.hpp"

namespace dysoncirc {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr double kPi = std::numbers::pi;

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> header(const RunConfig &cfg) {
  return {"dyson_circ " + std::string(kVersion), "config_hash " + cfg.hash, "command " + cfg.command,
          "seed " + std::to_string(cfg.seed)};
}

json meta(const RunConfig &cfg) {
  return {{"tool", "dyson_circ"},
          {"version", kVersion},
          {"config_hash", cfg.hash},
          {"command", cfg.command},
          {"seed", cfg.seed},
          {"config", cfg.document}};
}

std::string write_file(const CommandOptions &opts, const std::string &name, const std::string &body) {
  fs::path dir(opts.out_dir.empty() ? "." : opts.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << body;
  if (!f) throw IoError("write failed for " + p.string());
  return p.string();
}

std::string dump(const json &j) { return j.dump(2) + "\n"; }

std::string sci(double x) {
  std::ostringstream s;
  s << std::setprecision(16) << std::scientific << x;
  return s.str();
}

// pi * integral_0^t sigma, tabulated on a fine uniform grid over [0, rho]
struct MassTable {
  double rho = 0;
  std::vector<double> cum;
  double operator()(double t) const {
    if (t <= 0) return 0.0;
    if (t >= rho) return std::min(cum.back(), 1.0);
    double x = t / rho * double(cum.size() - 1);
    std::size_t k = std::size_t(x);
    double w = x - double(k);
    return std::min((1 - w) * cum[k] + w * cum[k + 1], 1.0);
  }
};

MassTable mass_table(const DensityProfile &p, int cells = 4000) {
  MassTable m;
  m.rho = p.rho;
  m.cum.assign(cells + 1, 0.0);
  const double h = p.rho / cells;
  double prev = profile_density(p, 0.0);
  for (int k = 1; k <= cells; ++k) {
    double t = k * h;
    double cur = k == cells ? p.jump : profile_density(p, t);
    m.cum[k] = m.cum[k - 1] + kPi * 0.5 * h * (prev + cur);
    prev = cur;
  }
  return m;
}

// integral of the radial bump (1 - |z|^2/R^2)^3 against sigma
double bump_mass(const DensityProfile &p, double R) {
  const int cells = 4000;
  const double top = std::min(R * R, p.rho), h = top / cells;
  double acc = 0;
  for (int k = 0; k < cells; ++k) {
    double t = (k + 0.5) * h;
    acc += std::pow(1 - t / (R * R), 3) * profile_density(p, t);
  }
  return kPi * acc * h;
}

std::string short_num(double x) {
  std::ostringstream s;
  s << x;
  return s.str();
}

json pass_entry(double value, double tolerance, bool pass) {
  return {{"value", value}, {"tolerance", tolerance}, {"pass", pass}};
}

}  // namespace

CommandResult cmd_density(const RunConfig &cfg, const CommandOptions &opts) {
  CommandResult r;
  DensityProfile p = sigma_profile(*cfg.model, cfg.grid, cfg.sigma);
  std::ostringstream csv;
  auto h = header(cfg);
  h.push_back("rho " + sci(p.rho));
  h.push_back("jump " + sci(p.jump));
  h.push_back("normalization " + sci(p.normalization));
  write_profile_csv(p, csv, h);
  json j = meta(cfg);
  j["profile"] = profile_to_json(p);
  r.files.push_back(write_file(opts, "density.csv", csv.str()));
  r.files.push_back(write_file(opts, "density.json", dump(j)));
  r.table = csv.str();
  r.report = {{"command", "density"},
              {"config_hash", cfg.hash},
              {"rho", p.rho},
              {"jump", p.jump},
              {"normalization", p.normalization},
              {"points", p.tau_grid.size()},
              {"warnings", p.warnings},
              {"files", r.files}};
  r.warnings = p.warnings;
  return r;
}

CommandResult cmd_simulate(const RunConfig &cfg, const CommandOptions &opts) {
  const SimulateConfig &s = cfg.simulate;
  const CovarianceOperator &op = *cfg.model;
  EnsembleSpec spec{op, s.n, cfg.seed, s.samples, s.field};
  validate(spec);

  CommandResult r;
  const double rho = op.rho();
  GridSpec g;
  g.points = s.profile_points;
  g.threads = cfg.grid.threads;
  DensityProfile prof = sigma_profile(op, g, cfg.sigma);
  MassTable mass = mass_table(prof);

  std::ostringstream csv;
  for (const auto &line : header(cfg)) csv << "# " << line << '\n';
  csv << "# n " << s.n << "\n# samples " << s.samples << '\n';
  csv << "sample,re,im\n";

  json spectra = json::array();
  double max_abs2 = 0, worst_radial = 0, worst_angle_p = 1;
  Mat X0;
  for (int k = 0; k < s.samples; ++k) {
    Mat X = sample(spec, k);
    Vec ev = spectrum(X).eigenvalues;
    std::vector<double> re(ev.size()), im(ev.size()), radius(ev.size());
    for (int i = 0; i < ev.size(); ++i) {
      re[i] = ev(i).real();
      im[i] = ev(i).imag();
      radius[i] = std::abs(ev(i));
      csv << k << ',' << sci(re[i]) << ',' << sci(im[i]) << '\n';
    }
    spectra.push_back({{"sample", k}, {"re", re}, {"im", im}});
    max_abs2 = std::max(max_abs2, outlier_check(ev, rho, s.tau_star).max_abs2);
    worst_radial = std::max(
        worst_radial, kolmogorov_distance(radius, [&](double x) { return mass(x * x); }));
    worst_angle_p = std::min(worst_angle_p, angle_uniformity(ev).p_value);
    if (k == 0) X0 = std::move(X);
  }

  json checks;
  const double n = s.n;
  {
    double excess = max_abs2 - (rho + s.tau_star);
    checks["outliers"] = {{"max_abs2", max_abs2}, {"bound", rho + s.tau_star},
                          {"max_excess", excess}, {"pass", excess <= 0}};
  }
  checks["radial_cdf"] = pass_entry(worst_radial, s.radial_tolerance, worst_radial <= s.radial_tolerance);
  checks["angle_uniformity"] = {{"p_value", worst_angle_p}, {"level", 0.01}, {"pass", worst_angle_p >= 0.01}};
  {
    double tz = std::norm(s.zeta);
    DysonSolution sol = solve_at(op, tz, s.eta, nullptr, cfg.sigma.solver);
    BlockSolution M = assemble_M(op, sol, s.zeta);
    double gap = resolvent_check(X0, s.zeta, s.eta, M);
    checks["resolvent"] = pass_entry(gap, s.resolvent_constant / n, gap <= s.resolvent_constant / n);
    checks["resolvent"]["sample"] = 0;
  }
  {
    int c = small_singular_count(X0, s.zeta, s.small_eta);
    double bound = s.small_constant * n * s.small_eta;
    checks["small_singular"] = {{"count", c}, {"bound", bound}, {"pass", c <= bound}, {"sample", 0}};
  }
  {
    DelocalizationReport d =
        delocalization_check(X0, rho, s.tau_star, s.probes, cfg.seed, s.delocalization_eps);
    checks["delocalization"] = {{"max_overlap", d.max_overlap}, {"threshold", d.threshold},
                                {"eigenvectors", d.eigenvectors}, {"probes", d.probes},
                                {"pass", d.pass}, {"sample", 0}};
  }
  {
    SingularGuard gd = smallest_singular_guard(X0, s.zeta, s.guard_eps);
    checks["smallest_singular"] = {{"s_min", gd.s_min}, {"threshold", gd.threshold},
                                   {"pass", gd.pass}, {"sample", 0}};
  }
  if (s.girko) {
    const double R = s.girko_radius_fraction * std::sqrt(rho);
    TestFunction f = bump(0.0, R);
    GirkoOptions go = s.girko_options;
    GirkoResult gr = girko_statistic(X0, f, go);
    double target = bump_mass(prof, R);
    double worst = std::max(std::abs(gr.direct - target), std::abs(gr.girko - target));
    checks["girko"] = {{"direct", gr.direct},
                       {"hermitized", gr.girko},
                       {"gap", gr.gap},
                       {"expected", target},
                       {"max_deviation", worst},
                       {"tolerance", s.girko_tolerance},
                       {"points", gr.points},
                       {"resampled", gr.resampled},
                       {"low_confidence", gr.low_confidence},
                       {"pass", gr.gap <= s.girko_tolerance && worst <= s.girko_tolerance},
                       {"sample", 0}};
  }
  bool all = true;
  for (auto &[k, v] : checks.items()) all = all && v.at("pass").get<bool>();

  json spec_json = meta(cfg);
  spec_json["n"] = s.n;
  spec_json["samples"] = s.samples;
  spec_json["field"] = s.field == Field::Complex ? "complex" : "real";
  spec_json["spectra"] = spectra;
  json report = meta(cfg);
  report["rho"] = rho;
  report["checks"] = checks;
  report["all_pass"] = all;

  r.files.push_back(write_file(opts, "spectrum.csv", csv.str()));
  r.files.push_back(write_file(opts, "spectrum.json", dump(spec_json)));
  r.files.push_back(write_file(opts, "report.json", dump(report)));
  r.report = {{"command", "simulate"}, {"config_hash", cfg.hash}, {"checks", checks},
              {"all_pass", all}, {"files", r.files}};
  std::ostringstream t;
  t << "check,pass\n";
  for (auto &[k, v] : checks.items()) t << k << ',' << (v.at("pass").get<bool>() ? "true" : "false") << '\n';
  r.table = t.str();
  r.warnings = prof.warnings;
  return r;
}

CommandResult cmd_check(const RunConfig &cfg, const CommandOptions &opts) {
  const CovarianceOperator &op = *cfg.model;
  const CheckConfig &c = cfg.check;
  const SigmaOptions &so = cfg.sigma;
  const double rho = op.rho();
  // pinned invariant tolerances
  const double tol_dyson = 1e-8, tol_trace = 1e-10, tol_identity = 1e-7, tol_dual = 1e-5,
               tol_fnorm = 1e-6, tol_deflated = 1e-8, tol_scaling = 1e-8, tol_sigma_scaling = 1e-6,
               tol_laplacian = 1e-2;

  std::vector<double> taus;
  for (double f : c.tau_fractions) taus.push_back(f * rho);
  taus.insert(taus.end(), c.taus.begin(), c.taus.end());

  CommandResult r;
  json entries = json::array();
  std::ostringstream t;
  for (const auto &line : header(cfg)) t << "# " << line << '\n';
  t << "invariant,tau,value,tolerance,status\n";
  bool all = true;
  auto add = [&](const std::string &name, double tau, double value, double tol) {
    bool ok = std::isfinite(value) && value <= tol;
    all = all && ok;
    entries.push_back({{"invariant", name}, {"tau", tau}, {"value", value}, {"tolerance", tol},
                       {"status", ok ? "pass" : "fail"}});
    t << name << ',' << sci(tau) << ',' << sci(value) << ',' << sci(tol) << ','
      << (ok ? "pass" : "fail") << '\n';
  };
  auto reject = [&](double tau, const std::string &why) {
    entries.push_back({{"invariant", "solve"}, {"tau", tau}, {"status", "precondition_rejected"},
                       {"message", why}});
    t << "solve," << sci(tau) << ",,,precondition_rejected\n";
  };
  auto failure = [&](const std::string &name, double tau, const std::string &why) {
    all = false;
    entries.push_back({{"invariant", name}, {"tau", tau}, {"status", "fail"}, {"message", why}});
    t << name << ',' << sci(tau) << ",,,fail\n";
  };

  for (double tau : taus) {
    if (!(tau >= 0) || tau >= rho * (1 - so.solver.margin)) {
      reject(tau, "tau is not inside the bulk [0, rho(1 - margin))");
      continue;
    }
    try {
      DysonSolution sol = solve_bulk(op, tau, so.solver);
      IdentityReport id = identity_suite(op, sol);
      add("dyson_residual", tau, sol.residual_dyson, tol_dyson);
      add("trace_identity", tau, id.trace, tol_trace);
      add("identity_suite", tau, id.max(), tol_identity);
      if (tau > 0) {
        StabilityBundle b = build(sol, op, false);
        FSpectrum fs = F_spectral_radius(b);
        add("F_norm", tau, std::abs(fs.norm - 1.0), tol_fnorm);
        DeflatedSolve info;
        double stab = sigma_from_bundle(b, &info);
        add("deflated_solve", tau, info.residual, tol_deflated);
        double fd = sigma_finite_difference(op, tau, so, &sol);
        add("dual_path_sigma", tau, std::abs(stab - fd), tol_dual);
      }
      for (double lam : c.scales) {
        CovarianceOperator sop = op.scaled(lam);
        DysonSolution ss = solve_bulk(sop, lam * tau, so.solver);
        double dv = std::max(hs_norm(ss.V1 - sol.V1 / std::sqrt(lam)),
                             hs_norm(ss.V2 - sol.V2 / std::sqrt(lam)));
        add("scaling_V[" + short_num(lam) + "]", tau, dv, tol_scaling);
        if (tau > 0) {
          double s0 = sigma_at(op, tau, so, &sol).sigma;
          double s1 = sigma_at(sop, lam * tau, so, &ss).sigma;
          add("scaling_sigma[" + short_num(lam) + "]", tau, std::abs(s1 - s0 / lam), tol_sigma_scaling);
        }
      }
    } catch (const PreconditionError &e) {
      reject(tau, e.what());
    } catch (const ConvergenceError &e) {
      failure("solve", tau, e.what());
    }
  }
  if (c.laplacian) {
    try {
      LaplacianReport lr = laplacian_check(op, c.laplacian_grid, so);
      add("laplacian", 0.0, lr.max_deviation, tol_laplacian);
    } catch (const PreconditionError &e) {
      entries.push_back({{"invariant", "laplacian"}, {"status", "precondition_rejected"},
                         {"message", e.what()}});
    } catch (const ConvergenceError &e) {
      failure("laplacian", 0.0, e.what());
    }
  }

  json report = meta(cfg);
  report["rho"] = rho;
  report["entries"] = entries;
  report["all_pass"] = all;
  r.files.push_back(write_file(opts, "check.json", dump(report)));
  r.report = {{"command", "check"}, {"config_hash", cfg.hash}, {"entries", entries},
              {"all_pass", all}, {"files", r.files}};
  r.table = t.str();
  r.exit_code = all ? kExitOk : kExitCheckFailed;
  return r;
}

CommandResult cmd_brown(const RunConfig &cfg, const CommandOptions &opts) {
  CommandResult r;
  BrownResult b = brown_measure(cfg.brown.coefficients, cfg.grid, cfg.sigma);
  std::ostringstream csv;
  auto h = header(cfg);
  h.push_back("rho " + sci(b.profile.rho));
  h.push_back("normalization " + sci(b.profile.normalization));
  h.push_back("flatness_lower " + sci(b.flatness_lower));
  for (const auto &w : b.profile.warnings) h.push_back("warning " + w);
  write_profile_csv(b.profile, csv, h);
  json j = meta(cfg);
  j["profile"] = profile_to_json(b.profile);
  j["flatness_lower"] = b.flatness_lower;
  j["flatness_warning"] = b.flatness_warning;
  r.files.push_back(write_file(opts, "brown.csv", csv.str()));
  r.files.push_back(write_file(opts, "brown.json", dump(j)));
  r.table = csv.str();
  r.report = {{"command", "brown"},
              {"config_hash", cfg.hash},
              {"rho", b.profile.rho},
              {"normalization", b.profile.normalization},
              {"flatness_lower", b.flatness_lower},
              {"flatness_warning", b.flatness_warning},
              {"warnings", b.profile.warnings},
              {"files", r.files}};
  r.warnings = b.profile.warnings;
  return r;
}

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
  auto fail = [&](const std::string &kind, const std::string &msg, int code) {
    err << json{{"error", {{"kind", kind}, {"message", msg}, {"exit_code", code}}}}.dump() << '\n';
    return code;
  };

  CLI::App app{"Dyson equation solver and random matrix checks", "dyson_circ"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  std::string config_path, out_dir = ".", format = "csv";
  int threads = 0;
  std::uint64_t seed = 0;
  for (const char *name : {"density", "simulate", "check", "brown"}) {
    CLI::App *sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
    sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--format", format, "stdout format")->check(CLI::IsMember({"csv", "json"}));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp &e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion &e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError &e) {
    return fail("usage", e.what(), kExitUsage);
  }
  CLI::App *sub = app.get_subcommands().front();
  const std::string command = sub->get_name();
  if (threads <= 0) {
    if (const char *env = std::getenv("DYSON_CIRC_THREADS")) {
      char *end = nullptr;
      long v = std::strtol(env, &end, 10);
      if (end == env || *end != '\0' || v < 1 || v > 1024)
        return fail("usage", "DYSON_CIRC_THREADS must be a positive integer", kExitUsage);
      threads = int(v);
    } else {
      threads = 1;
    }
  }

  try {
    std::ifstream f(config_path);
    if (!f) return fail("usage", "cannot open config " + config_path, kExitUsage);
    json doc;
    try {
      doc = json::parse(f);
    } catch (const json::parse_error &e) {
      return fail("schema", std::string("config is not valid JSON: ") + e.what(), kExitUsage);
    }
    std::optional<std::uint64_t> override_seed;
    if (sub->get_option("--seed")->count()) override_seed = seed;
    RunConfig cfg = parse_config(doc, command, override_seed, threads);
    CommandOptions opts{out_dir, format == "json" ? OutputFormat::Json : OutputFormat::Csv};
    CommandResult r;
    if (command == "density") r = cmd_density(cfg, opts);
    else if (command == "simulate") r = cmd_simulate(cfg, opts);
    else if (command == "check") r = cmd_check(cfg, opts);
    else r = cmd_brown(cfg, opts);
    for (const auto &w : r.warnings) err << "warning: " << w << '\n';
    if (opts.format == OutputFormat::Json) out << r.report.dump(2) << '\n';
    else out << r.table;
    return r.exit_code;
  } catch (const SchemaError &e) {
    return fail("schema", e.what(), kExitUsage);
  } catch (const DimensionError &e) {
    return fail("dimension", e.what(), kExitUsage);
  } catch (const PreconditionError &e) {
    return fail("precondition", e.what(), kExitUsage);
  } catch (const std::invalid_argument &e) {
    return fail("invalid_argument", e.what(), kExitUsage);
  } catch (const IoError &e) {
    return fail("io", e.what(), kExitCheckFailed);
  } catch (const ConvergenceError &e) {
    return fail("convergence", e.what(), kExitCheckFailed);
  } catch (const std::exception &e) {
    return fail("internal", e.what(), kExitCheckFailed);
  }
}

}  // namespace dysoncirc
