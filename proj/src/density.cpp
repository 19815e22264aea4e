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

#include "dysoncirc/density.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

#include "dysoncirc/stability.hpp"

namespace dysoncirc {

namespace {

constexpr double kPi = std::numbers::pi;

double g_of(const DysonSolution &s) { return s.tau * avg(s.U).real(); }

void require_inside(const CovarianceOperator &op, double tau, double margin) {
  double rho = op.rho();
  if (!(tau >= 0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be >= 0");
  if (tau >= rho * (1 - margin)) {
    std::ostringstream os;
    os << "tau = " << tau << " is within the edge margin (rho = " << rho << ")";
    throw PreconditionError(os.str());
  }
}

}  // namespace

std::string to_string(SigmaMethod m) {
  switch (m) {
    case SigmaMethod::StabilityFormula: return "stability";
    case SigmaMethod::FiniteDifference: return "finite_difference";
    case SigmaMethod::EdgeFit: return "edge_fit";
  }
  return "unknown";
}

double fd_step(double rho, double tau) { return std::max(1e-5, 1e-3 * (rho - tau)); }

double sigma_finite_difference(const CovarianceOperator &op, double tau, const SigmaOptions &opts,
                               const DysonSolution *warm) {
  require_inside(op, tau, opts.solver.margin);
  double h = fd_step(op.rho(), tau);
  // the stencil may poke a little into the margin; it stays well inside rho
  SolverOptions aux = opts.solver;
  aux.margin = 0;
  DysonSolution centre = warm ? *warm : solve_bulk(op, tau, opts.solver);
  auto g = [&](double t) {
    if (t == 0) return 0.0;
    return g_of(solve_bulk(op, t, aux, &centre));
  };
  if (tau < h) {
    // one-sided, second order: (-3g0 + 4g1 - g2)/(2h)
    double g0 = g(tau), g1 = g(tau + h), g2 = g(tau + 2 * h);
    return (-3 * g0 + 4 * g1 - g2) / (2 * h) / kPi;
  }
  return (g(tau + h) - g(tau - h)) / (2 * h) / kPi;
}

SigmaPoint sigma_at(const CovarianceOperator &op, double tau, const SigmaOptions &opts,
                    const DysonSolution *warm, DysonSolution *solution) {
  require_inside(op, tau, opts.solver.margin);
  SigmaPoint p;
  p.tau = tau;
  DysonSolution sol = solve_bulk(op, tau, opts.solver, warm);
  if (solution) *solution = sol;
  bool use_fd = opts.force_finite_difference || tau < opts.fd_fraction * op.rho();
  if (!use_fd) {
    // a nearly singular V (reducible S past an inner edge) leaves the deflated
    // operator with a second near-kernel; the formula is meaningless there
    double cond = 1;
    for (const Mat *v : {&sol.V1, &sol.V2}) {
      RVec ev = hermitian_eigenvalues(herm(*v));
      cond = std::min(cond, ev(0) / ev(ev.size() - 1));
    }
    if (!(cond > 1e-8)) {
      p.sigma = sigma_finite_difference(op, tau, opts, &sol);
      p.method = SigmaMethod::FiniteDifference;
      p.warning = true;
      p.note = "V nearly singular (eigenvalue ratio " + std::to_string(cond) + ")";
      return p;
    }
    try {
      StabilityBundle b = build(sol, op, false);
      DeflatedSolve info;
      double s = sigma_from_bundle(b, &info);
      if (info.converged && std::isfinite(s)) {
        p.sigma = s;
        p.method = SigmaMethod::StabilityFormula;
        return p;
      }
      p.note = "deflated solve did not converge (residual " + std::to_string(info.residual) + ")";
    } catch (const PreconditionError &e) {
      p.note = e.what();
    }
    p.warning = true;
  }
  p.sigma = sigma_finite_difference(op, tau, opts, &sol);
  p.method = SigmaMethod::FiniteDifference;
  return p;
}

double normalization_integral(const std::vector<double> &taus, const std::vector<double> &sigma,
                              double rho, double jump) {
  if (taus.empty() || taus.size() != sigma.size())
    throw std::invalid_argument("normalization needs matching, non-empty grids");
  // [0, tau_0] is taken flat at sigma_0
  double acc = taus.front() * sigma.front();
  for (std::size_t k = 1; k < taus.size(); ++k)
    acc += 0.5 * (taus[k] - taus[k - 1]) * (sigma[k] + sigma[k - 1]);
  acc += 0.5 * (rho - taus.back()) * (sigma.back() + jump);
  return kPi * acc;
}

double jump_height(const CovarianceOperator &op) {
  const PerronData &p = op.perron();
  Mat s12 = p.S1 * p.S2;
  double a = avg(s12).real();
  double b = avg(s12 * s12).real();
  return a * a / (kPi * p.rho * b);
}

namespace {

std::vector<double> make_grid(const GridSpec &g, double rho) {
  std::vector<double> t = g.taus;
  if (t.empty()) {
    if (g.points < 2) throw std::invalid_argument("insufficient grid: need at least 2 points");
    if (!(g.tau_min_fraction >= 0) || !(g.tau_max_fraction < 1) ||
        !(g.tau_min_fraction < g.tau_max_fraction))
      throw std::invalid_argument("grid fractions must satisfy 0 <= min < max < 1");
    for (int k = 0; k < g.points; ++k)
      t.push_back(rho * (g.tau_min_fraction +
                         (g.tau_max_fraction - g.tau_min_fraction) * k / (g.points - 1)));
  }
  if (t.size() < 2) throw std::invalid_argument("insufficient grid: need at least 2 points");
  for (std::size_t k = 0; k < t.size(); ++k) {
    if (!(t[k] >= 0) || !(t[k] < rho)) throw PreconditionError("grid must lie inside [0, rho)");
    if (k && !(t[k] > t[k - 1])) throw std::invalid_argument("grid must be strictly ascending");
  }
  return t;
}

}  // namespace

DensityProfile sigma_profile(const CovarianceOperator &op, const GridSpec &grid,
                             const SigmaOptions &opts) {
  DensityProfile prof;
  prof.rho = op.rho();
  prof.tau_grid = make_grid(grid, prof.rho);
  prof.jump = jump_height(op);
  const std::size_t m = prof.tau_grid.size();
  prof.sigma_values.assign(m, 0.0);
  prof.methods.assign(m, SigmaMethod::StabilityFormula);

  const double edge = prof.rho * (1 - opts.solver.margin);
  bool need_ref = false;
  for (double t : prof.tau_grid) need_ref |= t >= edge;
  // reference point for the linear edge model, first thing inside the margin
  double tau_ref = prof.rho * (1 - 2 * opts.solver.margin), sigma_ref = 0;
  if (need_ref) sigma_ref = sigma_at(op, tau_ref, opts).sigma;

  const int block = std::max(1, grid.block);
  const int nblocks = int((m + block - 1) / block);
  std::vector<std::vector<std::string>> notes(nblocks);
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;

  auto worker = [&] {
    for (int b; (b = next++) < nblocks;) {
      try {
        DysonSolution prev;
        bool have = false;
        for (std::size_t k = std::size_t(b) * block; k < std::min(m, std::size_t(b + 1) * block);
             ++k) {
          double t = prof.tau_grid[k];
          if (t >= edge) {
            double x = 1 - std::sqrt(t / prof.rho), xr = 1 - std::sqrt(tau_ref / prof.rho);
            prof.sigma_values[k] = prof.jump + (sigma_ref - prof.jump) * x / xr;
            prof.methods[k] = SigmaMethod::EdgeFit;
            continue;
          }
          DysonSolution sol;
          SigmaPoint p = sigma_at(op, t, opts, have ? &prev : nullptr, &sol);
          prev = std::move(sol);
          have = true;
          prof.sigma_values[k] = p.sigma;
          prof.methods[k] = p.method;
          if (p.warning) {
            std::ostringstream os;
            os << "tau = " << t << ": " << p.note;
            notes[b].push_back(os.str());
          }
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(fail_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };

  int threads = std::clamp(grid.threads, 1, nblocks);
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto &th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);
  for (auto &v : notes) prof.warnings.insert(prof.warnings.end(), v.begin(), v.end());
  prof.normalization = normalization_integral(prof.tau_grid, prof.sigma_values, prof.rho, prof.jump);
  return prof;
}

EdgeFit edge_linear_fit(const CovarianceOperator &op, double lo, double hi, int points,
                        const SigmaOptions &opts) {
  if (points < 2 || !(lo < hi)) throw std::invalid_argument("edge fit needs lo < hi, points >= 2");
  double rho = op.rho();
  EdgeFit fit;
  RMat A(points, 2);
  RVec y(points);
  DysonSolution prev;
  for (int k = 0; k < points; ++k) {
    double t = rho * (lo + (hi - lo) * k / (points - 1));
    DysonSolution sol;
    SigmaPoint p = sigma_at(op, t, opts, k ? &prev : nullptr, &sol);
    prev = std::move(sol);
    fit.taus.push_back(t);
    fit.sigmas.push_back(p.sigma);
    A(k, 0) = 1;
    A(k, 1) = 1 - std::sqrt(t / rho);
    y(k) = p.sigma;
  }
  RVec c = A.colPivHouseholderQr().solve(y);
  fit.intercept = c(0);
  fit.slope = c(1);
  RVec r = A * c - y;
  double spread = (y.array() - fit.intercept).abs().maxCoeff();
  fit.max_relative_residual = spread > 0 ? r.cwiseAbs().maxCoeff() / spread : 0.0;
  return fit;
}

EdgeCubic solve_edge_cubic(const CovarianceOperator &op, double tau, double eta) {
  const PerronData &p = op.perron();
  double rho = p.rho;
  if (!(std::abs(tau - rho) <= 0.2 * rho))
    throw PreconditionError("edge cubic needs |tau - rho| <= 0.2 rho");
  if (!(eta >= 0)) throw std::invalid_argument("eta must be >= 0");
  // normalized units: S / rho has spectral radius 1
  double tn = tau / rho, en = eta / std::sqrt(rho);
  Mat s12 = p.S1 * p.S2;
  double a = avg(s12 * s12).real(), b = (tn - 1) * avg(s12).real();
  auto f = [&](double x) { return (a * x * x + b) * x - en; };
  EdgeCubic out;
  double root;
  if (en == 0) {
    if (b >= 0) {
      out.positive_root = false;
      out.alpha = 0;  // the only real root
      return out;
    }
    root = std::sqrt(-b / a);
  } else {
    double lo = 0, hi = 1;
    while (f(hi) < 0) hi *= 2;
    for (int i = 0; i < 200 && hi - lo > 1e-17 * hi; ++i) {
      double mid = 0.5 * (lo + hi);
      (f(mid) < 0 ? lo : hi) = mid;
    }
    root = 0.5 * (lo + hi);
  }
  out.alpha = root / std::sqrt(rho);
  return out;
}

LogPotential log_potential(const CovarianceOperator &op, cplx zeta, const SolverOptions &opts,
                           const DysonSolution *warm, DysonSolution *solution) {
  LogPotential lp;
  lp.zeta = zeta;
  double tau = std::norm(zeta), rho = op.rho();
  // within 1e-6 relative of the edge the inside formula differs from -log|z|
  // only at second order in the distance; skip the ill-conditioned solve there
  if (tau >= rho * (1 - 1e-6)) {
    if (tau == 0) throw PreconditionError("log potential is singular at zeta = 0 when rho = 0");
    lp.L_value = -std::log(std::abs(zeta));
    return lp;
  }
  SolverOptions o = opts;
  o.margin = 0;
  DysonSolution sol = solve_bulk(op, tau, o, warm);
  Mat A = op.apply(sol.V1, true), B = op.apply(sol.V2);
  Mat ra = hermitian_power(herm(A), 0.5);
  RVec mu = hermitian_eigenvalues(ra * herm(B) * ra);
  double logs = 0;
  for (int i = 0; i < mu.size(); ++i) {
    if (!(tau + mu(i) > 0)) throw ConvergenceError("non-positive eigenvalue in log potential");
    logs += std::log(tau + mu(i));
  }
  lp.L_value = 0.5 * (inner(sol.V1, B).real() - logs / mu.size());
  if (solution) *solution = std::move(sol);
  return lp;
}

LaplacianReport laplacian_check(const CovarianceOperator &op, const LaplacianGrid &grid,
                                const SigmaOptions &opts) {
  double rho = op.rho(), sr = std::sqrt(rho), h = grid.h * sr, d = grid.spacing * sr;
  if (!(h > 0) || !(d > 0)) throw std::invalid_argument("laplacian grid needs positive steps");
  LaplacianReport rep;
  int K = int(std::ceil(sr / d));
  DysonSolution warm;
  bool have = false;
  for (int i = -K; i <= K; ++i)
    for (int j = -K; j <= K; ++j) {
      cplx c(i * d, j * d);
      double tc = std::norm(c);
      if (tc < grid.tau_min_fraction * rho || tc > grid.tau_max_fraction * rho) continue;
      double outer = std::abs(c) + 3 * h;
      if (outer * outer >= rho * (1 - opts.solver.margin)) continue;
      DysonSolution centre;
      SigmaPoint s = sigma_at(op, tc, opts, have ? &warm : nullptr, &centre);
      warm = centre;
      have = true;
      double L0 = log_potential(op, c, opts.solver, &centre).L_value;
      double lap = -4 * L0;
      for (cplx step : {cplx(h, 0), cplx(-h, 0), cplx(0, h), cplx(0, -h)})
        lap += log_potential(op, c + step, opts.solver, &centre).L_value;
      lap /= h * h;
      double target = 2 * kPi * s.sigma;
      rep.max_deviation = std::max(rep.max_deviation, std::abs(lap + target) / target);
      ++rep.points;
    }
  if (rep.points == 0) throw PreconditionError("laplacian grid has no interior centers");
  return rep;
}

BrownResult brown_measure(const std::vector<Mat> &coefficients, const GridSpec &grid,
                          const SigmaOptions &opts) {
  if (coefficients.empty()) throw std::invalid_argument("brown measure needs at least one coefficient");
  CovarianceOperator op = CovarianceOperator::kronecker(coefficients);
  BrownResult r;
  FlatnessEstimate fl = flatness_bounds(op, 16, 1);
  r.flatness_lower = fl.c_est;
  r.flatness_warning = !(fl.c_est > 1e-8);
  r.profile = sigma_profile(op, grid, opts);
  if (r.flatness_warning)
    r.profile.warnings.insert(r.profile.warnings.begin(),
                              "flatness lower bound is not positive; density may be unreliable");
  return r;
}

void write_profile_csv(const DensityProfile &p, std::ostream &out,
                       const std::vector<std::string> &header) {
  for (const auto &h : header) out << "# " << h << '\n';
  out << "tau,abs_zeta,sigma,method\n";
  std::ostringstream line;
  line << std::setprecision(16) << std::scientific;
  for (std::size_t k = 0; k < p.tau_grid.size(); ++k) {
    line.str("");
    line << p.tau_grid[k] << ',' << std::sqrt(p.tau_grid[k]) << ',' << p.sigma_values[k] << ','
         << to_string(p.methods[k]) << '\n';
    out << line.str();
  }
}

nlohmann::json profile_to_json(const DensityProfile &p) {
  nlohmann::json j;
  j["rho"] = p.rho;
  j["jump"] = p.jump;
  j["normalization"] = p.normalization;
  j["tau"] = p.tau_grid;
  j["sigma"] = p.sigma_values;
  std::vector<std::string> m;
  for (auto x : p.methods) m.push_back(to_string(x));
  j["method"] = m;
  j["warnings"] = p.warnings;
  return j;
}

}  // namespace dysoncirc
