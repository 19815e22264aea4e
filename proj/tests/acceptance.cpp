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

// Acceptance run: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>

#include "dense_oracle.hpp"
#include "dysoncirc/density.hpp"
#include "dysoncirc/dyson.hpp"
#include "dysoncirc/ensemble.hpp"
#include "dysoncirc/models.hpp"
#include "dysoncirc/stability.hpp"
#include "test_util.hpp"

using namespace dysoncirc;

namespace {

const double kPi = std::numbers::pi;

// pinned tolerances
namespace tol {
constexpr double circ_sigma = 1e-6, circ_jump = 1e-10, circ_L = 1e-8, circ_seconds = 5;
constexpr double dyson = 1e-8, trace = 1e-10, identity = 1e-7;
constexpr double dual = 1e-5;
constexpr double scale_V = 1e-8, scale_sigma = 1e-6;
constexpr double norm_all = 1e-3, norm_circ = 1e-6;
constexpr double edge_fit = 1e-3, edge_cubic = 0.10;
constexpr double laplacian = 1e-2, laplacian_order = 3.0;  // error ratio over one halving of h
constexpr double radial_ks = 0.05, max_abs2 = 1.1, resolvent_c = 10, small_c = 3, fixture_seconds = 120;
constexpr double girko_gap = 0.02, girko_target = 0.05;
constexpr double dense = 1e-12, deflated = 1e-9;
}  // namespace tol

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char *f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

int failures = 0;

void line(int k, bool ok, const std::string &detail) {
  std::printf("criterion %2d: %s  %s\n", k, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  failures += !ok;
}

void run(int k, const std::function<void()> &body) {
  try {
    body();
  } catch (const std::exception &e) {
    line(k, false, std::string("exception: ") + e.what());
  }
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// interior points used by several criteria, as fractions of rho
const std::vector<double> interior = {0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 0.9};

void circular_oracle() {
  auto t0 = std::chrono::steady_clock::now();
  CovarianceOperator op = models::circular(32);
  GridSpec g;
  for (int k = 0; k < 64; ++k) g.taus.push_back(0.95 * k / 63);
  DensityProfile p = sigma_profile(op, g);
  double ds = 0;
  for (double s : p.sigma_values) ds = std::max(ds, std::abs(s - 1 / kPi));
  double dj = std::abs(jump_height(op) - 1 / kPi);
  double dl = 0;
  for (double r : {0.0, 0.2, 0.5, 0.8, 0.95, 1.05, 1.5, 3.0})
    for (double th : {0.0, 1.0, 2.5}) {
      cplx z = std::polar(r, th);
      if (r == 0 && th != 0) continue;
      double expect = r < 1 ? (1 - r * r) / 2 : -std::log(r);
      dl = std::max(dl, std::abs(log_potential(op, z).L_value - expect));
    }
  double t = seconds_since(t0);
  bool ok = ds <= tol::circ_sigma && dj <= tol::circ_jump && dl <= tol::circ_L && t < tol::circ_seconds;
  line(1, ok, fmt("sigma dev %.2e", ds) + fmt(", jump dev %.2e", dj) + fmt(", L dev %.2e", dl) +
                  fmt(", %.2f s", t));
}

void dyson_suite() {
  double worst_res = 0, worst_trace = 0, worst_id = 0;
  int points = 0;
  for (const auto &m : models::builtin()) {
    const double rho = m.op.rho();
    DysonSolution prev;
    bool have = false;
    for (double f : {0.0, 0.05, 0.1, 0.25, 0.4, 0.55, 0.7, 0.85, 0.9, 0.95, 0.99}) {
      DysonSolution s = solve_bulk(m.op, f * rho, {}, have ? &prev : nullptr);
      worst_res = std::max(worst_res, s.residual_dyson);
      worst_trace = std::max(worst_trace, std::abs(avg(s.V1) - avg(s.V2)));
      worst_id = std::max(worst_id, identity_suite(m.op, s).max());
      prev = s;
      have = true;
      ++points;
    }
    for (double f : {0.3, 0.8})
      for (double eta : {1e-3, 0.1, 1.0}) {
        DysonSolution s = solve_at(m.op, f * rho, eta);
        worst_res = std::max(worst_res, s.residual_dyson);
        worst_id = std::max(worst_id, identity_suite(m.op, s).max());
        ++points;
      }
  }
  bool ok = worst_res <= tol::dyson && worst_trace <= tol::trace && worst_id <= tol::identity;
  line(2, ok, std::to_string(points) + " points" + fmt(", residual %.2e", worst_res) +
                  fmt(", trace %.2e", worst_trace) + fmt(", identities %.2e", worst_id));
}

void dual_path() {
  double worst = 0;
  int points = 0;
  for (const auto &m : models::builtin()) {
    const double rho = m.op.rho();
    for (double f : interior) {
      SigmaPoint p = sigma_at(m.op, f * rho);
      if (p.method != SigmaMethod::StabilityFormula)
        throw std::runtime_error(m.name + ": stability formula unavailable at an interior point");
      worst = std::max(worst, std::abs(p.sigma - sigma_finite_difference(m.op, f * rho)));
      ++points;
    }
  }
  line(3, worst <= tol::dual, std::to_string(points) + " points" + fmt(", max |diff| %.2e", worst));
}

void scaling() {
  double dv = 0, ds = 0;
  for (const auto &m : models::builtin())
    for (double lam : {0.25, 4.0}) {
      CovarianceOperator sop = m.op.scaled(lam);
      for (double f : {0.2, 0.6}) {
        const double tau = f * m.op.rho();
        DysonSolution a = solve_bulk(m.op, tau), b = solve_bulk(sop, lam * tau);
        dv = std::max(dv, (b.V1 - a.V1 / std::sqrt(lam)).cwiseAbs().maxCoeff());
        dv = std::max(dv, (b.V2 - a.V2 / std::sqrt(lam)).cwiseAbs().maxCoeff());
        ds = std::max(ds, std::abs(sigma_at(sop, lam * tau).sigma - sigma_at(m.op, tau).sigma / lam));
      }
    }
  line(4, dv <= tol::scale_V && ds <= tol::scale_sigma,
       fmt("V dev %.2e", dv) + fmt(", sigma dev %.2e", ds));
}

void normalization() {
  bool ok = true;
  std::string detail;
  GridSpec g;
  for (const auto &m : models::builtin()) {
    double e = std::abs(sigma_profile(m.op, g).normalization - 1);
    double t = m.name == "averaging" ? tol::norm_circ : tol::norm_all;
    ok = ok && e <= t;
    detail += m.name + fmt(" %.1e ", e);
  }
  line(5, ok, detail);
}

void edge() {
  double fit = 0, cubic = 0;
  for (const auto &m : models::builtin()) {
    const double rho = m.op.rho();
    EdgeFit ef = edge_linear_fit(m.op);
    fit = std::max(fit, rel(ef.intercept, jump_height(m.op)));
    DysonSolution s = solve_bulk(m.op, 0.95 * rho);
    double alpha = solve_edge_cubic(m.op, 0.95 * rho, 0).alpha;
    const PerronData &pd = m.op.perron();
    double predicted = alpha * avg(pd.S1).real();
    cubic = std::max(cubic, rel(predicted, avg(s.V1).real()));
  }
  line(6, fit <= tol::edge_fit && cubic <= tol::edge_cubic,
       fmt("edge fit rel %.2e", fit) + fmt(", cubic <V1> rel %.2e", cubic));
}

void laplacian() {
  double worst = 0;
  for (const auto &m : models::builtin()) {
    LaplacianGrid g;
    g.h = 0.005;
    worst = std::max(worst, laplacian_check(m.op, g).max_deviation);
  }
  // order: deviation at h and h/2 on a fixed stencil lattice
  LaplacianGrid coarse, fine;
  coarse.h = 0.02;
  fine.h = 0.01;
  coarse.spacing = fine.spacing = 0.3;
  coarse.tau_max_fraction = fine.tau_max_fraction = 0.5;
  CovarianceOperator p = models::profile2();
  double a = laplacian_check(p, coarse).max_deviation, b = laplacian_check(p, fine).max_deviation;
  line(7, worst <= tol::laplacian && a / b >= tol::laplacian_order,
       fmt("max rel dev %.2e at h = 0.005", worst) + fmt(", halving ratio %.2f", a / b));
}

void fixtures() {
  auto t0 = std::chrono::steady_clock::now();
  const int n = 512;
  CovarianceOperator op = models::circular(1);
  Mat X = sample({op, n, 1});
  Vec ev = spectrum(X).eigenvalues;
  std::vector<double> r;
  for (int i = 0; i < n; ++i) r.push_back(std::abs(ev(i)));
  double ks = kolmogorov_distance(r, [](double x) { return std::min(1.0, x * x); });
  double m2 = ev.cwiseAbs2().maxCoeff();
  const cplx z(0.3, 0);
  double gap = resolvent_check(X, z, 1.0, assemble_M(op, solve_at(op, std::norm(z), 1.0), z));
  DelocalizationReport d = delocalization_check(X, 1.0, 0.1, 32);
  int small = small_singular_count(X, z, 0.05);
  double t = seconds_since(t0);
  bool ok = ks <= tol::radial_ks && m2 <= tol::max_abs2 && gap <= tol::resolvent_c / n &&
            d.max_overlap <= std::pow(n, -0.25) && small <= tol::small_c * n * 0.05 &&
            t < tol::fixture_seconds;
  line(8, ok, fmt("KS %.3f", ks) + fmt(", max|l|^2 %.3f", m2) + fmt(", resolvent %.1e", gap) +
                  fmt(", overlap %.3f", d.max_overlap) + ", small " + std::to_string(small) +
                  fmt(", %.1f s", t));
}

void girko() {
  const int n = 512;
  Mat X = sample({models::circular(1), n, 1});
  const double R = 0.8;
  TestFunction f = bump(0, R);
  const double target = R * R / 4;  // circular density 1/pi on the disk
  GirkoOptions o;
  o.points = 128;
  GirkoResult g = girko_statistic(X, f, o);
  bool ok = g.gap <= tol::girko_gap && std::abs(g.direct - target) <= tol::girko_target &&
            std::abs(g.girko - target) <= tol::girko_target && !g.low_confidence;
  line(9, ok, fmt("direct %.5f", g.direct) + fmt(", girko %.5f", g.girko) + fmt(", gap %.1e", g.gap) +
                  fmt(", target %.5f", target));
}

void dense_oracle() {
  double worst = 0, defl = 0;
  std::mt19937 gen(7);
  for (const auto &m : models::builtin()) {
    if (m.op.dimension() > 8) continue;
    double dS = (materialize(m.op, false) - oracle::dense_S(m.op)).cwiseAbs().maxCoeff();
    worst = std::max(worst, dS);
    for (double f : {0.3, 0.8}) {
      StabilityBundle b = build(solve_bulk(m.op, f * m.op.rho()), m.op, false);
      const int n = b.dimension();
      auto mat = [&](auto op) { return materialize(n, op); };
      worst = std::max(worst, (mat([&](const MatrixPair &x) { return b.L(x); }) - oracle::dense_L(b)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (mat([&](const MatrixPair &x) { return b.T(x); }) - oracle::dense_T(b)).cwiseAbs().maxCoeff());
      worst = std::max(worst, (mat([&](const MatrixPair &x) { return b.F(x); }) - oracle::dense_F(b)).cwiseAbs().maxCoeff());

      Vec w = pack(b.deflation_direction());
      w /= w.norm();
      const int dim = 2 * n * n;
      Mat A = Mat::Identity(dim, dim) - oracle::dense_F(b) * oracle::dense_T(b);
      Mat Q = Mat::Identity(dim, dim) - w * w.adjoint();
      for (int k = 0; k < 3; ++k) {
        MatrixPair rhs{testutil::random_matrix(n, gen), testutil::random_matrix(n, gen)};
        Vec x = (Q * A * Q + w * w.adjoint()).lu().solve(Q * pack(rhs));
        Vec y = pack(deflated_solve(b, rhs).x);
        defl = std::max(defl, (x - y).norm() / x.norm());
      }
    }
  }
  line(10, worst <= tol::dense && defl <= tol::deflated,
       fmt("max entry dev %.2e", worst) + fmt(", deflated vs dense %.2e", defl));
}

}  // namespace

int main() {
  run(1, circular_oracle);
  run(2, dyson_suite);
  run(3, dual_path);
  run(4, scaling);
  run(5, normalization);
  run(6, edge);
  run(7, laplacian);
  run(8, fixtures);
  run(9, girko);
  run(10, dense_oracle);
  std::printf("%s: %d of 10 criteria failed\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
