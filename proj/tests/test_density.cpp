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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "dense_oracle.hpp"
#include "dysoncirc/density.hpp"
#include "dysoncirc/models.hpp"

using namespace dysoncirc;

namespace {

const double inv_pi = 1 / std::numbers::pi;

// diag(1/2, 1) (x) c is a union of two circular laws with radii 1/2 and 1,
// each carrying half the mass
double diag_sigma(double tau) { return tau < 0.25 ? 2.5 * inv_pi : 0.5 * inv_pi; }

}  // namespace

TEST_CASE("sigma_at on the averaging model") {
  CovarianceOperator c = models::circular(3);
  for (double tau : {0.1, 0.5, 0.9}) {
    SigmaPoint p = sigma_at(c, tau);
    CHECK(p.method == SigmaMethod::StabilityFormula);
    CHECK(std::abs(p.sigma - inv_pi) < 1e-9);
  }
  SigmaPoint small = sigma_at(c, 0.01);
  CHECK(small.method == SigmaMethod::FiniteDifference);
  CHECK(std::abs(small.sigma - inv_pi) < 1e-7);
  SigmaPoint zero = sigma_at(c, 0.0);
  CHECK(std::abs(zero.sigma - inv_pi) < 1e-7);
  CHECK_THROWS_AS(sigma_at(c, 1.2), PreconditionError);
  CHECK_THROWS(sigma_at(c, -0.1));
}

TEST_CASE("sigma_at: stability formula against the finite difference") {
  for (const auto &m : models::builtin()) {
    CAPTURE(m.name);
    const double tau = m.name == "profile2" ? 0.4 : 0.4 * m.op.rho();
    SigmaPoint p = sigma_at(m.op, tau);
    REQUIRE(p.method == SigmaMethod::StabilityFormula);
    double fd = sigma_finite_difference(m.op, tau);
    CHECK(std::abs(p.sigma - fd) <= 1e-5 * std::max(1.0, p.sigma));
  }
}

TEST_CASE("sigma_at: the diagonal Kronecker model away from its inner edge") {
  CovarianceOperator kd = models::kronecker_diag();
  for (double tau : {0.1, 0.2, 0.4, 0.7, 0.9}) {
    CAPTURE(tau);
    CHECK(std::abs(sigma_at(kd, tau).sigma - diag_sigma(tau)) < 1e-6);
  }
}

TEST_CASE("sigma_profile: normalization") {
  GridSpec g;
  g.points = 64;
  DensityProfile c = sigma_profile(models::circular(2), g);
  CHECK(c.tau_grid.size() == 64);
  CHECK(std::abs(c.normalization - 1) < 1e-6);
  CHECK(std::abs(c.jump - inv_pi) < 1e-12);
  for (double s : c.sigma_values) CHECK(s > 0);

  // midpoint of a grid cell on the discontinuity at tau = 1/4
  GridSpec d;
  d.points = 64;
  d.tau_max_fraction = 63 * 0.25 / 16.5;
  DensityProfile k = sigma_profile(models::kronecker_diag(), d);
  CHECK(std::abs(k.normalization - 1) < 1e-3);

  GridSpec one;
  one.points = 1;
  CHECK_THROWS_AS(sigma_profile(models::circular(2), one), std::invalid_argument);
  GridSpec out;
  out.taus = {0.1, 1.5};
  CHECK_THROWS_AS(sigma_profile(models::circular(2), out), PreconditionError);
}

TEST_CASE("sigma_profile: threads do not change the result") {
  GridSpec g;
  g.points = 24;
  DensityProfile a = sigma_profile(models::profile2(), g);
  g.threads = 3;
  DensityProfile b = sigma_profile(models::profile2(), g);
  CHECK(a.sigma_values == b.sigma_values);
  CHECK(a.normalization == b.normalization);
}

TEST_CASE("normalization integral on a known integrand") {
  // pi * int_0^1 (1/pi) dtau with the last segment closed by the jump value
  std::vector<double> t = {0, 0.5, 0.9}, s(3, inv_pi);
  CHECK(std::abs(normalization_integral(t, s, 1.0, inv_pi) - 1) < 1e-14);
  CHECK_THROWS(normalization_integral({}, {}, 1.0, 0));
}

TEST_CASE("jump height") {
  CHECK(std::abs(jump_height(models::circular(3)) - inv_pi) < 1e-12);
  for (const auto &m : models::builtin()) {
    CAPTURE(m.name);
    CHECK(std::abs(jump_height(m.op.scaled(4.0)) - jump_height(m.op) / 4) < 1e-10 * jump_height(m.op));
  }
  CovarianceOperator p = models::profile2();
  EdgeFit fit = edge_linear_fit(p);
  CHECK(std::abs(fit.intercept - jump_height(p)) <= 1e-3 * jump_height(p));
}

TEST_CASE("edge cubic") {
  CovarianceOperator c = models::circular(2);
  CHECK(std::abs(solve_edge_cubic(c, 1 - 0.01, 0).alpha - 0.1) < 1e-12);
  CHECK(std::abs(solve_edge_cubic(c, 1.0, 1e-6).alpha - 1e-2) < 1e-12);
  EdgeCubic outside = solve_edge_cubic(c, 1.05, 0);
  CHECK_FALSE(outside.positive_root);
  CHECK_THROWS_AS(solve_edge_cubic(c, 0.5, 0), PreconditionError);

  for (const auto &name : {"profile2", "profile16"}) {
    CovarianceOperator op = normalize(name == std::string("profile2") ? models::profile2() : models::profile16()).op;
    CAPTURE(name);
    DysonSolution s = solve_bulk(op, 0.95);
    double alpha = solve_edge_cubic(op, 0.95, 0).alpha;
    const PerronData &pd = op.perron();
    CHECK(hs_norm(s.V1 - alpha * pd.S1) <= 10 * alpha * alpha * alpha);
    CHECK(hs_norm(s.V2 - alpha * pd.S2) <= 10 * alpha * alpha * alpha);
  }
}

TEST_CASE("log potential") {
  CovarianceOperator c = models::circular(3);
  CHECK(std::abs(log_potential(c, cplx(0.6, 0)).L_value - 0.32) < 1e-10);
  CHECK(std::abs(log_potential(c, cplx(0, 0.6)).L_value - 0.32) < 1e-10);
  CHECK(std::abs(log_potential(c, cplx(2, 0)).L_value + std::log(2.0)) < 1e-15);
  double in = log_potential(c, cplx(1 - 1e-4, 0)).L_value;
  double on = log_potential(c, cplx(1, 0)).L_value;
  double out = log_potential(c, cplx(1 + 1e-4, 0)).L_value;
  CHECK(on == 0);
  CHECK(std::abs(in) < 2e-4);
  CHECK(std::abs(out) < 2e-4);

  // inside formula against the symmetric determinant it collapses
  CovarianceOperator p = models::profile2();
  DysonSolution s;
  double L = log_potential(p, cplx(0.9, 0.4), {}, nullptr, &s).L_value;
  Mat A = p.apply(s.V1, true), B = p.apply(s.V2);
  Mat rb = oracle::hpow(B, 0.5);
  Mat sym = s.tau * identity(2) + rb * A * rb;
  double logdet = std::log(std::abs(sym.determinant())) / 2;
  CHECK(std::abs(L - 0.5 * (inner(s.V1, B).real() - logdet)) < 1e-12);
}

TEST_CASE("laplacian of the log potential") {
  LaplacianGrid g;
  g.h = 0.01;
  CHECK(laplacian_check(models::circular(2), g).max_deviation <= 1e-3);

  LaplacianGrid p;
  p.h = 0.005;
  LaplacianReport rp = laplacian_check(models::profile2(), p);
  CHECK(rp.points > 4);
  CHECK(rp.max_deviation <= 1e-2);

  // second order in h
  std::vector<double> dev;
  for (double h : {0.04, 0.02, 0.01}) {
    LaplacianGrid s;
    s.h = h;
    s.spacing = 0.3;
    s.tau_max_fraction = 0.5;
    dev.push_back(laplacian_check(models::profile2(), s).max_deviation);
  }
  CHECK(dev[0] / dev[1] > 3);
  CHECK(dev[1] / dev[2] > 3);
}

TEST_CASE("brown measure") {
  GridSpec g;
  g.points = 32;
  BrownResult one = brown_measure({identity(2)}, g);
  for (double s : one.profile.sigma_values) CHECK(std::abs(s - inv_pi) < 1e-6);
  CHECK(std::abs(one.profile.normalization - 1) < 1e-6);
  // S = id maps E11 to E11, so no lower bound c<A> holds
  CHECK(one.flatness_warning);

  BrownResult two = brown_measure({identity(2) / std::sqrt(2.0), identity(2) / std::sqrt(2.0)}, g);
  for (std::size_t k = 0; k < two.profile.sigma_values.size(); ++k)
    CHECK(std::abs(two.profile.sigma_values[k] - one.profile.sigma_values[k]) < 1e-8);

  GridSpec fine;
  fine.points = 64;
  BrownResult nc = brown_measure(models::kronecker_pair(), fine);
  CHECK(std::abs(nc.profile.normalization - 1) < 1e-3);
  CHECK_FALSE(nc.flatness_warning);

  // rank-one coefficient: the solution is singular and the solver reports it
  Mat d = Mat::Zero(2, 2);
  d(0, 0) = 1;
  CHECK_THROWS_AS(brown_measure({d}, g), ConvergenceError);
  CHECK_THROWS(brown_measure({}, g));
}

TEST_CASE("profile output") {
  GridSpec g;
  g.points = 4;
  DensityProfile p = sigma_profile(models::circular(2), g);
  std::ostringstream os;
  write_profile_csv(p, os, {"model: circular"});
  std::istringstream in(os.str());
  std::string l;
  std::getline(in, l);
  CHECK(l == "# model: circular");
  std::getline(in, l);
  CHECK(l == "tau,abs_zeta,sigma,method");
  int rows = 0;
  while (std::getline(in, l)) ++rows;
  CHECK(rows == 4);

  nlohmann::json j = profile_to_json(p);
  CHECK(j.at("tau").size() == 4);
  CHECK(j.at("method").size() == 4);
  CHECK(j.at("rho").get<double>() == p.rho);
}
