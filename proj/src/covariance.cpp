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

#include "dysoncirc/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "dysoncirc/rng.hpp"

namespace dysoncirc {

struct CovarianceOperator::Cache {
  std::once_flag once;
  PerronData perron;
};

CovarianceOperator::CovarianceOperator(int n, CovarianceForm form)
    : n_(n), form_(std::move(form)), cache_(std::make_shared<Cache>()) {
  if (n < 1) throw DimensionError("covariance dimension must be positive");
  if (auto *av = std::get_if<Averaging>(&form_)) {
    if (!(av->scale > 0) || !std::isfinite(av->scale))
      throw std::invalid_argument("averaging scale must be positive");
  } else if (auto *vp = std::get_if<VarianceProfile>(&form_)) {
    if (vp->s.rows() != n || vp->s.cols() != n)
      throw DimensionError("variance profile must be n x n");
    if (!vp->s.allFinite() || vp->s.minCoeff() < 0)
      throw std::invalid_argument("variance profile entries must be nonnegative");
  } else if (auto *kr = std::get_if<Kronecker>(&form_)) {
    if (kr->a.empty()) throw std::invalid_argument("kronecker form needs at least one coefficient");
    for (const Mat &a : kr->a) require_square(a, n, "kronecker coefficient");
  } else {
    const Mat &k = std::get<FullTensor>(form_).kappa;
    require_square(k, n * n, "covariance tensor");
    double scale = std::max(k.norm(), 1e-300);
    if ((k - k.adjoint()).norm() > 1e-12 * scale)
      throw std::invalid_argument("covariance tensor is not Hermitian");
    RVec ev = hermitian_eigenvalues(k);
    if (ev(0) < -1e-10 * std::max(ev(ev.size() - 1), 0.0))
      throw std::invalid_argument("covariance tensor is not positive semidefinite");
    realigned_.resize(n * n, n * n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k2 = 0; k2 < n; ++k2)
          for (int l = 0; l < n; ++l)
            realigned_(i * n + k2, j * n + l) = k(i * n + j, k2 * n + l);
  }
}

CovarianceOperator CovarianceOperator::averaging(int n, double scale) {
  return CovarianceOperator(n, Averaging{scale});
}

CovarianceOperator CovarianceOperator::variance_profile(RMat s) {
  int n = int(s.rows());
  return CovarianceOperator(n, VarianceProfile{std::move(s)});
}

CovarianceOperator CovarianceOperator::kronecker(std::vector<Mat> a) {
  if (a.empty()) throw std::invalid_argument("kronecker form needs at least one coefficient");
  int n = int(a.front().rows());
  return CovarianceOperator(n, Kronecker{std::move(a)});
}

CovarianceOperator CovarianceOperator::full_tensor(int n, Mat kappa) {
  return CovarianceOperator(n, FullTensor{std::move(kappa)});
}

std::string CovarianceOperator::type_name() const {
  switch (form_.index()) {
    case 0: return "averaging";
    case 1: return "variance_profile";
    case 2: return "kronecker";
    default: return "full_tensor";
  }
}

Mat CovarianceOperator::apply(const Mat &a, bool adjoint) const {
  require_square(a, n_, "covariance argument");
  if (auto *av = std::get_if<Averaging>(&form_))
    return (av->scale * avg(a)) * identity(n_);
  if (auto *vp = std::get_if<VarianceProfile>(&form_)) {
    Vec d = a.diagonal();
    Vec out = adjoint ? Vec(vp->s.transpose().cast<cplx>() * d)
                      : Vec(vp->s.cast<cplx>() * d);
    return out.asDiagonal();
  }
  if (auto *kr = std::get_if<Kronecker>(&form_)) {
    Mat out = Mat::Zero(n_, n_);
    for (const Mat &c : kr->a) {
      if (adjoint)
        out.noalias() += c.adjoint() * a * c;
      else
        out.noalias() += c * a * c.adjoint();
    }
    return out;
  }
  // row-major vec of A is the column-major vec of A^T
  Mat at = a.transpose();
  Eigen::Map<const Vec> v(at.data(), n_ * n_);
  Vec w = adjoint ? Vec(realigned_.adjoint() * v) : Vec(realigned_ * v);
  return Eigen::Map<const Mat>(w.data(), n_, n_).transpose();
}

CovarianceOperator CovarianceOperator::scaled(double lambda) const {
  if (!(lambda > 0)) throw std::invalid_argument("scale factor must be positive");
  if (auto *av = std::get_if<Averaging>(&form_))
    return averaging(n_, av->scale * lambda);
  if (auto *vp = std::get_if<VarianceProfile>(&form_))
    return variance_profile(vp->s * lambda);
  if (auto *kr = std::get_if<Kronecker>(&form_)) {
    std::vector<Mat> a = kr->a;
    for (Mat &c : a) c *= std::sqrt(lambda);
    return kronecker(std::move(a));
  }
  return full_tensor(n_, std::get<FullTensor>(form_).kappa * lambda);
}

const PerronData &CovarianceOperator::perron() const {
  std::call_once(cache_->once, [this] { cache_->perron = spectral_radius(*this); });
  return cache_->perron;
}

Mat apply(const CovarianceOperator &op, const Mat &a, bool adjoint) {
  return op.apply(a, adjoint);
}

namespace {

// Collatz-Wielandt bounds for a positive definite probe Y:
// lambda_min/max of Y^{-1/2} (S Y) Y^{-1/2}.
std::pair<double, double> collatz_bounds(const CovarianceOperator &op,
                                         const Mat &x, bool adjoint) {
  Mat y = herm(x);
  RVec ev = hermitian_eigenvalues(y);
  double top = ev(ev.size() - 1);
  if (ev(0) < 1e-10 * top) y += (1e-10 * top) * identity(op.dimension());
  Mat r = hermitian_power(y, -0.5, 0.0);
  RVec q = hermitian_eigenvalues(r * op.apply(y, adjoint) * r);
  return {std::max(q(0), 0.0), q(q.size() - 1)};
}

struct PowerResult {
  Mat x;
  int iterations = 0;
  double lower = 0, upper = 0;
};

PowerResult power_iterate(const CovarianceOperator &op, bool adjoint,
                          const PerronOptions &opts) {
  int n = op.dimension();
  PowerResult res;
  Mat x = identity(n);
  for (int it = 1; it <= opts.max_iterations; ++it) {
    Mat y = herm(op.apply(x, adjoint));
    double t = avg(y).real();
    if (!(t > 0) || !std::isfinite(t)) throw ConvergenceError("covariance operator annihilates the identity");
    y /= t;
    double step = hs_norm(y - x);
    x = std::move(y);
    res.iterations = it;
    bool probe = it % 10 == 0 || step < opts.gap_tolerance * 1e-2;
    if (!probe) continue;
    auto [lo, hi] = collatz_bounds(op, x, adjoint);
    res.lower = lo;
    res.upper = hi;
    double rq = inner(x, op.apply(x, adjoint)).real() / inner(x, x).real();
    double resid = hs_norm(op.apply(x, adjoint) - rq * x) / hs_norm(x);
    if (hi - lo <= opts.gap_tolerance * hi || resid <= 1e-2 * opts.gap_tolerance * rq) {
      res.x = x;
      return res;
    }
  }
  throw ConvergenceError("power iteration did not converge in " +
                         std::to_string(opts.max_iterations) + " iterations");
}

}  // namespace

PerronData spectral_radius(const CovarianceOperator &op, const PerronOptions &opts) {
  PowerResult right = power_iterate(op, false, opts);
  PowerResult left = power_iterate(op, true, opts);
  PerronData pd;
  pd.S2 = right.x / avg(right.x).real();
  pd.S1 = left.x / avg(left.x).real();
  pd.iterations = right.iterations + left.iterations;
  pd.lower = right.lower;
  pd.upper = right.upper;
  // two-sided Rayleigh quotient, exact for an exact eigenpair
  double num = inner(pd.S1, op.apply(pd.S2)).real();
  double den = inner(pd.S1, pd.S2).real();
  double rho = num / den;
  if (!(rho > 0)) throw ConvergenceError("zero spectral radius");
  pd.rho = std::clamp(rho, pd.lower, pd.upper);
  pd.residual_right = hs_norm(op.apply(pd.S2) - pd.rho * pd.S2);
  pd.residual_left = hs_norm(op.apply(pd.S1, true) - pd.rho * pd.S1);
  double m1 = min_eigenvalue(pd.S1), m2 = min_eigenvalue(pd.S2);
  pd.degenerate = m1 < 1e-8 * max_eigenvalue(pd.S1) || m2 < 1e-8 * max_eigenvalue(pd.S2);
  return pd;
}

FlatnessEstimate flatness_bounds(const CovarianceOperator &op, int probes,
                                 std::uint64_t seed) {
  if (probes < 1) throw std::invalid_argument("flatness_bounds needs at least one probe");
  int n = op.dimension();
  CounterRng rng(seed, 0x666c6174u);
  FlatnessEstimate est;
  est.c_est = std::numeric_limits<double>::infinity();
  est.C_est = 0;
  auto visit = [&](const Mat &a) {
    double t = avg(a).real();
    for (bool adj : {false, true}) {
      RVec ev = hermitian_eigenvalues(op.apply(a, adj));
      est.c_est = std::min(est.c_est, std::max(ev(0), 0.0) / t);
      est.C_est = std::max(est.C_est, ev(ev.size() - 1) / t);
    }
    ++est.probes_used;
  };
  visit(identity(n));
  for (int k = 0; k < n; ++k) {
    Mat e = Mat::Zero(n, n);
    e(k, k) = 1;
    visit(e);
  }
  std::uint64_t idx = 0;
  for (int p = 0; p < probes; ++p) {
    Vec x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.complex_normal(std::uint32_t(p), idx++);
    visit(x * x.adjoint());
    Mat g(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal(std::uint32_t(p), idx++);
    visit(g * g.adjoint());
  }
  return est;
}

NormalizedOperator normalize(const CovarianceOperator &op) {
  double rho = op.rho();
  if (!(rho > 0)) throw std::invalid_argument("cannot normalize an operator with zero spectral radius");
  if (std::abs(rho - 1.0) <= 1e-14) return {op, 1.0};
  return {op.scaled(1.0 / rho), 1.0 / rho};
}

Mat materialize(const CovarianceOperator &op, bool adjoint) {
  int n = op.dimension();
  Mat out(n * n, n * n);
  for (int c = 0; c < n * n; ++c) {
    Mat e = Mat::Zero(n, n);
    e(c % n, c / n) = 1;
    Mat s = op.apply(e, adjoint);
    out.col(c) = Eigen::Map<const Vec>(s.data(), n * n);
  }
  return out;
}

}  // namespace dysoncirc
