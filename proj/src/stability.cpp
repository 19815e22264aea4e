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

#include "dysoncirc/stability.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <vector>

namespace dysoncirc {

MatrixPair operator+(const MatrixPair &x, const MatrixPair &y) {
  return {x.first + y.first, x.second + y.second};
}
MatrixPair operator-(const MatrixPair &x, const MatrixPair &y) {
  return {x.first - y.first, x.second - y.second};
}
MatrixPair operator*(cplx a, const MatrixPair &x) { return {a * x.first, a * x.second}; }

cplx inner(const MatrixPair &x, const MatrixPair &y) {
  return 0.5 * (inner(x.first, y.first) + inner(x.second, y.second));
}

double norm(const MatrixPair &x) { return std::sqrt(inner(x, x).real()); }

MatrixPair pair_identity(int n, double sign) { return {identity(n), sign * identity(n)}; }

Vec pack(const MatrixPair &x) {
  const Eigen::Index m = x.first.size();
  Vec v(2 * m);
  v.head(m) = Eigen::Map<const Vec>(x.first.data(), m);
  v.tail(m) = Eigen::Map<const Vec>(x.second.data(), m);
  return v;
}

MatrixPair unpack(const Vec &v, int n) {
  const Eigen::Index m = Eigen::Index(n) * n;
  return {Eigen::Map<const Mat>(v.data(), n, n), Eigen::Map<const Mat>(v.data() + m, n, n)};
}

StabilityBundle::StabilityBundle(const DysonSolution &sol, const CovarianceOperator &op)
    : n_(op.dimension()), tau_(sol.tau), eta_(sol.eta), op_(op) {
  require_square(sol.V1, n_, "V1");
  require_square(sol.V2, n_, "V2");
  for (const Mat *v : {&sol.V1, &sol.V2}) {
    RVec ev = hermitian_eigenvalues(*v);
    if (!(ev(0) > 1e-12 * ev(ev.size() - 1)))
      throw PreconditionError("V1 or V2 is not numerically definite");
  }
  V1 = herm(sol.V1);
  V2 = herm(sol.V2);
  U = sol.U;
  sqrtV1_ = hermitian_power(V1, 0.5);
  sqrtV2_ = hermitian_power(V2, 0.5);
  isqrtV1_ = hermitian_power(V1, -0.5);
  isqrtV2_ = hermitian_power(V2, -0.5);
  P = isqrtV1_ * U * isqrtV2_;
  const Mat I = identity(n_);
  Mat g1 = I + tau_ * P.adjoint() * P;
  Mat g2 = I + tau_ * P * P.adjoint();
  K1 = hermitian_power(g1, -0.25);
  K2 = hermitian_power(g2, -0.25);
  K1sq_ = hermitian_power(g1, -0.5);
  K2sq_ = hermitian_power(g2, -0.5);
  iK1_ = hermitian_power(g1, 0.25);
  iK2_ = hermitian_power(g2, 0.25);
}

MatrixPair StabilityBundle::T(const MatrixPair &x) const {
  const Mat &A = x.first, &B = x.second;
  Mat cA = K2 * A * K2, cB = K1 * B * K1;
  return {-K2 * cA * K2 + tau_ * K2 * P * cB * P.adjoint() * K2,
          tau_ * K1 * P.adjoint() * cA * P * K1 - K1 * cB * K1};
}

MatrixPair StabilityBundle::F(const MatrixPair &x) const {
  Mat inB = sqrtV2_ * iK1_ * x.second * iK1_ * sqrtV2_;
  Mat inA = sqrtV1_ * iK2_ * x.first * iK2_ * sqrtV1_;
  return {iK2_ * sqrtV1_ * op_.apply(inB, false) * sqrtV1_ * iK2_,
          iK1_ * sqrtV2_ * op_.apply(inA, true) * sqrtV2_ * iK1_};
}

MatrixPair StabilityBundle::Vop(const MatrixPair &x) const {
  return {K2 * isqrtV1_ * x.first * isqrtV1_ * K2, K1 * isqrtV2_ * x.second * isqrtV2_ * K1};
}

MatrixPair StabilityBundle::Vinv(const MatrixPair &x) const {
  return {sqrtV1_ * iK2_ * x.first * iK2_ * sqrtV1_, sqrtV2_ * iK1_ * x.second * iK1_ * sqrtV2_};
}

MatrixPair StabilityBundle::L(const MatrixPair &x) const {
  Mat sA = op_.apply(x.first, true), sB = op_.apply(x.second, false);
  return {x.first - tau_ * U * sA * U.adjoint() + V1 * sB * V1,
          V2 * sA * V2 + x.second - tau_ * U.adjoint() * sB * U};
}

MatrixPair StabilityBundle::L_adjoint(const MatrixPair &x) const {
  const Mat &A = x.first, &B = x.second;
  return {A - tau_ * op_.apply(U.adjoint() * A * U, false) + op_.apply(V2 * B * V2, false),
          op_.apply(V1 * A * V1, true) + B - tau_ * op_.apply(U * B * U.adjoint(), true)};
}

StabilityBundle build(const DysonSolution &sol, const CovarianceOperator &op, bool with_F_norm) {
  StabilityBundle b(sol, op);
  if (with_F_norm) b.F_norm = F_spectral_radius(b).norm;
  return b;
}

MatrixPair apply_L(const StabilityBundle &b, const MatrixPair &x) {
  require_square(x.first, b.dimension(), "pair first");
  require_square(x.second, b.dimension(), "pair second");
  return b.L(x);
}

FSpectrum F_spectral_radius(const StabilityBundle &b) {
  // F^2 is block diagonal; iterate its first block F12 F21, which is
  // self-adjoint and positivity preserving.
  const int n = b.dimension();
  const Mat zero = Mat::Zero(n, n);
  auto block = [&](const Mat &a) {
    Mat down = b.F({a, zero}).second;
    return b.F({zero, down}).first;
  };
  FSpectrum out;
  Mat a = identity(n);
  for (int it = 1; it <= 100000; ++it) {
    Mat g = herm(block(a));
    double mu = inner(a, g).real() / inner(a, a).real();
    double resid = hs_norm(g - mu * a) / (std::abs(mu) * hs_norm(a));
    out.iterations = it;
    if (resid <= 1e-11 || it == 100000) {
      if (resid > 1e-11) throw ConvergenceError("power iteration on F^2 did not converge");
      double nrm = std::sqrt(mu);
      Mat f1 = a / hs_norm(a);
      Mat f2 = b.F({f1, zero}).second / nrm;
      f2 /= hs_norm(f2);
      out.norm = nrm;
      out.F_plus = {f1, f2};
      return out;
    }
    a = g / hs_norm(g);
  }
  return out;
}

double F_norm_defect(const StabilityBundle &b, const MatrixPair &F_plus) {
  Mat c1 = hermitian_power(b.K2, -1.0);
  Mat c2 = hermitian_power(b.K1, -1.0);
  cplx num = inner(F_plus.first, c1 * b.V1 * c1) + inner(F_plus.second, c2 * b.V2 * c2);
  return b.eta() * num.real() / (2.0 * inner(F_plus, b.V_plus()).real());
}

Mat materialize(int n, const std::function<MatrixPair(const MatrixPair &)> &f) {
  const int m = 2 * n * n;
  Mat out(m, m);
  for (int c = 0; c < m; ++c) {
    Vec e = Vec::Zero(m);
    e(c) = 1;
    out.col(c) = pack(f(unpack(e, n)));
  }
  return out;
}

DeflatedSolve deflated_solve(const StabilityBundle &b, const MatrixPair &rhs, SolveMethod method,
                             double tolerance) {
  const int n = b.dimension();
  require_square(rhs.first, n, "rhs first");
  require_square(rhs.second, n, "rhs second");
  Vec w = pack(b.deflation_direction());
  w /= w.norm();
  auto project = [&](const Vec &v) -> Vec { return v - w * w.dot(v); };
  auto op = [&](const Vec &v) -> Vec {
    MatrixPair x = unpack(v, n);
    return pack(x - b.F(b.T(x)));
  };
  Vec r = pack(rhs);
  DeflatedSolve out;
  double along = std::abs(w.dot(r));
  out.projected_rhs = along > 1e-8 * std::max(r.norm(), 1e-300);
  Vec qb = project(r);
  if (qb.norm() <= 1e-14 * std::max(r.norm(), 1e-300)) {
    out.x = {Mat::Zero(n, n), Mat::Zero(n, n)};
    out.converged = true;
    return out;
  }
  Vec x;
  if (method == SolveMethod::Dense) {
    Mat A = materialize(n, [&](const MatrixPair &p) { return p - b.F(b.T(p)); });
    Mat Q = Mat::Identity(A.rows(), A.cols()) - w * w.adjoint();
    Mat AQ = Q * A * Q + w * w.adjoint();
    x = Eigen::PartialPivLU<Mat>(AQ).solve(qb);
    out.iterations = 1;
  } else {
    auto restricted = [&](const Vec &v) -> Vec { return project(op(project(v))); };
    GmresResult g = gmres(restricted, qb, tolerance, 80, 4000);
    x = project(g.x);
    out.iterations = g.iterations;
  }
  out.x = unpack(x, n);
  out.residual = (op(x) - qb).norm() / qb.norm();
  out.converged = out.residual <= std::max(1e-9, 10 * tolerance);
  return out;
}

double sigma_from_bundle(const StabilityBundle &b, DeflatedSolve *info) {
  if (!(b.tau() > 0)) throw PreconditionError("the stability formula needs tau > 0");
  DeflatedSolve s = deflated_solve(b, b.V_plus());
  if (info) *info = s;
  const MatrixPair &Y = s.x;
  MatrixPair z = b.T(b.F(b.F(b.T(Y))));
  return inner(Y, Y - z).real() / (std::numbers::pi * b.tau());
}

void write_operator_spectra_csv(const StabilityBundle &b, const std::string &path) {
  const int n = b.dimension();
  if (n > 24) throw std::invalid_argument("operator spectra are only materialized for n <= 24");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path);
  out << "operator,index,re,im\n" << std::setprecision(17) << std::scientific;
  auto dump = [&](const char *name, const Vec &ev) {
    for (int i = 0; i < ev.size(); ++i)
      out << name << ',' << i << ',' << ev(i).real() << ',' << ev(i).imag() << '\n';
  };
  dump("T", hermitian_eigenvalues(materialize(n, [&](const MatrixPair &p) { return b.T(p); }))
                .cast<cplx>());
  dump("F", hermitian_eigenvalues(materialize(n, [&](const MatrixPair &p) { return b.F(p); }))
                .cast<cplx>());
  dump("L", complex_eigenvalues(materialize(n, [&](const MatrixPair &p) { return b.L(p); })));
}

}  // namespace dysoncirc
