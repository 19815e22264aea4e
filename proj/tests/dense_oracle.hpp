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

#ifndef DYSONCIRC_DENSE_ORACLE_HPP
#define DYSONCIRC_DENSE_ORACLE_HPP

// Dense matrices of the super-operators written down from their formulas with
// Kronecker products (column-major vec: vec(A X B) = (B^T (x) A) vec X).
// They never call the matrix-free code paths.

#include "dysoncirc/covariance.hpp"
#include "dysoncirc/stability.hpp"

namespace oracle {

using dysoncirc::cplx;
using dysoncirc::Mat;

inline Mat kron(const Mat &a, const Mat &b) {
  Mat out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

// X -> A X B
inline Mat sandwich(const Mat &A, const Mat &B) { return kron(B.transpose(), A); }

inline Mat dense_S(const dysoncirc::CovarianceOperator &op) {
  using namespace dysoncirc;
  const int n = op.dimension(), m = n * n;
  Mat S = Mat::Zero(m, m);
  const auto &form = op.form();
  if (auto *av = std::get_if<Averaging>(&form)) {
    // S X = scale <X> 1
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) S(i + i * n, j + j * n) = av->scale / n;
  } else if (auto *vp = std::get_if<VarianceProfile>(&form)) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) S(i + i * n, j + j * n) = vp->s(i, j);
  } else if (auto *kr = std::get_if<Kronecker>(&form)) {
    for (const Mat &a : kr->a) S += sandwich(a, a.adjoint());
  } else {
    // (S X)_ik = sum_jl kappa(ij, kl) X_jl
    const Mat &k = std::get<FullTensor>(form).kappa;
    for (int i = 0; i < n; ++i)
      for (int kk = 0; kk < n; ++kk)
        for (int j = 0; j < n; ++j)
          for (int l = 0; l < n; ++l) S(i + kk * n, j + l * n) = k(i * n + j, kk * n + l);
  }
  return S;
}

inline Mat blocks(const Mat &a11, const Mat &a12, const Mat &a21, const Mat &a22) {
  const auto m = a11.rows();
  Mat out(2 * m, 2 * m);
  out << a11, a12, a21, a22;
  return out;
}

inline Mat dense_T(const dysoncirc::StabilityBundle &b) {
  const double t = b.tau();
  Mat K1s = b.K1 * b.K1, K2s = b.K2 * b.K2;
  Mat L12 = b.K2 * b.P * b.K1, L21 = b.K1 * b.P.adjoint() * b.K2;
  return blocks(-sandwich(K2s, K2s), t * sandwich(L12, L21), t * sandwich(L21, L12),
                -sandwich(K1s, K1s));
}

// F built from V, K and the dense S; the roots are recomputed here by eigendecomposition.
inline Mat hpow(const Mat &a, double p) {
  Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (a + a.adjoint()));
  return es.eigenvectors() * es.eigenvalues().array().pow(p).matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

inline Mat dense_F(const dysoncirc::StabilityBundle &b) {
  const int n = b.dimension(), m = n * n;
  Mat S = dense_S(b.op());
  Mat r1 = hpow(b.V1, 0.5), r2 = hpow(b.V2, 0.5);
  Mat k1 = hpow(b.K1, -1), k2 = hpow(b.K2, -1);
  Mat F12 = sandwich(k2 * r1, r1 * k2) * S * sandwich(r2 * k1, k1 * r2);
  Mat F21 = sandwich(k1 * r2, r2 * k1) * S.adjoint() * sandwich(r1 * k2, k2 * r1);
  return blocks(Mat::Zero(m, m), F12, F21, Mat::Zero(m, m));
}

inline Mat dense_L(const dysoncirc::StabilityBundle &b) {
  const int m = b.dimension() * b.dimension();
  const double t = b.tau();
  Mat S = dense_S(b.op()), I = Mat::Identity(m, m);
  const Mat &U = b.U;
  return blocks(I - t * sandwich(U, U.adjoint()) * S.adjoint(), sandwich(b.V1, b.V1) * S,
                sandwich(b.V2, b.V2) * S.adjoint(), I - t * sandwich(U.adjoint(), U) * S);
}

inline Mat dense_V(const dysoncirc::StabilityBundle &b) {
  const int m = b.dimension() * b.dimension();
  Mat a = b.K2 * hpow(b.V1, -0.5), c = b.K1 * hpow(b.V2, -0.5);
  return blocks(sandwich(a, a.adjoint()), Mat::Zero(m, m), Mat::Zero(m, m), sandwich(c, c.adjoint()));
}

}  // namespace oracle

#endif
