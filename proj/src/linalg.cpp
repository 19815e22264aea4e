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

#include "dysoncirc/linalg.hpp"

#include <lapacke.h>

#include <algorithm>
#include <vector>

namespace dysoncirc {

RVec hermitian_eigenvalues(const Mat &a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(herm(a), Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

double min_eigenvalue(const Mat &a) { return hermitian_eigenvalues(a)(0); }

double max_eigenvalue(const Mat &a) {
  RVec ev = hermitian_eigenvalues(a);
  return ev(ev.size() - 1);
}

Mat hermitian_power(const Mat &a, double p, double floor) {
  Eigen::SelfAdjointEigenSolver<Mat> es(herm(a));
  RVec ev = es.eigenvalues();
  double top = std::max(ev.maxCoeff(), 0.0);
  double lo = floor * top;
  for (int i = 0; i < ev.size(); ++i) ev(i) = std::pow(std::max(ev(i), lo), p);
  const Mat &q = es.eigenvectors();
  return q * ev.asDiagonal() * q.adjoint();
}

Mat inverse(const Mat &a) {
  Eigen::PartialPivLU<Mat> lu(a);
  Mat inv = lu.inverse();
  if (!inv.allFinite()) throw ConvergenceError("singular matrix in inverse");
  return inv;
}

namespace {
void zgeev(Mat work, Vec &values, Mat *vectors) {
  const int n = int(work.rows());
  values.resize(n);
  if (n == 0) return;
  if (!work.allFinite()) throw std::invalid_argument("eigensolver input has non-finite entries");
  Mat vr;
  if (vectors) vr.resize(n, n);
  lapack_int info = LAPACKE_zgeev(
      LAPACK_COL_MAJOR, 'N', vectors ? 'V' : 'N', n,
      reinterpret_cast<lapack_complex_double *>(work.data()), n,
      reinterpret_cast<lapack_complex_double *>(values.data()), nullptr, 1,
      vectors ? reinterpret_cast<lapack_complex_double *>(vr.data()) : nullptr, n);
  if (info != 0) throw ConvergenceError("zgeev failed with info " + std::to_string(info));
  if (vectors) *vectors = std::move(vr);
}
}  // namespace

Vec complex_eigenvalues(const Mat &a) {
  Vec v;
  zgeev(a, v, nullptr);
  return v;
}

void complex_eigensystem(const Mat &a, Vec &values, Mat &vectors) {
  zgeev(a, values, &vectors);
}

void require_square(const Mat &a, int n, const std::string &what) {
  if (a.rows() != n || a.cols() != n)
    throw DimensionError(what + ": expected " + std::to_string(n) + "x" +
                         std::to_string(n) + ", got " +
                         std::to_string(a.rows()) + "x" +
                         std::to_string(a.cols()));
}

GmresResult gmres(const std::function<Vec(const Vec &)> &apply, const Vec &b, double tol,
                  int restart, int max_iterations) {
  const Eigen::Index N = b.size();
  GmresResult res{Vec::Zero(N), 0.0, 0, false};
  double bnorm = b.norm();
  if (bnorm == 0) {
    res.converged = true;
    return res;
  }
  Vec r = b;
  while (res.iterations < max_iterations) {
    double beta = r.norm();
    res.residual = beta / bnorm;
    if (res.residual <= tol) {
      res.converged = true;
      return res;
    }
    const int m = restart;
    Mat V(N, m + 1);
    Mat H = Mat::Zero(m + 1, m);
    std::vector<double> cs(m);
    std::vector<cplx> sn(m);
    Vec g = Vec::Zero(m + 1);
    g(0) = beta;
    V.col(0) = r / beta;
    int k = 0;
    for (; k < m && res.iterations < max_iterations; ++k) {
      ++res.iterations;
      Vec w = apply(V.col(k));
      for (int pass = 0; pass < 2; ++pass)
        for (int i = 0; i <= k; ++i) {
          cplx h = V.col(i).dot(w);
          H(i, k) += h;
          w -= h * V.col(i);
        }
      double hn = w.norm();
      H(k + 1, k) = hn;
      if (hn > 0) V.col(k + 1) = w / hn;
      for (int i = 0; i < k; ++i) {
        cplx t = cs[i] * H(i, k) + sn[i] * H(i + 1, k);
        H(i + 1, k) = -std::conj(sn[i]) * H(i, k) + cs[i] * H(i + 1, k);
        H(i, k) = t;
      }
      cplx a = H(k, k), bb = H(k + 1, k);
      double t = std::hypot(std::abs(a), std::abs(bb));
      if (std::abs(a) == 0) {
        cs[k] = 0;
        sn[k] = 1;
      } else {
        cs[k] = std::abs(a) / t;
        sn[k] = (a / std::abs(a)) * std::conj(bb) / t;
      }
      H(k, k) = cs[k] * a + sn[k] * bb;
      H(k + 1, k) = 0;
      g(k + 1) = -std::conj(sn[k]) * g(k);
      g(k) = cs[k] * g(k);
      if (std::abs(g(k + 1)) / bnorm <= tol || hn == 0) {
        ++k;
        break;
      }
    }
    Vec y = H.topLeftCorner(k, k).triangularView<Eigen::Upper>().solve(g.head(k));
    res.x += V.leftCols(k) * y;
    r = b - apply(res.x);
  }
  res.residual = r.norm() / bnorm;
  res.converged = res.residual <= tol;
  return res;
}


}  // namespace dysoncirc
