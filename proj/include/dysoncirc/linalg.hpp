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

#ifndef DYSONCIRC_LINALG_HPP
#define DYSONCIRC_LINALG_HPP

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <stdexcept>
#include <string>

namespace dysoncirc {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct PreconditionError : std::domain_error {
  using std::domain_error::domain_error;
};
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline Mat identity(int n) { return Mat::Identity(n, n); }
inline Mat herm(const Mat &a) { return 0.5 * (a + a.adjoint()); }

// normalized trace <A> = tr(A)/n
inline cplx avg(const Mat &a) { return a.trace() / double(a.rows()); }

// <A,B> = tr(A*B)/n
inline cplx inner(const Mat &a, const Mat &b) {
  return a.conjugate().cwiseProduct(b).sum() / double(a.rows());
}

// sqrt(<A,A>), the normalized Hilbert-Schmidt norm
inline double hs_norm(const Mat &a) {
  return a.norm() / std::sqrt(double(a.rows()));
}

// Eigenvalues of the Hermitian part, ascending.
RVec hermitian_eigenvalues(const Mat &a);
double min_eigenvalue(const Mat &a);
double max_eigenvalue(const Mat &a);

// A^p for Hermitian positive semidefinite A. Eigenvalues are floored at
// floor * max eigenvalue before taking the power.
Mat hermitian_power(const Mat &a, double p, double floor = 1e-14);

// Inverse via LU; throws if the matrix is numerically singular.
Mat inverse(const Mat &a);

// General (non-Hermitian) eigenvalues through LAPACK zgeev.
Vec complex_eigenvalues(const Mat &a);
// Eigenvalues and unit-norm right eigenvectors (columns).
void complex_eigensystem(const Mat &a, Vec &values, Mat &vectors);

void require_square(const Mat &a, int n, const std::string &what);

struct GmresResult {
  Vec x;
  double residual;  // relative to |b|
  int iterations;
  bool converged;
};

// Restarted GMRES(restart) for a matrix-free operator, zero initial guess.
GmresResult gmres(const std::function<Vec(const Vec &)> &apply, const Vec &b, double tol,
                  int restart, int max_iterations);

}  // namespace dysoncirc

#endif
