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

#ifndef DYSONCIRC_COVARIANCE_HPP
#define DYSONCIRC_COVARIANCE_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "dysoncirc/linalg.hpp"

namespace dysoncirc {

// S A = scale * <A> * 1
struct Averaging {
  double scale = 1.0;
};

// (S A)_ii = sum_j s_ij A_jj, off-diagonal entries of S A vanish
struct VarianceProfile {
  RMat s;
};

// S A = sum_j a_j A a_j^*
struct Kronecker {
  std::vector<Mat> a;
};

// kappa(i*n+j, k*n+l) = E[x_ij conj(x_kl)]
struct FullTensor {
  Mat kappa;
};

using CovarianceForm = std::variant<Averaging, VarianceProfile, Kronecker, FullTensor>;

struct PerronData {
  double rho = 0;
  Mat S1, S2;  // left and right eigenmatrices, <S1> = <S2> = 1
  double residual_right = 0;  // ||S S2 - rho S2||_hs
  double residual_left = 0;   // ||S* S1 - rho S1||_hs
  double lower = 0, upper = 0;
  int iterations = 0;
  bool degenerate = false;  // an eigenmatrix is not numerically definite
};

struct PerronOptions {
  double gap_tolerance = 1e-10;
  int max_iterations = 100000;
};

class CovarianceOperator {
 public:
  CovarianceOperator(int n, CovarianceForm form);

  static CovarianceOperator averaging(int n, double scale = 1.0);
  static CovarianceOperator variance_profile(RMat s);
  static CovarianceOperator kronecker(std::vector<Mat> a);
  static CovarianceOperator full_tensor(int n, Mat kappa);

  int dimension() const { return n_; }
  const CovarianceForm &form() const { return form_; }
  std::string type_name() const;

  // S A, or S* A when adjoint is set
  Mat apply(const Mat &a, bool adjoint = false) const;

  // lambda * S in the same representation
  CovarianceOperator scaled(double lambda) const;

  // Perron data, computed once and shared between copies.
  const PerronData &perron() const;
  double rho() const { return perron().rho; }

 private:
  struct Cache;
  int n_;
  CovarianceForm form_;
  Mat realigned_;  // FullTensor only: vec(S A) = realigned_ * vec(A)
  std::shared_ptr<Cache> cache_;
};

Mat apply(const CovarianceOperator &op, const Mat &a, bool adjoint = false);

PerronData spectral_radius(const CovarianceOperator &op,
                           const PerronOptions &opts = {});

struct FlatnessEstimate {
  double c_est = 0;
  double C_est = 0;
  int probes_used = 0;
};

FlatnessEstimate flatness_bounds(const CovarianceOperator &op, int probes,
                                 std::uint64_t seed);

struct NormalizedOperator {
  CovarianceOperator op;
  double lambda;
};

NormalizedOperator normalize(const CovarianceOperator &op);

// Dense n^2 x n^2 matrix of S (or S*) acting on column-major vec(A).
Mat materialize(const CovarianceOperator &op, bool adjoint = false);

}  // namespace dysoncirc

#endif
