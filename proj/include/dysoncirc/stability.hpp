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

#ifndef DYSONCIRC_STABILITY_HPP
#define DYSONCIRC_STABILITY_HPP

#include <functional>
#include <string>

#include "dysoncirc/covariance.hpp"
#include "dysoncirc/dyson.hpp"

namespace dysoncirc {

struct MatrixPair {
  Mat first, second;
};

MatrixPair operator+(const MatrixPair &x, const MatrixPair &y);
MatrixPair operator-(const MatrixPair &x, const MatrixPair &y);
MatrixPair operator*(cplx a, const MatrixPair &x);

// (<A1,A2> + <B1,B2>)/2
cplx inner(const MatrixPair &x, const MatrixPair &y);
double norm(const MatrixPair &x);

MatrixPair pair_identity(int n, double sign = 1.0);  // E+ or E-

// column-major flattening of (first, second) into a 2n^2 vector
Vec pack(const MatrixPair &x);
MatrixPair unpack(const Vec &v, int n);

class StabilityBundle {
 public:
  StabilityBundle(const DysonSolution &sol, const CovarianceOperator &op);

  int dimension() const { return n_; }
  double tau() const { return tau_; }
  double eta() const { return eta_; }
  const CovarianceOperator &op() const { return op_; }

  Mat V1, V2, U, P, K1, K2;
  double F_norm = 0;  // filled by build()

  MatrixPair T(const MatrixPair &x) const;
  MatrixPair F(const MatrixPair &x) const;
  MatrixPair Vop(const MatrixPair &x) const;
  MatrixPair Vinv(const MatrixPair &x) const;
  MatrixPair L(const MatrixPair &x) const;
  MatrixPair L_adjoint(const MatrixPair &x) const;

  MatrixPair V_plus() const { return {K2sq_, K1sq_}; }            // Vop(V1, V2)
  MatrixPair deflation_direction() const { return {K2sq_, -K1sq_}; }  // Vop(V1, -V2)

 private:
  int n_;
  double tau_, eta_;
  CovarianceOperator op_;
  Mat sqrtV1_, sqrtV2_, isqrtV1_, isqrtV2_, K1sq_, K2sq_, iK1_, iK2_;
};

// Throws PreconditionError when V1 or V2 is not numerically definite.
StabilityBundle build(const DysonSolution &sol, const CovarianceOperator &op,
                      bool with_F_norm = true);

MatrixPair apply_L(const StabilityBundle &b, const MatrixPair &x);

struct FSpectrum {
  double norm = 0;
  MatrixPair F_plus;  // Perron eigenvector, components of equal hs norm
  int iterations = 0;
};

FSpectrum F_spectral_radius(const StabilityBundle &b);

// 1 - ||F|| evaluated from the Perron eigenvector alone
double F_norm_defect(const StabilityBundle &b, const MatrixPair &F_plus);

enum class SolveMethod { Krylov, Dense };

struct DeflatedSolve {
  MatrixPair x;
  double residual = 0;  // ||(1 - FT)x - Q rhs|| / ||Q rhs||
  int iterations = 0;
  bool converged = false;
  bool projected_rhs = false;  // rhs had a component along the deflation direction
};

DeflatedSolve deflated_solve(const StabilityBundle &b, const MatrixPair &rhs,
                             SolveMethod method = SolveMethod::Krylov,
                             double tolerance = 1e-12);

// Dense 2n^2 x 2n^2 matrix of a pair operator on pack() coordinates.
Mat materialize(int n, const std::function<MatrixPair(const MatrixPair &)> &f);

// sigma = <Y, (1 - T F^2 T) Y> / (pi tau), Y the deflated solve against V_plus
double sigma_from_bundle(const StabilityBundle &b, DeflatedSolve *info = nullptr);

// Eigenvalues of dense T, F and L; n <= 24 only.
void write_operator_spectra_csv(const StabilityBundle &b, const std::string &path);

}  // namespace dysoncirc

#endif
