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

#ifndef DYSONCIRC_DYSON_HPP
#define DYSONCIRC_DYSON_HPP

#include <json.hpp>
#include <vector>

#include "dysoncirc/covariance.hpp"

namespace dysoncirc {

struct SolverOptions {
  double tolerance = 1e-13;        // residual target at the requested point
  double ladder_tolerance = 1e-10;  // residual target on intermediate rungs
  // A rung that misses ladder_tolerance within rung_iterations is still used as
  // a warm start if its residual is below rung_accept.
  int rung_iterations = 600;
  double rung_accept = 1e-6;
  double accept = 1e-10;            // a result above this is not converged
  double damping = 0.5;
  double min_damping = 1.0 / 64;
  int max_iterations = 200000;
  double eta0 = 1.0;
  double ratio = 0.5;
  double eta_min = 1e-9;
  double margin = 1e-3;  // edge margin as a fraction of rho
  // keep <V1> = <V2> by the exact eta = 0 scaling (V1, V2) -> (tV1, V2/t)
  bool trace_rescale = true;
  int anderson_depth = 8;  // 0 disables Anderson mixing
  // switch to Newton-GMRES after this many fixed-point steps without convergence
  int newton_after = 400;
  int newton_steps = 40;
};

struct DysonSolution {
  double tau = 0;
  double eta = 0;
  Mat V1, V2, U;
  double residual_dyson = 0;
  double residual_U = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<double> continuation_path;
  std::vector<double> trace_path;  // <V1> at each rung
};

// Residual of the coupled system, max over the two equations of
// ||V_i (eta + S V_j + tau (eta + S* V_i)^{-1}) - 1||_hs written without inverses.
double dyson_residual(const CovarianceOperator &op, double tau, double eta,
                      const Mat &V1, const Mat &V2);

DysonSolution solve_at(const CovarianceOperator &op, double tau, double eta,
                       const DysonSolution *warm_start = nullptr,
                       const SolverOptions &opts = {});

// eta -> 0 inside the bulk. With a warm start the ladder is skipped and the
// eta = 0 system is solved directly from the warm iterate.
DysonSolution solve_bulk(const CovarianceOperator &op, double tau,
                         const SolverOptions &opts = {},
                         const DysonSolution *warm_start = nullptr);

// Outside the bulk: eta = 0 gives V = 0, U = 1/tau; eta > 0 runs the ladder
// from eta0 down to eta and records <V1> along it.
DysonSolution solve_outside(const CovarianceOperator &op, double tau,
                            double eta = 0, const SolverOptions &opts = {});

struct BlockSolution {
  cplx zeta;
  double eta = 0;
  Mat M;
  double mde_residual = 0;
};

BlockSolution assemble_M(const CovarianceOperator &op, const DysonSolution &sol,
                         cplx zeta);

struct IdentityReport {
  double u_quadratic = 0;   // U = V1 V2 + tau U^2
  double comparison = 0;    // V2 (eta + S*V1) = (eta + S V2) V1
  double im_first = 0;      // V1 = eta(V1^2 + tau UU*) + V1 (S V2) V1 + tau U (S*V1) U*
  double im_second = 0;     // V2 = eta(V2^2 + tau U*U) + V2 (S*V1) V2 + tau U* (S V2) U
  double trace = 0;         // |<V1> - <V2>|
  double u_identity = 0;    // U (eta + S*V1) = V1, (eta + S V2) U = V2
  double max() const;
};

IdentityReport identity_suite(const CovarianceOperator &op, const DysonSolution &sol);

nlohmann::json to_json(const Mat &m);
Mat matrix_from_json(const nlohmann::json &j);
nlohmann::json to_json(const DysonSolution &sol);

}  // namespace dysoncirc

#endif
