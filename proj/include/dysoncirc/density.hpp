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

#ifndef DYSONCIRC_DENSITY_HPP
#define DYSONCIRC_DENSITY_HPP

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "dysoncirc/covariance.hpp"
#include "dysoncirc/dyson.hpp"

namespace dysoncirc {

enum class SigmaMethod { StabilityFormula, FiniteDifference, EdgeFit };
std::string to_string(SigmaMethod m);

struct SigmaOptions {
  SolverOptions solver;
  double fd_fraction = 0.05;  // below fd_fraction * rho use the finite difference
  bool force_finite_difference = false;
};

struct SigmaPoint {
  double tau = 0;
  double sigma = 0;
  SigmaMethod method = SigmaMethod::StabilityFormula;
  bool warning = false;
  std::string note;
};

// Finite-difference step for the fallback path.
double fd_step(double rho, double tau);

// (1/pi) d/dtau (tau <U>) by central (or one-sided near 0) differences.
double sigma_finite_difference(const CovarianceOperator &op, double tau,
                               const SigmaOptions &opts = {},
                               const DysonSolution *warm = nullptr);

SigmaPoint sigma_at(const CovarianceOperator &op, double tau, const SigmaOptions &opts = {},
                    const DysonSolution *warm = nullptr, DysonSolution *solution = nullptr);

struct GridSpec {
  int points = 64;
  double tau_min_fraction = 0.0;
  double tau_max_fraction = 0.99;
  std::vector<double> taus;  // explicit grid, overrides the uniform one
  int block = 8;             // warm-start chain length
  int threads = 1;
};

struct DensityProfile {
  double rho = 0;
  std::vector<double> tau_grid;
  std::vector<double> sigma_values;
  std::vector<SigmaMethod> methods;
  double jump = 0;
  double normalization = 0;
  std::vector<std::string> warnings;
};

DensityProfile sigma_profile(const CovarianceOperator &op, const GridSpec &grid,
                             const SigmaOptions &opts = {});

// pi * integral of sigma over [0, rho): trapezoid on the grid, linear to the
// jump value on the last segment.
double normalization_integral(const std::vector<double> &taus, const std::vector<double> &sigma,
                              double rho, double jump);

double jump_height(const CovarianceOperator &op);

struct EdgeFit {
  double intercept = 0;  // sigma extrapolated to tau = rho
  double slope = 0;      // d sigma / d(1 - tau/rho)
  double max_relative_residual = 0;
  std::vector<double> taus, sigmas;
};

EdgeFit edge_linear_fit(const CovarianceOperator &op, double lo = 0.9, double hi = 0.99,
                        int points = 10, const SigmaOptions &opts = {});

struct EdgeCubic {
  double alpha = 0;  // V_i ~ alpha S_i, in the operator's own units
  bool positive_root = true;
};

EdgeCubic solve_edge_cubic(const CovarianceOperator &op, double tau, double eta);

struct LogPotential {
  cplx zeta;
  double L_value = 0;
};

LogPotential log_potential(const CovarianceOperator &op, cplx zeta, const SolverOptions &opts = {},
                           const DysonSolution *warm = nullptr, DysonSolution *solution = nullptr);

struct LaplacianGrid {
  double h = 0.005;
  double spacing = 0.25;  // lattice spacing of stencil centers, in units of sqrt(rho)
  double tau_min_fraction = 0.0;
  double tau_max_fraction = 0.8;
};

struct LaplacianReport {
  double max_deviation = 0;
  int points = 0;
};

LaplacianReport laplacian_check(const CovarianceOperator &op, const LaplacianGrid &grid,
                                const SigmaOptions &opts = {});

struct BrownResult {
  DensityProfile profile;
  double flatness_lower = 0;
  bool flatness_warning = false;
};

BrownResult brown_measure(const std::vector<Mat> &coefficients, const GridSpec &grid,
                          const SigmaOptions &opts = {});

void write_profile_csv(const DensityProfile &p, std::ostream &out,
                       const std::vector<std::string> &header = {});
nlohmann::json profile_to_json(const DensityProfile &p);

}  // namespace dysoncirc

#endif
