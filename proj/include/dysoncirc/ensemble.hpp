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

#ifndef DYSONCIRC_ENSEMBLE_HPP
#define DYSONCIRC_ENSEMBLE_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dysoncirc/covariance.hpp"
#include "dysoncirc/density.hpp"
#include "dysoncirc/dyson.hpp"

namespace dysoncirc {

enum class Field { Complex, Real };

// Sampling at size n:
//   Averaging(scale)   iid entries, E|x_ij|^2 = scale/n
//   VarianceProfile s  K x K profile expanded in N x N blocks, n = K N,
//                      E|x_ij|^2 = s(I,J)/N
//   Kronecker a_l      X = sum_l a_l (x) G_l, G_l iid N x N with variance 1/N
//   FullTensor kappa   n must equal the operator dimension
struct EnsembleSpec {
  CovarianceOperator model;
  int n = 0;
  std::uint64_t seed = 0;
  int samples = 1;
  Field field = Field::Complex;
};

// Throws DimensionError for n incompatible with the model.
void validate(const EnsembleSpec &spec);

Mat sample(const EnsembleSpec &spec, int sample_index = 0);

struct EmpiricalSpectrum {
  Vec eigenvalues;
  std::uint64_t seed = 0;
  int sample_index = 0;
  int n = 0;
};

EmpiricalSpectrum spectrum(const Mat &X);

// H = [[0, X - z], [(X - z)^*, 0]] and its eigenvalues, ascending.
Mat hermitization(const Mat &X, cplx zeta);
RVec hermitization_eigenvalues(const Mat &X, cplx zeta);
// singular values of X - z, ascending
RVec singular_values(const Mat &X, cplx zeta);

struct TestFunction {
  std::function<double(cplx)> f;
  std::function<double(cplx)> laplacian;
  cplx center = 0;
  double radius = 1;  // f vanishes outside the disk |z - center| < radius
  double integral = 0;      // of f over the plane
  double laplacian_l1 = 0;  // of |laplacian f|
};

// (1 - |z - c|^2 / R^2)^3 on the disk, zero outside
TestFunction bump(cplx center, double radius);
// z -> n^{2 alpha} f(n^alpha (z - z0)) for a test function centered at 0
TestFunction rescale(const TestFunction &f, cplx zeta0, double n, double alpha);

struct GirkoOptions {
  int points = 256;
  std::uint64_t seed = 1;
  // eta cutoff T of the integral representation
  // log|s| = log|s - iT| - int_0^T eta/(s^2 + eta^2) d eta, evaluated in closed form
  double cutoff = 1.0;
  // deterministic polar quadrature instead of Monte-Carlo sampling
  bool quadrature = false;
  int radial_nodes = 48, angular_nodes = 64;
  bool control_variate = true;
  double singular_eps = 0.5;  // resample z when s_min(X - z) <= exp(-n^eps)
  int threads = 1;
};

struct GirkoResult {
  double direct = 0;
  double girko = 0;
  double gap = 0;
  double standard_error = 0;
  int points = 0;
  int resampled = 0;
  bool low_confidence = false;
};

GirkoResult girko_statistic(const Mat &X, const TestFunction &f, const GirkoOptions &opts = {});
double linear_statistic(const Vec &eigenvalues, const TestFunction &f);

struct OutlierReport {
  bool pass = false;
  double max_abs2 = 0;
  double max_excess = 0;  // max |lambda|^2 - (rho + tau_star)
};

OutlierReport outlier_check(const Vec &eigenvalues, double rho, double tau_star);

// |<G - M>| with G = (H_z - i eta)^-1 and M the deterministic block solution.
double resolvent_check(const Mat &X, cplx zeta, double eta, const BlockSolution &M);

// number of eigenvalues of H_z in [-eta, eta]
int small_singular_count(const Mat &X, cplx zeta, double eta);

struct DelocalizationReport {
  double max_overlap = 0;
  double threshold = 0;  // n^{-1/2 + eps}
  bool pass = false;
  int eigenvectors = 0;
  int probes = 0;
};

// Probes: the first min(probes, n) coordinate vectors plus `probes` seeded
// Gaussian vectors. Eigenvectors with |lambda|^2 <= rho - tau_star are tested.
DelocalizationReport delocalization_check(const Mat &X, double rho, double tau_star, int probes,
                                          std::uint64_t seed = 1, double eps = 0.25);

struct SingularGuard {
  bool pass = false;
  double s_min = 0;
  double threshold = 0;  // exp(-n^eps)
};

SingularGuard smallest_singular_guard(const Mat &X, cplx zeta, double eps);

struct LocalWindow {
  double statistic = 0;  // (1/n) sum f_{z0,alpha}(lambda)
  double expected = 0;   // integral of f_{z0,alpha} sigma
  double gap = 0;
  double scale = 0;  // n^{-1 + 2 alpha} ||Laplacian f||_1
};

LocalWindow local_window_statistic(const Vec &eigenvalues, const DensityProfile &profile,
                                   cplx zeta0, double alpha, const TestFunction &f,
                                   double tau_star = 0.0);

// sigma(|z|^2) interpolated linearly in tau, zero outside [0, rho)
double profile_density(const DensityProfile &p, double tau);

// sup |F_emp - F| over the sample
double kolmogorov_distance(std::vector<double> samples, const std::function<double(double)> &cdf);
// P(D_n > d) for the one-sample Kolmogorov-Smirnov statistic
double kolmogorov_pvalue(double d, int n);

struct UniformityTest {
  double statistic = 0;
  double p_value = 0;
};

UniformityTest angle_uniformity(const Vec &eigenvalues);

}  // namespace dysoncirc

#endif
