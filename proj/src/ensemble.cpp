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

#include "dysoncirc/ensemble.hpp"

#include <lapacke.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "dysoncirc/rng.hpp"

namespace dysoncirc {

namespace {

constexpr double kPi = std::numbers::pi;

// Streams: coefficient l of a Kronecker model uses stream l; the probe vectors
// of the delocalization check and the Girko sample points use their own.
constexpr std::uint32_t kProbeStream = 0x70726f62;
constexpr std::uint32_t kGirkoStream = 0x6769726b;

cplx draw(const CounterRng &rng, int sample, std::uint64_t index, Field field) {
  if (field == Field::Complex) return rng.complex_normal(std::uint32_t(sample), index);
  return rng.normal2(std::uint32_t(sample), index)[0];
}

int block_size(const EnsembleSpec &spec) {
  const int K = spec.model.dimension();
  if (std::holds_alternative<Averaging>(spec.model.form())) return spec.n;
  if (std::holds_alternative<FullTensor>(spec.model.form())) return 1;
  return spec.n / K;
}

template <class F>
void parallel_for(int count, int threads, F &&body) {
  threads = std::max(1, std::min(threads, count));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < count;) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto &th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

void validate(const EnsembleSpec &spec) {
  if (spec.n < 1) throw DimensionError("invalid dimension: n must be positive");
  if (spec.samples < 1) throw DimensionError("samples must be positive");
  const int K = spec.model.dimension();
  const auto &form = spec.model.form();
  if (std::holds_alternative<FullTensor>(form)) {
    if (spec.n != K)
      throw DimensionError("full tensor model samples only at its own dimension " +
                           std::to_string(K));
  } else if (!std::holds_alternative<Averaging>(form) && spec.n % K != 0) {
    throw DimensionError("n = " + std::to_string(spec.n) + " is not a multiple of the model size " +
                         std::to_string(K));
  }
  if (spec.field == Field::Real) {
    if (auto *kr = std::get_if<Kronecker>(&form))
      for (const Mat &a : kr->a)
        if (a.imag().norm() > 0)
          throw std::invalid_argument("real field needs real Kronecker coefficients");
    if (auto *ft = std::get_if<FullTensor>(&form))
      if (ft->kappa.imag().norm() > 0)
        throw std::invalid_argument("real field needs a real covariance tensor");
  }
}

Mat sample(const EnsembleSpec &spec, int sample_index) {
  validate(spec);
  const int n = spec.n;
  const CounterRng rng(spec.seed);
  const auto &form = spec.model.form();
  Mat X(n, n);

  if (auto *av = std::get_if<Averaging>(&form)) {
    const double sd = std::sqrt(av->scale / n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        X(i, j) = sd * draw(rng, sample_index, std::uint64_t(i) * n + j, spec.field);
  } else if (auto *vp = std::get_if<VarianceProfile>(&form)) {
    const int N = block_size(spec);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        X(i, j) = std::sqrt(vp->s(i / N, j / N) / N) *
                  draw(rng, sample_index, std::uint64_t(i) * n + j, spec.field);
  } else if (auto *kr = std::get_if<Kronecker>(&form)) {
    const int K = spec.model.dimension(), N = block_size(spec);
    X.setZero();
    const double sd = 1.0 / std::sqrt(double(N));
    for (std::size_t l = 0; l < kr->a.size(); ++l) {
      const CounterRng sub = rng.substream(std::uint32_t(l));
      Mat G(N, N);
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          G(i, j) = sd * draw(sub, sample_index, std::uint64_t(i) * N + j, spec.field);
      for (int a = 0; a < K; ++a)
        for (int b = 0; b < K; ++b)
          if (kr->a[l](a, b) != cplx(0)) X.block(a * N, b * N, N, N) += kr->a[l](a, b) * G;
    }
  } else {
    // vec(X) row-major with covariance kappa = Q D Q*, so vec(X) = Q D^{1/2} g
    const Mat &kappa = std::get<FullTensor>(form).kappa;
    Eigen::SelfAdjointEigenSolver<Mat> es(herm(kappa));
    if (es.info() != Eigen::Success) throw ConvergenceError("covariance factorization failure");
    RVec d = es.eigenvalues();
    const double top = std::max(d.maxCoeff(), 0.0);
    if (d.minCoeff() < -1e-10 * std::max(top, 1e-300))
      throw ConvergenceError("covariance factorization failure: tensor is not positive semidefinite");
    Mat Q = es.eigenvectors();
    if (spec.field == Field::Real) {
      // a real symmetric kappa has a real orthonormal eigenbasis
      Eigen::SelfAdjointEigenSolver<RMat> rs(kappa.real());
      d = rs.eigenvalues();
      Q = rs.eigenvectors().cast<cplx>();
    }
    Vec g(n * n);
    for (int k = 0; k < n * n; ++k)
      g(k) = std::sqrt(std::max(d(k), 0.0)) * draw(rng, sample_index, std::uint64_t(k), spec.field);
    Vec x = Q * g;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) X(i, j) = x(i * n + j);
  }
  return X;
}

EmpiricalSpectrum spectrum(const Mat &X) {
  if (!X.allFinite()) throw std::invalid_argument("spectrum input has non-finite entries");
  EmpiricalSpectrum s;
  s.eigenvalues = complex_eigenvalues(X);
  s.n = int(X.rows());
  return s;
}

Mat hermitization(const Mat &X, cplx zeta) {
  const int n = int(X.rows());
  Mat H = Mat::Zero(2 * n, 2 * n);
  Mat Y = X - zeta * identity(n);
  H.topRightCorner(n, n) = Y;
  H.bottomLeftCorner(n, n) = Y.adjoint();
  return H;
}

RVec hermitization_eigenvalues(const Mat &X, cplx zeta) {
  Mat H = hermitization(X, zeta);
  const int m = int(H.rows());
  RVec w(m);
  lapack_int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'U', m,
                                   reinterpret_cast<lapack_complex_double *>(H.data()), m,
                                   w.data());
  if (info != 0) throw ConvergenceError("zheevd failed with info " + std::to_string(info));
  return w;
}

RVec singular_values(const Mat &X, cplx zeta) {
  const int n = int(X.rows());
  Mat Y = X - zeta * identity(n);
  RVec s(n);
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'N', n, n,
                                   reinterpret_cast<lapack_complex_double *>(Y.data()), n,
                                   s.data(), nullptr, 1, nullptr, 1);
  if (info != 0) throw ConvergenceError("zgesdd failed with info " + std::to_string(info));
  std::reverse(s.data(), s.data() + n);
  return s;
}

TestFunction bump(cplx center, double R) {
  if (!(R > 0)) throw std::invalid_argument("bump radius must be positive");
  TestFunction t;
  t.center = center;
  t.radius = R;
  t.f = [center, R](cplx z) {
    double u = std::norm(z - center) / (R * R);
    return u < 1 ? std::pow(1 - u, 3) : 0.0;
  };
  t.laplacian = [center, R](cplx z) {
    double u = std::norm(z - center) / (R * R);
    return u < 1 ? 12.0 / (R * R) * (1 - u) * (3 * u - 1) : 0.0;
  };
  t.integral = kPi * R * R / 4;
  t.laplacian_l1 = 32 * kPi / 9;
  return t;
}

TestFunction rescale(const TestFunction &f, cplx zeta0, double n, double alpha) {
  const double s = std::pow(n, alpha);
  TestFunction t;
  auto inner = f.f;
  auto lap = f.laplacian;
  cplx c0 = f.center;
  t.f = [=](cplx z) { return s * s * inner(c0 + s * (z - zeta0)); };
  t.laplacian = [=](cplx z) { return s * s * s * s * lap(c0 + s * (z - zeta0)); };
  t.center = zeta0;
  t.radius = f.radius / s;
  t.integral = f.integral;
  t.laplacian_l1 = s * s * f.laplacian_l1;
  return t;
}

double linear_statistic(const Vec &eigenvalues, const TestFunction &f) {
  double s = 0;
  for (int i = 0; i < eigenvalues.size(); ++i) s += f.f(eigenvalues(i));
  return eigenvalues.size() ? s / eigenvalues.size() : 0.0;
}

GirkoResult girko_statistic(const Mat &X, const TestFunction &f, const GirkoOptions &opts) {
  const int n = int(X.rows());
  if (n == 0) throw DimensionError("empty matrix");
  if (!(opts.cutoff > 0)) throw std::invalid_argument("cutoff T must be positive");
  GirkoResult res;
  res.direct = linear_statistic(spectrum(X).eigenvalues, f);

  const double R = f.radius, T = opts.cutoff;
  const double floor = std::exp(-std::pow(double(n), opts.singular_eps));
  const CounterRng rng(opts.seed, kGirkoStream);

  // nodes and weights of (1/2pi) int Laplacian(f) l over the support disk
  std::vector<cplx> nodes;
  std::vector<double> weights;
  if (opts.quadrature) {
    const int nr = opts.radial_nodes, na = opts.angular_nodes;
    if (nr < 1 || na < 1) throw std::invalid_argument("quadrature needs positive node counts");
    for (int i = 0; i < nr; ++i) {
      double r = R * (i + 0.5) / nr;
      for (int j = 0; j < na; ++j) {
        double th = 2 * kPi * (j + 0.5) / na;
        nodes.push_back(f.center + std::polar(r, th));
        weights.push_back(r * (R / nr) * (2 * kPi / na) / (2 * kPi));
      }
    }
  } else {
    if (opts.points < 1) throw std::invalid_argument("girko needs at least one sample point");
    nodes.resize(opts.points);
    weights.assign(opts.points, R * R / 2 / opts.points);  // area pi R^2 over 2 pi
  }
  const int m = int(nodes.size());
  res.points = m;
  res.low_confidence = !opts.quadrature && m < 16;

  // l(z) = (1/n) sum_i log s_i(X - z), through the eta cutoff:
  // log s = (1/2) log(s^2 + T^2) - int_0^T eta / (s^2 + eta^2) d eta
  std::vector<double> ell(m);
  std::vector<int> redraws(m, 0);
  parallel_for(m, opts.threads, [&](int k) {
    for (int attempt = 0;; ++attempt) {
      cplx z = nodes[k];
      if (!opts.quadrature) {
        auto u = rng.uniform2(std::uint32_t(attempt), std::uint64_t(k));
        z = f.center + std::polar(R * std::sqrt(u[0]), 2 * kPi * u[1]);
      } else if (attempt > 0) {
        z += std::polar(1e-6 * R, 2 * kPi * attempt / 7.0);
      }
      RVec s = singular_values(X, z);
      if (s(0) <= floor && attempt < 64) {
        ++redraws[k];
        continue;
      }
      double acc = 0;
      for (int i = 0; i < n; ++i) {
        double s2 = s(i) * s(i);
        acc += 0.5 * std::log(s2 + T * T) - 0.5 * std::log1p(T * T / s2);
      }
      ell[k] = acc / n;
      nodes[k] = z;
      break;
    }
  });
  for (int r : redraws) res.resampled += r;

  // control variate h = a + b |z - c|^2 fitted to l; its contribution is (2b/pi) int f
  double a = 0, b = 0;
  if (opts.control_variate && m >= 3) {
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int k = 0; k < m; ++k) {
      double w = weights[k], x = std::norm(nodes[k] - f.center);
      sw += w, sx += w * x, sy += w * ell[k], sxx += w * x * x, sxy += w * x * ell[k];
    }
    double det = sw * sxx - sx * sx;
    if (det > 1e-300 * sw * sw) {
      b = (sw * sxy - sx * sy) / det;
      a = (sy - b * sx) / sw;
    }
  }
  std::vector<double> terms(m);
  double mean = 0;
  for (int k = 0; k < m; ++k) {
    double h = a + b * std::norm(nodes[k] - f.center);
    terms[k] = weights[k] * f.laplacian(nodes[k]) * (ell[k] - h);
    mean += terms[k];
  }
  res.girko = 2 * b / kPi * f.integral + mean;
  if (!opts.quadrature && m > 1) {
    double avg_t = mean / m, var = 0;
    for (double t : terms) var += (t - avg_t) * (t - avg_t);
    res.standard_error = std::sqrt(var / (m - 1)) * std::sqrt(double(m));
  }
  res.gap = std::abs(res.girko - res.direct);
  return res;
}

OutlierReport outlier_check(const Vec &eigenvalues, double rho, double tau_star) {
  OutlierReport r;
  for (int i = 0; i < eigenvalues.size(); ++i) r.max_abs2 = std::max(r.max_abs2, std::norm(eigenvalues(i)));
  r.max_excess = r.max_abs2 - (rho + tau_star);
  r.pass = r.max_excess <= 0;
  return r;
}

double resolvent_check(const Mat &X, cplx zeta, double eta, const BlockSolution &M) {
  if (!(eta > 0)) throw std::invalid_argument("resolvent check needs eta > 0");
  RVec w = hermitization_eigenvalues(X, zeta);
  cplx g = 0;
  for (int i = 0; i < w.size(); ++i) g += 1.0 / cplx(w(i), -eta);
  g /= double(w.size());
  return std::abs(g - avg(M.M));
}

int small_singular_count(const Mat &X, cplx zeta, double eta) {
  RVec w = hermitization_eigenvalues(X, zeta);
  int c = 0;
  for (int i = 0; i < w.size(); ++i) c += std::abs(w(i)) <= eta;
  return c;
}

DelocalizationReport delocalization_check(const Mat &X, double rho, double tau_star, int probes,
                                          std::uint64_t seed, double eps) {
  if (probes <= 0) throw std::invalid_argument("no probes");
  const int n = int(X.rows());
  DelocalizationReport rep;
  rep.threshold = std::pow(double(n), -0.5 + eps);
  Vec lambda;
  Mat U;
  complex_eigensystem(X, lambda, U);

  const int coords = std::min(probes, n);
  const CounterRng rng(seed, kProbeStream);
  Mat P(n, probes);
  for (int p = 0; p < probes; ++p) {
    for (int i = 0; i < n; ++i) P(i, p) = rng.complex_normal(std::uint32_t(p), std::uint64_t(i));
    P.col(p).normalize();
  }
  rep.probes = coords + probes;
  for (int k = 0; k < n; ++k) {
    if (std::norm(lambda(k)) > rho - tau_star) continue;
    ++rep.eigenvectors;
    Vec u = U.col(k) / U.col(k).norm();
    for (int i = 0; i < coords; ++i) rep.max_overlap = std::max(rep.max_overlap, std::abs(u(i)));
    rep.max_overlap = std::max(rep.max_overlap, (P.adjoint() * u).cwiseAbs().maxCoeff());
  }
  rep.pass = rep.max_overlap <= rep.threshold;
  return rep;
}

SingularGuard smallest_singular_guard(const Mat &X, cplx zeta, double eps) {
  SingularGuard g;
  g.s_min = singular_values(X, zeta)(0);
  g.threshold = std::exp(-std::pow(double(X.rows()), eps));
  g.pass = g.s_min > g.threshold;
  return g;
}

double profile_density(const DensityProfile &p, double tau) {
  const auto &t = p.tau_grid;
  const auto &s = p.sigma_values;
  if (t.empty() || tau < 0 || tau >= p.rho) return 0.0;
  if (tau <= t.front()) return s.front();
  if (tau >= t.back()) {
    // linear to the jump value at rho, as in the normalization quadrature
    double w = (tau - t.back()) / (p.rho - t.back());
    return (1 - w) * s.back() + w * p.jump;
  }
  auto it = std::upper_bound(t.begin(), t.end(), tau);
  std::size_t j = std::size_t(it - t.begin());
  double w = (tau - t[j - 1]) / (t[j] - t[j - 1]);
  return (1 - w) * s[j - 1] + w * s[j];
}

LocalWindow local_window_statistic(const Vec &eigenvalues, const DensityProfile &profile,
                                   cplx zeta0, double alpha, const TestFunction &f,
                                   double tau_star) {
  if (alpha < 0 || alpha >= 0.5) throw std::invalid_argument("alpha must lie in [0, 1/2)");
  const double n = double(eigenvalues.size());
  if (n == 0) throw DimensionError("empty spectrum");
  TestFunction g = rescale(f, zeta0, n, alpha);
  double reach = std::abs(g.center) + g.radius;
  if (reach * reach > profile.rho - tau_star) throw PreconditionError("window exits the bulk");

  LocalWindow w;
  w.statistic = linear_statistic(eigenvalues, g);
  // polar midpoint quadrature around the window center
  const int nr = 200, na = 256;
  double acc = 0;
  for (int i = 0; i < nr; ++i) {
    double r = g.radius * (i + 0.5) / nr;
    for (int j = 0; j < na; ++j) {
      cplx z = g.center + std::polar(r, 2 * kPi * (j + 0.5) / na);
      acc += g.f(z) * profile_density(profile, std::norm(z)) * r;
    }
  }
  w.expected = acc * (g.radius / nr) * (2 * kPi / na);
  w.gap = std::abs(w.statistic - w.expected);
  w.scale = std::pow(n, -1 + 2 * alpha) * f.laplacian_l1;
  return w;
}

double kolmogorov_distance(std::vector<double> x, const std::function<double(double)> &cdf) {
  if (x.empty()) throw std::invalid_argument("empty sample");
  std::sort(x.begin(), x.end());
  const double m = double(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double F = cdf(x[i]);
    d = std::max({d, (i + 1) / m - F, F - i / m});
  }
  return d;
}

double kolmogorov_pvalue(double d, int n) {
  const double sn = std::sqrt(double(n));
  const double lam = (sn + 0.12 + 0.11 / sn) * d;
  if (lam < 0.2) return 1.0;
  double q = 0;
  for (int k = 1; k <= 100; ++k) {
    double term = std::exp(-2.0 * k * k * lam * lam);
    q += (k % 2 ? 2 : -2) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

UniformityTest angle_uniformity(const Vec &eigenvalues) {
  std::vector<double> th(eigenvalues.size());
  for (int i = 0; i < eigenvalues.size(); ++i) th[i] = std::arg(eigenvalues(i));
  UniformityTest u;
  u.statistic = kolmogorov_distance(th, [](double t) { return (t + kPi) / (2 * kPi); });
  u.p_value = kolmogorov_pvalue(u.statistic, int(th.size()));
  return u;
}

}  // namespace dysoncirc
