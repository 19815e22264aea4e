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

#include "dysoncirc/dyson.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dysoncirc {

namespace {

struct Iterate {
  Mat V1, V2;
  double residual = std::numeric_limits<double>::infinity();
};

// Hermitian positive definite inverse; empty matrix on failure.
Mat hpd_inverse(const Mat &a) {
  Eigen::LLT<Mat> llt(herm(a));
  if (llt.info() != Eigen::Success) return Mat();
  return llt.solve(identity(int(a.rows())));
}

double residual_parts(double tau, const Mat &V1, const Mat &V2, const Mat &A1,
                      const Mat &B2) {
  double r1 = hs_norm(V1 * B2 * A1 + tau * V1 - A1) / std::max(hs_norm(A1), 1e-300);
  double r2 = hs_norm(B2 * A1 * V2 + tau * V2 - B2) / std::max(hs_norm(B2), 1e-300);
  return std::max(r1, r2);
}

void balance_traces(Mat &V1, Mat &V2) {
  double a1 = avg(V1).real(), a2 = avg(V2).real();
  if (!(a1 > 0) || !(a2 > 0)) return;
  double t = std::sqrt(a2 / a1);
  V1 *= t;
  V2 /= t;
}

Vec stack(const Mat &a, const Mat &b) {
  const Eigen::Index m = a.size();
  Vec v(2 * m);
  v.head(m) = Eigen::Map<const Vec>(a.data(), m);
  v.tail(m) = Eigen::Map<const Vec>(b.data(), m);
  return v;
}

void unstack(const Vec &v, int n, Mat &a, Mat &b) {
  const Eigen::Index m = Eigen::Index(n) * n;
  a = herm(Eigen::Map<const Mat>(v.data(), n, n));
  b = herm(Eigen::Map<const Mat>(v.data() + m, n, n));
}

// One application of the fixed-point map; false when an inverse fails. For
// tau > 0 a singular A1 or B2 is handled through V1 = U A1, V2 = B2 U with
// U = (tau + A1 B2)^-1, the same map written without A1^-1, B2^-1.
bool fixed_point_map(const Mat &A1, const Mat &B2, double tau, Mat &N1, Mat &N2) {
  if (tau != 0) {
    Mat iA = hpd_inverse(A1), iB = hpd_inverse(B2);
    if (iA.size() == 0 || iB.size() == 0) {
      const Eigen::Index n = A1.rows();
      Eigen::PartialPivLU<Mat> lu(tau * Mat::Identity(n, n) + A1 * B2);
      Mat U = lu.inverse();
      if (!U.allFinite()) return false;
      N1 = herm(U * A1);
      N2 = herm(B2 * U);
      return true;
    }
    N1 = hpd_inverse(B2 + tau * iA);
    N2 = hpd_inverse(A1 + tau * iB);
  } else {
    N1 = hpd_inverse(B2);
    N2 = hpd_inverse(A1);
  }
  return N1.size() != 0 && N2.size() != 0;
}

// Damped simultaneous fixed-point iteration at one (tau, eta), with Anderson
// mixing over the last opts.anderson_depth steps. Any accelerated iterate that
// leaves the positive cone, or a residual blow-up, drops the history and falls
// back to plain damping.
Iterate fixed_point(const CovarianceOperator &op, double tau, double eta, Mat V1,
                    Mat V2, double tol, const SolverOptions &opts, int &iterations,
                    bool &converged) {
  const int n = op.dimension();
  const Mat I = identity(n);
  const int depth = std::max(0, opts.anderson_depth);
  double theta = opts.damping;
  double prev = std::numeric_limits<double>::infinity();
  int calm = 0, stale = 0;
  Iterate best;
  converged = false;
  std::vector<Vec> dX, dF;
  Vec lastX, lastF;
  if (opts.trace_rescale) balance_traces(V1, V2);
  for (int k = 0; k <= opts.max_iterations; ++k) {
    Mat A1 = eta * I + op.apply(V1, true);
    Mat B2 = eta * I + op.apply(V2, false);
    double r = residual_parts(tau, V1, V2, A1, B2);
    if (!std::isfinite(r)) break;
    if (r < best.residual) {
      best = {V1, V2, r};
      stale = 0;
    } else if (++stale >= 4 * depth + 10) {
      // Anderson stagnation: forget the history
      dX.clear();
      dF.clear();
      lastX.resize(0);
      stale = 0;
    }
    if (r <= tol) {
      converged = true;
      break;
    }
    if (k == opts.max_iterations) break;
    Mat N1, N2;
    bool ok_map = fixed_point_map(A1, B2, tau, N1, N2);
    if (!ok_map || r > 1e3 * best.residual) {
      // restart from the best iterate with a smaller step
      if (best.V1.size() == 0 || (V1 - best.V1).norm() == 0) break;
      V1 = best.V1;
      V2 = best.V2;
      dX.clear();
      dF.clear();
      lastX.resize(0);
      theta = std::max(0.5 * theta, opts.min_damping);
      prev = std::numeric_limits<double>::infinity();
      continue;
    }
    if (r > prev) {
      theta = std::max(0.5 * theta, opts.min_damping);
      calm = 0;
    } else if (++calm >= 50 && theta < opts.damping) {
      theta = std::min(2 * theta, opts.damping);
      calm = 0;
    }
    prev = r;
    ++iterations;
    if (opts.trace_rescale) balance_traces(N1, N2);
    Vec x = stack(V1, V2), f = stack(N1, N2) - x;
    Vec next = x + theta * f;
    if (depth > 0) {
      if (lastX.size()) {
        dX.push_back(x - lastX);
        dF.push_back(f - lastF);
        if (int(dX.size()) > depth) {
          dX.erase(dX.begin());
          dF.erase(dF.begin());
        }
      }
      lastX = x;
      lastF = f;
      if (!dX.empty()) {
        const int m = int(dX.size());
        Mat DF(f.size(), m), DX(f.size(), m);
        for (int j = 0; j < m; ++j) {
          DF.col(j) = dF[j];
          DX.col(j) = dX[j];
        }
        Vec gamma = DF.colPivHouseholderQr().solve(f);
        Vec trial = x + theta * f - (DX + theta * DF) * gamma;
        if (trial.allFinite()) {
          Mat T1, T2;
          unstack(trial, n, T1, T2);
          Eigen::LLT<Mat> c1(T1), c2(T2);
          if (c1.info() == Eigen::Success && c2.info() == Eigen::Success) {
            next = trial;
          } else {
            dX.clear();
            dF.clear();
          }
        }
      }
    }
    unstack(next, n, V1, V2);
    if (opts.trace_rescale) balance_traces(V1, V2);
  }
  if (best.V1.size() == 0) best = {V1, V2, std::numeric_limits<double>::infinity()};
  return best;
}

// Newton's method on x = G(x), each linear system solved by GMRES. The
// system is bordered with the trace difference <dV1> - <dV2>, which pins the
// direction (V1, -V2) that becomes a null direction of the Jacobian at eta = 0.
Iterate newton(const CovarianceOperator &op, double tau, double eta, Mat V1, Mat V2,
               double tol, const SolverOptions &opts, int &iterations, bool &converged) {
  const int n = op.dimension();
  const Mat I = identity(n);
  converged = false;
  balance_traces(V1, V2);
  auto eval = [&](const Mat &X1, const Mat &X2, Mat &A1, Mat &B2) {
    A1 = eta * I + op.apply(X1, true);
    B2 = eta * I + op.apply(X2, false);
    return residual_parts(tau, X1, X2, A1, B2);
  };
  Mat A1, B2;
  double r = eval(V1, V2, A1, B2);
  Iterate best{V1, V2, std::isfinite(r) ? r : std::numeric_limits<double>::infinity()};
  for (int step = 0; step < opts.newton_steps && std::isfinite(r); ++step) {
    if (r <= tol) {
      converged = true;
      break;
    }
    Mat N1, N2;
    if (!fixed_point_map(A1, B2, tau, N1, N2)) break;
    Mat iA, iB;
    if (tau != 0) {
      iA = hpd_inverse(A1);
      iB = hpd_inverse(B2);
      if (iA.size() == 0 || iB.size() == 0) break;
    }
    Vec w = stack(V1, -V2);
    const Eigen::Index m = Eigen::Index(n) * n;
    auto jac = [&](const Vec &v) -> Vec {
      Mat d1 = Eigen::Map<const Mat>(v.data(), n, n);
      Mat d2 = Eigen::Map<const Mat>(v.data() + m, n, n);
      Mat dA = op.apply(d1, true), dB = op.apply(d2, false);
      Mat dW1 = dB, dW2 = dA;
      if (tau != 0) {
        dW1 -= tau * iA * dA * iA;
        dW2 -= tau * iB * dB * iB;
      }
      Vec out = stack(d1 + N1 * dW1 * N1, d2 + N2 * dW2 * N2);
      return out + w * (d1.trace() - d2.trace()) / double(n);
    };
    Vec rhs = stack(N1 - V1, N2 - V2) - w * (avg(V1) - avg(V2));
    GmresResult g = gmres(jac, rhs, 1e-10, 120, 2000);
    iterations += g.iterations;
    Mat D1, D2;
    unstack(g.x, n, D1, D2);
    double lambda = 1;
    bool moved = false;
    for (int ls = 0; ls < 20; ++ls, lambda *= 0.5) {
      Mat T1 = V1 + lambda * D1, T2 = V2 + lambda * D2;
      Eigen::LLT<Mat> c1(T1), c2(T2);
      if (c1.info() != Eigen::Success || c2.info() != Eigen::Success) continue;
      Mat tA, tB;
      double tr = eval(T1, T2, tA, tB);
      if (std::isfinite(tr) && tr < r) {
        V1 = T1;
        V2 = T2;
        A1 = tA;
        B2 = tB;
        r = tr;
        moved = true;
        break;
      }
    }
    ++iterations;
    if (!moved) break;
    if (r < best.residual) best = {V1, V2, r};
  }
  if (r <= tol) converged = true;
  return best;
}

// Accelerated fixed-point iteration first; Newton when that stalls; then the
// fixed-point iteration again with whatever budget is left.
Iterate iterate(const CovarianceOperator &op, double tau, double eta, const Mat &V1,
                const Mat &V2, double tol, const SolverOptions &opts, int &iterations,
                bool &converged) {
  SolverOptions first = opts;
  first.max_iterations = std::min(opts.max_iterations, opts.newton_after);
  Iterate it = fixed_point(op, tau, eta, V1, V2, tol, first, iterations, converged);
  if (converged || opts.newton_steps <= 0 || !std::isfinite(it.residual)) return it;
  Iterate nt = newton(op, tau, eta, it.V1, it.V2, tol, opts, iterations, converged);
  if (nt.residual < it.residual) it = nt;
  if (converged || opts.max_iterations <= first.max_iterations) return it;
  SolverOptions rest = opts;
  rest.max_iterations = opts.max_iterations - first.max_iterations;
  Iterate fp = fixed_point(op, tau, eta, it.V1, it.V2, tol, rest, iterations, converged);
  return fp.residual < it.residual ? fp : it;
}

void finish(const CovarianceOperator &op, DysonSolution &sol) {
  const int n = op.dimension();
  const Mat I = identity(n);
  Mat A1 = sol.eta * I + op.apply(sol.V1, true);
  Mat B2 = sol.eta * I + op.apply(sol.V2, false);
  sol.U = inverse(sol.tau * I + A1 * B2);
  sol.residual_dyson = residual_parts(sol.tau, sol.V1, sol.V2, A1, B2);
  sol.residual_U = std::max(hs_norm(sol.U * A1 - sol.V1), hs_norm(B2 * sol.U - sol.V2));
}

Mat initial_guess(const CovarianceOperator &op, double eta) {
  int n = op.dimension();
  double s = avg(op.apply(identity(n))).real();
  double v = s > 0 ? 1.0 / std::sqrt(s + eta * eta) : 1.0 / std::max(eta, 1e-300);
  return v * identity(n);
}

Mat psd_project(const Mat &a) {
  Eigen::SelfAdjointEigenSolver<Mat> es(herm(a));
  RVec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

bool definite(const Mat &a, double rel = 1e-12) {
  RVec ev = hermitian_eigenvalues(a);
  return ev(0) > rel * ev(ev.size() - 1);
}

// eta = 0 solve from a definite starting pair; keeps whichever is better
bool polish(const CovarianceOperator &op, double tau, DysonSolution &sol,
            const SolverOptions &opts) {
  // at tau = 0 the map needs both inverses; for tau > 0 a semidefinite pair
  // (a reducible operator) is fine
  if (tau == 0 && (!definite(sol.V1) || !definite(sol.V2))) return false;
  bool ok = false;
  Iterate it = iterate(op, tau, 0.0, sol.V1, sol.V2, opts.tolerance, opts,
                       sol.iterations, ok);
  if (std::isfinite(it.residual)) {
    DysonSolution trial = sol;
    trial.V1 = it.V1;
    trial.V2 = it.V2;
    trial.eta = 0;
    finish(op, trial);
    if (!(trial.residual_dyson >= sol.residual_dyson)) sol = std::move(trial);
  }
  return sol.residual_dyson <= opts.accept;
}

// Solves the rung at eta from the pair solved at from_eta (0: no previous
// rung). A failed rung is split geometrically and retried from the last good
// pair, up to a fixed depth.
bool ladder_rung(const CovarianceOperator &op, double tau, double from_eta, double eta, Mat &V1,
                 Mat &V2, const SolverOptions &opts, DysonSolution &sol, int depth,
                 double &reached) {
  SolverOptions rung = opts;
  rung.max_iterations = std::min(opts.max_iterations, opts.rung_iterations);
  bool ok = false;
  Iterate it = iterate(op, tau, eta, V1, V2, opts.ladder_tolerance, rung, sol.iterations, ok);
  ok = ok || it.residual <= opts.rung_accept;
  if (!ok && from_eta > 0 && depth < 8) {
    double mid = std::sqrt(from_eta * eta);
    Mat W1 = V1, W2 = V2;
    if (ladder_rung(op, tau, from_eta, mid, W1, W2, opts, sol, depth + 1, reached) &&
        ladder_rung(op, tau, mid, eta, W1, W2, opts, sol, depth + 1, reached)) {
      V1 = W1;
      V2 = W2;
      return true;
    }
    return false;
  }
  if (!ok) {
    reached = eta;
    return false;
  }
  V1 = it.V1;
  V2 = it.V2;
  sol.continuation_path.push_back(eta);
  sol.trace_path.push_back(avg(V1).real());
  return true;
}

void require_tau(double tau) {
  if (!(tau >= 0) || !std::isfinite(tau)) throw PreconditionError("tau must be a finite nonnegative number");
}

}  // namespace

double dyson_residual(const CovarianceOperator &op, double tau, double eta,
                      const Mat &V1, const Mat &V2) {
  const Mat I = identity(op.dimension());
  return residual_parts(tau, V1, V2, eta * I + op.apply(V1, true), eta * I + op.apply(V2, false));
}

DysonSolution solve_at(const CovarianceOperator &op, double tau, double eta,
                       const DysonSolution *warm_start, const SolverOptions &opts) {
  require_tau(tau);
  if (!(eta > 0)) throw PreconditionError("solve_at needs eta > 0");
  DysonSolution sol;
  sol.tau = tau;
  sol.eta = eta;
  Mat V1, V2;
  if (warm_start && definite(warm_start->V1, 0) && definite(warm_start->V2, 0)) {
    V1 = warm_start->V1;
    V2 = warm_start->V2;
  } else {
    V1 = V2 = initial_guess(op, eta);
  }
  bool ok = false;
  Iterate it = iterate(op, tau, eta, V1, V2, opts.tolerance, opts, sol.iterations, ok);
  sol.V1 = it.V1;
  sol.V2 = it.V2;
  sol.continuation_path = {eta};
  finish(op, sol);
  sol.trace_path = {avg(sol.V1).real()};
  sol.converged = sol.residual_dyson <= opts.accept;
  return sol;
}

DysonSolution solve_bulk(const CovarianceOperator &op, double tau,
                         const SolverOptions &opts, const DysonSolution *warm_start) {
  require_tau(tau);
  double rho = op.rho();
  if (tau >= rho * (1 - opts.margin)) {
    std::ostringstream os;
    os << "tau = " << tau << " is not below rho - margin = " << rho * (1 - opts.margin);
    throw PreconditionError(os.str());
  }
  if (warm_start && warm_start->V1.rows() == op.dimension()) {
    DysonSolution sol = *warm_start;
    sol.tau = tau;
    sol.eta = 0;
    sol.iterations = 0;
    sol.continuation_path.clear();
    sol.trace_path.clear();
    sol.residual_dyson = std::numeric_limits<double>::infinity();
    if (polish(op, tau, sol, opts)) {
      sol.converged = true;
      return sol;
    }
  }

  DysonSolution sol;
  sol.tau = tau;
  std::vector<double> etas;
  for (double e = opts.eta0; e > opts.eta_min; e *= opts.ratio) etas.push_back(e);
  etas.push_back(opts.eta_min);
  Mat V1 = initial_guess(op, etas.front()), V2 = V1;
  Mat prevV1, prevV2;
  double prevEta = 0;
  double last = 0;  // eta of the last solved rung, 0 before the first
  for (double e : etas) {
    prevV1 = V1;
    prevV2 = V2;
    double reached = 0;
    if (!ladder_rung(op, tau, last, e, V1, V2, opts, sol, 0, reached)) {
      std::ostringstream os;
      os << "continuation stalled at eta = " << reached;
      throw ConvergenceError(os.str());
    }
    if (e != opts.eta_min) prevEta = e;
    last = e;
  }
  // single Richardson step through the last two rungs
  double eb = opts.eta_min, ea = prevEta;
  double w = ea > eb ? eb / (ea - eb) : 0.0;
  sol.V1 = psd_project(V1 - w * (prevV1 - V1));
  sol.V2 = psd_project(V2 - w * (prevV2 - V2));
  // prevV* hold the iterate before the last rung, i.e. the solution at ea
  sol.eta = 0;
  finish(op, sol);
  polish(op, tau, sol, opts);
  sol.converged = sol.residual_dyson <= opts.accept;
  if (!sol.converged) {
    std::ostringstream os;
    os << "bulk solve at tau = " << tau << " ended with residual " << sol.residual_dyson;
    throw ConvergenceError(os.str());
  }
  return sol;
}

DysonSolution solve_outside(const CovarianceOperator &op, double tau, double eta,
                            const SolverOptions &opts) {
  require_tau(tau);
  double rho = op.rho();
  if (tau <= rho * (1 + opts.margin)) {
    std::ostringstream os;
    os << "tau = " << tau << " is not above rho + margin = " << rho * (1 + opts.margin);
    throw PreconditionError(os.str());
  }
  const int n = op.dimension();
  DysonSolution sol;
  sol.tau = tau;
  if (eta == 0) {
    sol.V1 = sol.V2 = Mat::Zero(n, n);
    sol.eta = 0;
    finish(op, sol);
    sol.U = identity(n) / tau;
    sol.converged = true;
    return sol;
  }
  if (!(eta > 0)) throw PreconditionError("eta must be nonnegative");
  Mat V1 = initial_guess(op, opts.eta0), V2 = V1;
  std::vector<double> etas;
  for (double e = opts.eta0; e > eta; e *= opts.ratio) etas.push_back(e);
  etas.push_back(eta);
  for (double e : etas) {
    bool ok = false;
    double tol = e == eta ? opts.tolerance : opts.ladder_tolerance;
    Iterate it = iterate(op, tau, e, V1, V2, tol, opts, sol.iterations, ok);
    V1 = it.V1;
    V2 = it.V2;
    sol.continuation_path.push_back(e);
    sol.trace_path.push_back(avg(V1).real());
  }
  sol.V1 = V1;
  sol.V2 = V2;
  sol.eta = eta;
  finish(op, sol);
  sol.converged = sol.residual_dyson <= opts.accept;
  return sol;
}

BlockSolution assemble_M(const CovarianceOperator &op, const DysonSolution &sol, cplx zeta) {
  double t2 = std::norm(zeta);
  if (std::abs(t2 - sol.tau) > 1e-12 * std::max(1.0, sol.tau))
    throw PreconditionError("|zeta|^2 does not match the solution's tau");
  const int n = op.dimension();
  const cplx I1(0, 1);
  BlockSolution b;
  b.zeta = zeta;
  b.eta = sol.eta;
  b.M.resize(2 * n, 2 * n);
  b.M.topLeftCorner(n, n) = I1 * sol.V1;
  b.M.topRightCorner(n, n) = -zeta * sol.U;
  b.M.bottomLeftCorner(n, n) = -std::conj(zeta) * sol.U.adjoint();
  b.M.bottomRightCorner(n, n) = I1 * sol.V2;
  Mat D = Mat::Zero(2 * n, 2 * n);
  D.topLeftCorner(n, n) = I1 * sol.eta * identity(n) + op.apply(b.M.bottomRightCorner(n, n), false);
  D.bottomRightCorner(n, n) = I1 * sol.eta * identity(n) + op.apply(b.M.topLeftCorner(n, n), true);
  D.topRightCorner(n, n) = zeta * identity(n);
  D.bottomLeftCorner(n, n) = std::conj(zeta) * identity(n);
  b.mde_residual = hs_norm(identity(2 * n) + D * b.M);
  return b;
}

double IdentityReport::max() const {
  return std::max({u_quadratic, comparison, im_first, im_second, trace, u_identity});
}

IdentityReport identity_suite(const CovarianceOperator &op, const DysonSolution &sol) {
  const int n = op.dimension();
  const Mat I = identity(n);
  const double tau = sol.tau, eta = sol.eta;
  const Mat &V1 = sol.V1, &V2 = sol.V2, &U = sol.U;
  Mat SV2 = op.apply(V2, false), SsV1 = op.apply(V1, true);
  Mat A1 = eta * I + SsV1, B2 = eta * I + SV2;
  IdentityReport r;
  r.u_quadratic = hs_norm(U - V1 * V2 - tau * U * U);
  r.comparison = hs_norm(V2 * A1 - B2 * V1);
  r.im_first = hs_norm(V1 - eta * (V1 * V1 + tau * U * U.adjoint()) - V1 * SV2 * V1 -
                       tau * U * SsV1 * U.adjoint());
  r.im_second = hs_norm(V2 - eta * (V2 * V2 + tau * U.adjoint() * U) - V2 * SsV1 * V2 -
                        tau * U.adjoint() * SV2 * U);
  r.trace = std::abs(avg(V1) - avg(V2));
  r.u_identity = std::max(hs_norm(U * A1 - V1), hs_norm(B2 * U - V2));
  return r;
}

nlohmann::json to_json(const Mat &m) {
  nlohmann::json re = nlohmann::json::array(), im = nlohmann::json::array();
  for (int i = 0; i < m.rows(); ++i) {
    std::vector<double> r(m.cols()), c(m.cols());
    for (int j = 0; j < m.cols(); ++j) {
      r[j] = m(i, j).real();
      c[j] = m(i, j).imag();
    }
    re.push_back(r);
    im.push_back(c);
  }
  return {{"real", re}, {"imag", im}};
}

Mat matrix_from_json(const nlohmann::json &j) {
  auto read = [](const nlohmann::json &a) {
    if (!a.is_array() || a.empty()) throw std::invalid_argument("matrix must be a non-empty nested array");
    int rows = int(a.size()), cols = int(a.front().size());
    RMat m(rows, cols);
    for (int i = 0; i < rows; ++i) {
      if (!a[i].is_array() || int(a[i].size()) != cols)
        throw std::invalid_argument("ragged matrix rows");
      for (int k = 0; k < cols; ++k) {
        if (!a[i][k].is_number()) throw std::invalid_argument("matrix entries must be numbers");
        m(i, k) = a[i][k].get<double>();
      }
    }
    return m;
  };
  if (j.is_array()) return read(j).cast<cplx>();
  if (!j.is_object() || !j.contains("real")) throw std::invalid_argument("complex matrix needs a \"real\" array");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "real" && it.key() != "imag")
      throw std::invalid_argument("unknown matrix key \"" + it.key() + "\"");
  RMat re = read(j.at("real"));
  Mat m = re.cast<cplx>();
  if (j.contains("imag")) {
    RMat im = read(j.at("imag"));
    if (im.rows() != re.rows() || im.cols() != re.cols())
      throw std::invalid_argument("real and imag parts differ in shape");
    m += cplx(0, 1) * im.cast<cplx>();
  }
  return m;
}

nlohmann::json to_json(const DysonSolution &sol) {
  return {{"tau", sol.tau},
          {"eta", sol.eta},
          {"V1", to_json(sol.V1)},
          {"V2", to_json(sol.V2)},
          {"U", to_json(sol.U)},
          {"residual_dyson", sol.residual_dyson},
          {"residual_U", sol.residual_U},
          {"iterations", sol.iterations},
          {"converged", sol.converged},
          {"continuation_path", sol.continuation_path}};
}

}  // namespace dysoncirc
