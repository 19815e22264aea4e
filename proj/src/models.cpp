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

#include "dysoncirc/models.hpp"

#include <cmath>
#include <numbers>

#include "dysoncirc/rng.hpp"

namespace dysoncirc::models {

CovarianceOperator circular(int n) { return CovarianceOperator::averaging(n, 1.0); }

CovarianceOperator profile2() {
  RMat s(2, 2);
  s << 1, 2, 3, 4;
  return CovarianceOperator::variance_profile(s);
}

CovarianceOperator profile16() {
  const int n = 16;
  RMat s(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double x = double(i) / n, y = double(j) / n;
      s(i, j) = (1.0 + 0.5 * std::cos(2 * std::numbers::pi * (i - j) / n) + 0.3 * x +
                 0.6 * y * y) / n;
    }
  return CovarianceOperator::variance_profile(s);
}

std::vector<Mat> kronecker_pair() {
  const cplx i(0, 1);
  std::vector<Mat> a(2, Mat(2, 2));
  a[0] << 1.0, 0.0, 0.0, 0.6;
  a[1] << 0.3 * i, 0.8 * i, 0.5 * i, 0.2 * i;
  return a;
}

CovarianceOperator kronecker2() { return CovarianceOperator::kronecker(kronecker_pair()); }

CovarianceOperator kronecker_block(const std::vector<Mat> &a, int N) {
  if (a.empty() || N < 1) throw std::invalid_argument("kronecker_block needs coefficients and N >= 1");
  const int K = int(a.front().rows()), n = K * N, n2 = n * n;
  // x_{(al,i),(be,j)} = sum_l a_l(al,be) g_l(i,j) with E|g|^2 = 1/N
  Mat kappa = Mat::Zero(n2, n2);
  for (int a1 = 0; a1 < K; ++a1)
    for (int b1 = 0; b1 < K; ++b1)
      for (int a2 = 0; a2 < K; ++a2)
        for (int b2 = 0; b2 < K; ++b2) {
          cplx c = 0;
          for (const Mat &m : a) c += m(a1, b1) * std::conj(m(a2, b2));
          if (c == cplx(0)) continue;
          for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) {
              int r1 = a1 * N + i, c1 = b1 * N + j, r2 = a2 * N + i, c2 = b2 * N + j;
              kappa(r1 * n + c1, r2 * n + c2) = c / double(N);
            }
        }
  return CovarianceOperator::full_tensor(n, std::move(kappa));
}

CovarianceOperator kronecker16() { return kronecker_block(kronecker_pair(), 8); }

CovarianceOperator kronecker_diag() {
  Mat a = Mat::Zero(2, 2);
  a(0, 0) = 0.5;
  a(1, 1) = 1.0;
  return CovarianceOperator::kronecker({a});
}

std::vector<Named> builtin() {
  return {{"averaging", circular(4)},
          {"profile2", profile2()},
          {"profile16", profile16()},
          {"kronecker16", kronecker16()}};
}

}  // namespace dysoncirc::models
