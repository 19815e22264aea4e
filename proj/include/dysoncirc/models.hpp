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

#ifndef DYSONCIRC_MODELS_HPP
#define DYSONCIRC_MODELS_HPP

#include <string>
#include <vector>

#include "dysoncirc/covariance.hpp"

namespace dysoncirc::models {

// Reference models used by the regression suites.
CovarianceOperator circular(int n = 4);
// s = [[1,2],[3,4]]
CovarianceOperator profile2();
// smooth, non doubly-stochastic 16 x 16 profile
CovarianceOperator profile16();
// two fixed, non-commuting 2 x 2 coefficients
std::vector<Mat> kronecker_pair();
CovarianceOperator kronecker2();
// Covariance of X = sum_l a_l (x) G_l with G_l independent N x N complex
// Ginibre blocks (entry variance 1/N); acts on (K N) x (K N) matrices.
CovarianceOperator kronecker_block(const std::vector<Mat> &a, int N);
// kronecker_block(kronecker_pair(), 8), n = 16
CovarianceOperator kronecker16();
// single diagonal coefficient diag(1,2)/2
CovarianceOperator kronecker_diag();

struct Named {
  std::string name;
  CovarianceOperator op;
};
std::vector<Named> builtin();

}  // namespace dysoncirc::models

#endif
