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

#ifndef DYSONCIRC_CONFIG_HPP
#define DYSONCIRC_CONFIG_HPP

#include <cstdint>
#include <json.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dysoncirc/covariance.hpp"
#include "dysoncirc/density.hpp"
#include "dysoncirc/dyson.hpp"
#include "dysoncirc/ensemble.hpp"

namespace dysoncirc {

inline constexpr const char *kVersion = "0.1.0";

struct SchemaError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SimulateConfig {
  int n = 512;
  int samples = 1;
  Field field = Field::Complex;
  double tau_star = 0.1;
  int probes = 32;
  double delocalization_eps = 0.25;
  cplx zeta = {0.3, 0.0};
  double eta = 1.0;               // resolvent comparison
  double resolvent_constant = 10;  // gap <= constant / n
  double small_eta = 0.05;
  double small_constant = 3;  // count <= constant n eta
  double guard_eps = 0.5;
  double radial_tolerance = 0.05;
  bool girko = true;
  GirkoOptions girko_options;
  double girko_radius_fraction = 0.8;  // bump radius in units of sqrt(rho)
  double girko_tolerance = 0.05;
  int profile_points = 48;
};

struct CheckConfig {
  std::vector<double> tau_fractions = {0.0, 0.25, 0.5, 0.75, 0.9};
  std::vector<double> taus;  // absolute; entries at or beyond rho are precondition-rejected
  std::vector<double> scales = {0.25, 4.0};
  bool laplacian = true;
  LaplacianGrid laplacian_grid;
};

struct BrownConfig {
  std::vector<Mat> coefficients;
};

struct RunConfig {
  std::string command;
  nlohmann::json document;  // as validated, with the seed override applied
  std::optional<CovarianceOperator> model;
  std::uint64_t seed = 1;
  SigmaOptions sigma;
  GridSpec grid;
  SimulateConfig simulate;
  CheckConfig check;
  BrownConfig brown;
  std::string hash;  // FNV-1a 64 of the canonical document, hex
};

// Builds a covariance operator from {"type": ..., ...} plus the top-level dimension.
CovarianceOperator model_from_json(const nlohmann::json &model, const nlohmann::json *dimension);

RunConfig parse_config(const nlohmann::json &doc, const std::string &command,
                       std::optional<std::uint64_t> seed_override = std::nullopt,
                       int threads = 1);

std::string config_hash(const nlohmann::json &doc);

}  // namespace dysoncirc

#endif
