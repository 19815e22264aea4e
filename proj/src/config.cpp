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

#include "dysoncirc/config.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "dysoncirc/models.hpp"

namespace dysoncirc {

namespace {

using nlohmann::json;

void allow_keys(const json &obj, const std::string &where, std::set<std::string> keys) {
  if (!obj.is_object()) throw SchemaError(where + " must be an object");
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!keys.count(it.key())) throw SchemaError("unknown key \"" + it.key() + "\" in " + where);
}

double number(const json &obj, const char *key, double fallback, const std::string &where) {
  if (!obj.contains(key)) return fallback;
  const json &v = obj.at(key);
  if (!v.is_number()) throw SchemaError(where + "." + key + " must be a number");
  return v.get<double>();
}

double positive(const json &obj, const char *key, double fallback, const std::string &where) {
  double v = number(obj, key, fallback, where);
  if (!(v > 0)) throw SchemaError(where + "." + key + " must be positive");
  return v;
}

int integer(const json &obj, const char *key, int fallback, const std::string &where, int lo) {
  if (!obj.contains(key)) return fallback;
  const json &v = obj.at(key);
  if (!v.is_number_integer()) throw SchemaError(where + "." + key + " must be an integer");
  long long x = v.get<long long>();
  if (x < lo || x > 1 << 24)
    throw SchemaError(where + "." + key + " must be an integer >= " + std::to_string(lo));
  return int(x);
}

bool boolean(const json &obj, const char *key, bool fallback, const std::string &where) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) throw SchemaError(where + "." + key + " must be a boolean");
  return obj.at(key).get<bool>();
}

std::vector<double> numbers(const json &obj, const char *key, const std::string &where) {
  const json &v = obj.at(key);
  if (!v.is_array()) throw SchemaError(where + "." + key + " must be an array of numbers");
  std::vector<double> out;
  for (const json &x : v) {
    if (!x.is_number()) throw SchemaError(where + "." + key + " must be an array of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::uint64_t seed_value(const json &v, const std::string &where) {
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return std::uint64_t(v.get<long long>());
  throw SchemaError(where + " must be a nonnegative integer");
}

Mat matrix(const json &v, const std::string &where) {
  try {
    Mat m = matrix_from_json(v);
    if (m.rows() != m.cols()) throw SchemaError(where + " must be square");
    return m;
  } catch (const SchemaError &) {
    throw;
  } catch (const std::exception &e) {
    throw SchemaError(where + ": " + e.what());
  }
}

std::vector<Mat> coefficient_list(const json &v, const std::string &where) {
  if (!v.is_array()) throw SchemaError(where + " must be an array of matrices");
  if (v.empty()) throw SchemaError(where + " needs at least one coefficient");
  std::vector<Mat> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(matrix(v[i], where + "[" + std::to_string(i) + "]"));
    if (out.back().rows() != out.front().rows())
      throw SchemaError(where + " coefficients differ in size");
  }
  return out;
}

void read_solver(const json &s, SolverOptions &o) {
  const std::string w = "solver";
  allow_keys(s, w, {"tolerance", "accept", "eta_min", "margin", "max_iterations", "damping"});
  o.tolerance = positive(s, "tolerance", o.tolerance, w);
  o.accept = positive(s, "accept", o.accept, w);
  o.eta_min = positive(s, "eta_min", o.eta_min, w);
  o.margin = positive(s, "margin", o.margin, w);
  o.max_iterations = integer(s, "max_iterations", o.max_iterations, w, 1);
  o.damping = positive(s, "damping", o.damping, w);
  if (o.damping > 1) throw SchemaError("solver.damping must lie in (0, 1]");
  if (o.margin >= 0.5) throw SchemaError("solver.margin must be below 0.5");
}

void read_grid(const json &d, GridSpec &g, SigmaOptions &s) {
  const std::string w = "density";
  allow_keys(d, w,
             {"points", "tau_min_fraction", "tau_max_fraction", "taus", "block", "fd_fraction",
              "force_finite_difference"});
  g.points = integer(d, "points", g.points, w, 0);
  g.tau_min_fraction = number(d, "tau_min_fraction", g.tau_min_fraction, w);
  g.tau_max_fraction = number(d, "tau_max_fraction", g.tau_max_fraction, w);
  if (d.contains("taus")) g.taus = numbers(d, "taus", w);
  g.block = integer(d, "block", g.block, w, 1);
  s.fd_fraction = number(d, "fd_fraction", s.fd_fraction, w);
  s.force_finite_difference = boolean(d, "force_finite_difference", s.force_finite_difference, w);
}

void read_simulate(const json &d, SimulateConfig &c) {
  const std::string w = "simulate";
  allow_keys(d, w,
             {"n", "samples", "field", "tau_star", "probes", "delocalization_eps", "zeta", "eta",
              "resolvent_constant", "small_eta", "small_constant", "guard_eps", "radial_tolerance",
              "girko", "profile_points"});
  // n = 0 must reach the dimension check, not the schema
  if (d.contains("n")) {
    if (!d.at("n").is_number_integer()) throw SchemaError("simulate.n must be an integer");
    long long n = d.at("n").get<long long>();
    if (n < 1 || n > 8192) throw DimensionError("invalid dimension: simulate.n = " + std::to_string(n));
    c.n = int(n);
  }
  c.samples = integer(d, "samples", c.samples, w, 1);
  if (d.contains("field")) {
    const json &f = d.at("field");
    if (f == "complex") c.field = Field::Complex;
    else if (f == "real") c.field = Field::Real;
    else throw SchemaError("simulate.field must be \"complex\" or \"real\"");
  }
  c.tau_star = number(d, "tau_star", c.tau_star, w);
  if (c.tau_star < 0) throw SchemaError("simulate.tau_star must be nonnegative");
  c.probes = integer(d, "probes", c.probes, w, 1);
  c.delocalization_eps = positive(d, "delocalization_eps", c.delocalization_eps, w);
  if (d.contains("zeta")) {
    std::vector<double> z = numbers(d, "zeta", w);
    if (z.size() != 2) throw SchemaError("simulate.zeta must be [re, im]");
    c.zeta = {z[0], z[1]};
  }
  c.eta = positive(d, "eta", c.eta, w);
  c.resolvent_constant = positive(d, "resolvent_constant", c.resolvent_constant, w);
  c.small_eta = positive(d, "small_eta", c.small_eta, w);
  c.small_constant = positive(d, "small_constant", c.small_constant, w);
  c.guard_eps = positive(d, "guard_eps", c.guard_eps, w);
  c.radial_tolerance = positive(d, "radial_tolerance", c.radial_tolerance, w);
  c.profile_points = integer(d, "profile_points", c.profile_points, w, 2);
  if (d.contains("girko")) {
    const json &g = d.at("girko");
    if (g.is_boolean()) {
      c.girko = g.get<bool>();
    } else {
      const std::string wg = "simulate.girko";
      allow_keys(g, wg,
                 {"points", "cutoff", "radius_fraction", "quadrature", "control_variate",
                  "tolerance", "seed"});
      c.girko_options.points = integer(g, "points", c.girko_options.points, wg, 1);
      c.girko_options.cutoff = positive(g, "cutoff", c.girko_options.cutoff, wg);
      c.girko_options.quadrature = boolean(g, "quadrature", false, wg);
      c.girko_options.control_variate = boolean(g, "control_variate", true, wg);
      if (g.contains("seed")) c.girko_options.seed = seed_value(g.at("seed"), wg + ".seed");
      c.girko_radius_fraction = positive(g, "radius_fraction", c.girko_radius_fraction, wg);
      c.girko_tolerance = positive(g, "tolerance", c.girko_tolerance, wg);
    }
  }
}

void read_check(const json &d, CheckConfig &c) {
  const std::string w = "check";
  allow_keys(d, w, {"tau_fractions", "taus", "scales", "laplacian"});
  if (d.contains("tau_fractions")) c.tau_fractions = numbers(d, "tau_fractions", w);
  if (d.contains("taus")) c.taus = numbers(d, "taus", w);
  if (d.contains("scales")) c.scales = numbers(d, "scales", w);
  for (double s : c.scales)
    if (!(s > 0)) throw SchemaError("check.scales must be positive");
  for (double t : c.tau_fractions)
    if (!(t >= 0)) throw SchemaError("check.tau_fractions must be nonnegative");
  if (d.contains("laplacian")) {
    const json &l = d.at("laplacian");
    if (l.is_boolean()) {
      c.laplacian = l.get<bool>();
    } else {
      const std::string wl = "check.laplacian";
      allow_keys(l, wl, {"h", "spacing", "tau_min_fraction", "tau_max_fraction"});
      c.laplacian_grid.h = positive(l, "h", c.laplacian_grid.h, wl);
      c.laplacian_grid.spacing = positive(l, "spacing", c.laplacian_grid.spacing, wl);
      c.laplacian_grid.tau_min_fraction =
          number(l, "tau_min_fraction", c.laplacian_grid.tau_min_fraction, wl);
      c.laplacian_grid.tau_max_fraction =
          number(l, "tau_max_fraction", c.laplacian_grid.tau_max_fraction, wl);
    }
  }
}

}  // namespace

CovarianceOperator model_from_json(const json &m, const json *dimension) {
  if (!m.is_object() || !m.contains("type")) throw SchemaError("model.type is required");
  if (!m.at("type").is_string()) throw SchemaError("model.type must be a string");
  const std::string type = m.at("type").get<std::string>();
  std::optional<int> dim;
  if (dimension) {
    if (!dimension->is_number_integer() || dimension->get<long long>() < 1 ||
        dimension->get<long long>() > 4096)
      throw SchemaError("dimension must be a positive integer");
    dim = int(dimension->get<long long>());
  }
  auto build = [&]() -> CovarianceOperator {
    try {
      if (type == "averaging") {
        allow_keys(m, "model", {"type", "scale"});
        if (!dim) throw SchemaError("averaging model needs a dimension");
        return CovarianceOperator::averaging(*dim, positive(m, "scale", 1.0, "model"));
      }
      if (type == "variance_profile") {
        allow_keys(m, "model", {"type", "s"});
        if (!m.contains("s")) throw SchemaError("model.s is required");
        Mat s = matrix(m.at("s"), "model.s");
        if (s.imag().norm() > 0) throw SchemaError("model.s must be real");
        if (s.real().minCoeff() < 0) throw SchemaError("model.s has a negative variance");
        return CovarianceOperator::variance_profile(s.real());
      }
      if (type == "kronecker") {
        allow_keys(m, "model", {"type", "coefficients"});
        if (!m.contains("coefficients")) throw SchemaError("model.coefficients is required");
        return CovarianceOperator::kronecker(coefficient_list(m.at("coefficients"), "model.coefficients"));
      }
      if (type == "full_tensor") {
        allow_keys(m, "model", {"type", "kappa"});
        if (!m.contains("kappa")) throw SchemaError("model.kappa is required");
        Mat k = matrix(m.at("kappa"), "model.kappa");
        int n = int(std::lround(std::sqrt(double(k.rows()))));
        if (n * n != k.rows()) throw SchemaError("model.kappa must be n^2 x n^2");
        return CovarianceOperator::full_tensor(n, k);
      }
      if (type == "builtin") {
        allow_keys(m, "model", {"type", "name"});
        if (!m.contains("name") || !m.at("name").is_string()) throw SchemaError("model.name is required");
        const std::string name = m.at("name").get<std::string>();
        if (name == "circular" || name == "averaging") return models::circular(dim.value_or(4));
        if (name == "profile2") return models::profile2();
        if (name == "profile16") return models::profile16();
        if (name == "kronecker2") return models::kronecker2();
        if (name == "kronecker16") return models::kronecker16();
        if (name == "kronecker_diag") return models::kronecker_diag();
        throw SchemaError("unknown builtin model \"" + name + "\"");
      }
    } catch (const SchemaError &) {
      throw;
    } catch (const std::invalid_argument &e) {
      throw SchemaError(std::string("model: ") + e.what());
    }
    throw SchemaError("unknown model type \"" + type + "\"");
  };
  CovarianceOperator op = build();
  if (dim && op.dimension() != *dim)
    throw SchemaError("dimension " + std::to_string(*dim) + " does not match the model size " +
                      std::to_string(op.dimension()));
  return op;
}

std::string config_hash(const json &doc) {
  // nlohmann::json keeps object keys sorted, so dump() is canonical
  const std::string s = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunConfig parse_config(const json &doc, const std::string &command,
                       std::optional<std::uint64_t> seed_override, int threads) {
  static const std::set<std::string> commands = {"density", "simulate", "check", "brown"};
  if (!commands.count(command)) throw SchemaError("unknown command \"" + command + "\"");
  allow_keys(doc, "config",
             {"name", "model", "dimension", "seed", "solver", "density", "simulate", "check", "brown"});

  RunConfig c;
  c.command = command;
  c.document = doc;
  if (doc.contains("seed")) c.seed = seed_value(doc.at("seed"), "seed");
  if (seed_override) {
    c.seed = *seed_override;
    c.document["seed"] = c.seed;
  }

  if (command == "brown") {
    if (!doc.contains("brown")) throw SchemaError("brown section is required");
    allow_keys(doc.at("brown"), "brown", {"coefficients"});
    if (!doc.at("brown").contains("coefficients")) throw SchemaError("brown.coefficients is required");
    c.brown.coefficients = coefficient_list(doc.at("brown").at("coefficients"), "brown.coefficients");
    if (doc.contains("model")) throw SchemaError("brown takes coefficients, not a model");
  } else {
    if (!doc.contains("model")) throw SchemaError("missing model field");
    c.model = model_from_json(doc.at("model"), doc.contains("dimension") ? &doc.at("dimension") : nullptr);
  }

  if (doc.contains("solver")) read_solver(doc.at("solver"), c.sigma.solver);
  if (doc.contains("density")) read_grid(doc.at("density"), c.grid, c.sigma);
  c.grid.threads = std::max(1, threads);
  if (doc.contains("simulate")) read_simulate(doc.at("simulate"), c.simulate);
  c.simulate.girko_options.threads = std::max(1, threads);
  if (doc.contains("check")) read_check(doc.at("check"), c.check);
  c.hash = config_hash(c.document);
  return c;
}

}  // namespace dysoncirc
