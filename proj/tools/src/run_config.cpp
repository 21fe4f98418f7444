#include "run_config.hpp"

#include <initializer_list>
#include <limits>

#include <json.hpp>

#include "curve_io.hpp"

namespace fof {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::string& path, std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) throw UsageError(path + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw UsageError("unknown config key " + path + "." + key);
  }
}

double number_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number()) throw UsageError(path + "." + key + " must be a number");
  return v.get<double>();
}

int int_at(const json& obj, const char* key, const std::string& path) {
  const json& v = obj.at(key);
  if (!v.is_number_integer()) throw UsageError(path + "." + key + " must be an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    throw UsageError(path + "." + key + " is out of range");
  return static_cast<int>(x);
}

std::vector<double> lambda_at(const json& obj, const char* key) {
  const json& v = obj.at(key);
  const std::string where = std::string("lambdas.") + key;
  if (v.is_number()) return {v.get<double>()};
  if (!v.is_array() || v.empty()) throw UsageError(where + " must be a number or a non-empty array of numbers");
  std::vector<double> out;
  for (const json& e : v) {
    if (!e.is_number()) throw UsageError(where + " must contain only numbers");
    out.push_back(e.get<double>());
  }
  return out;
}

double single(const std::optional<std::vector<double>>& v, const char* name) {
  if (!v) return 0.0;
  if (v->size() != 1)
    throw UsageError(std::string(name) + " has " + std::to_string(v->size()) +
                     " values; this command needs a single value (use cv to choose one)");
  return v->front();
}

}  // namespace

void apply_config_json(RunConfig& cfg, const std::string& text, const std::string& name) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(name + ": " + e.what());
  }
  try {
    reject_unknown(root, "config", {"bases", "lambdas", "cv", "solver", "output"});
    if (root.contains("bases")) {
      const json& b = root["bases"];
      reject_unknown(b, "bases", {"k1", "k2", "M1", "M2", "ms", "mt"});
      if (b.contains("k1")) cfg.bases.k1 = int_at(b, "k1", "bases");
      if (b.contains("k2")) cfg.bases.k2 = int_at(b, "k2", "bases");
      if (b.contains("M1")) cfg.bases.M1 = int_at(b, "M1", "bases");
      if (b.contains("M2")) cfg.bases.M2 = int_at(b, "M2", "bases");
      if (b.contains("ms")) cfg.bases.m_s = int_at(b, "ms", "bases");
      if (b.contains("mt")) cfg.bases.m_t = int_at(b, "mt", "bases");
    }
    if (root.contains("lambdas")) {
      const json& l = root["lambdas"];
      reject_unknown(l, "lambdas", {"lambda_s", "lambda_t", "lambda_l"});
      if (l.contains("lambda_s")) cfg.lambda_s = lambda_at(l, "lambda_s");
      if (l.contains("lambda_t")) cfg.lambda_t = lambda_at(l, "lambda_t");
      if (l.contains("lambda_l")) cfg.lambda_l = lambda_at(l, "lambda_l");
    }
    if (root.contains("cv")) {
      const json& c = root["cv"];
      reject_unknown(c, "cv", {"K", "seed", "k_se"});
      if (c.contains("K")) cfg.K = int_at(c, "K", "cv");
      if (c.contains("seed")) {
        if (!c["seed"].is_number_unsigned()) throw UsageError("cv.seed must be a non-negative integer");
        cfg.seed = c["seed"].get<std::uint64_t>();
      }
      if (c.contains("k_se")) cfg.k_se = number_at(c, "k_se", "cv");
    }
    if (root.contains("solver")) {
      const json& s = root["solver"];
      reject_unknown(s, "solver", {"memory", "gamma", "tol_pg", "tol_obj", "max_iters"});
      if (s.contains("memory")) cfg.solver.memory = int_at(s, "memory", "solver");
      if (s.contains("gamma")) cfg.solver.gamma = number_at(s, "gamma", "solver");
      if (s.contains("tol_pg")) cfg.solver.tol_pg = number_at(s, "tol_pg", "solver");
      if (s.contains("tol_obj")) cfg.solver.tol_obj = number_at(s, "tol_obj", "solver");
      if (s.contains("max_iters")) cfg.solver.max_iters = int_at(s, "max_iters", "solver");
    }
    if (root.contains("output")) {
      const json& o = root["output"];
      reject_unknown(o, "output", {"dir", "surface_points"});
      if (o.contains("dir")) {
        if (!o["dir"].is_string()) throw UsageError("output.dir must be a string");
        cfg.out_dir = o["dir"].get<std::string>();
      }
      if (o.contains("surface_points")) cfg.surface_points = int_at(o, "surface_points", "output");
    }
  } catch (const UsageError& e) {
    throw UsageError(name + ": " + e.what());
  }
}

std::vector<double> parse_lambda_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  for (const std::string& cell : split_csv_line(text)) {
    const auto v = parse_double(cell);
    if (!v) throw UsageError(flag + ": '" + cell + "' is not a number");
    out.push_back(*v);
  }
  return out;
}

slasso::PenaltyParams RunConfig::fixed_params() const {
  slasso::PenaltyParams p = bases;
  p.lambda_s = single(lambda_s, "lambda_s");
  p.lambda_t = single(lambda_t, "lambda_t");
  p.lambda_l = single(lambda_l, "lambda_l");
  return p;
}

slasso::LambdaGrids RunConfig::grids() const {
  slasso::LambdaGrids g = slasso::LambdaGrids::defaults();
  if (lambda_s) g.lambda_s = *lambda_s;
  if (lambda_t) g.lambda_t = *lambda_t;
  if (lambda_l) g.lambda_l = *lambda_l;
  return g;
}

void RunConfig::validate() const {
  try {
    bases.validate();
    solver.validate();
  } catch (const slasso::InvalidArgument& e) {
    throw UsageError(e.what());
  }
  if (K < 2) throw UsageError("cv.K must be >= 2");
  if (!(k_se >= 0.0)) throw UsageError("cv.k_se must be non-negative");
  if (surface_points < 2) throw UsageError("output.surface_points must be >= 2");
  for (const auto* grid : {&lambda_s, &lambda_t, &lambda_l})
    if (*grid)
      for (double v : **grid)
        if (!(v >= 0.0) || !std::isfinite(v)) throw UsageError("lambdas must be finite and non-negative");
}

}  // namespace fof
