#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "slasso/estimator.hpp"
#include "slasso/owlqn.hpp"
#include "slasso/selection.hpp"

namespace fof {

/// Settings shared by all subcommands. JSON layout:
///   bases   {k1, k2, M1, M2, ms, mt}
///   lambdas {lambda_s, lambda_t, lambda_l}  each a number or an array
///   cv      {K, seed, k_se}
///   solver  {memory, gamma, tol_pg, tol_obj, max_iters}
///   output  {dir, surface_points}
/// Unknown keys are errors.
struct RunConfig {
  slasso::PenaltyParams bases;
  std::optional<std::vector<double>> lambda_s;
  std::optional<std::vector<double>> lambda_t;
  std::optional<std::vector<double>> lambda_l;
  int K = 10;
  std::uint64_t seed = 1;
  double k_se = 0.0;
  slasso::SolverConfig solver;
  std::string out_dir = ".";
  int surface_points = 101;

  /// Single lambdas for fit / permtest; absent ones are 0. UsageError when a
  /// grid with more than one value is given.
  slasso::PenaltyParams fixed_params() const;

  /// Grids for cv / simulate; absent ones take the library defaults.
  slasso::LambdaGrids grids() const;

  void validate() const;
};

/// Parse JSON text into `cfg`, overriding only the keys present.
void apply_config_json(RunConfig& cfg, const std::string& text, const std::string& name = "<config>");

/// "1e-3" or "1e-4,1e-3,1e-2".
std::vector<double> parse_lambda_list(const std::string& text, const std::string& flag);

}  // namespace fof
