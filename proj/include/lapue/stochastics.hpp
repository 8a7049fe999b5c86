#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "lapue/disutility.hpp"

namespace lapue {

// Capacity laws ---------------------------------------------------------

struct NormalModel {
  double mu = 0.0;
  double sigma = 0.0;           // >= 0; 0 collapses to the point mass at mu
  double floor_fraction = 0.01; // samples floored at floor_fraction * mu
};

// Gaussian body up to the q-quantile x0, then a uniform-density tail of
// slope beta on [x0, x0 + (1-q)/beta]:
//   F(x) = Phi((x-mu)/sigma)   for x <= x0
//        = q + beta (x - x0)   for x0 < x < x1,   x1 = x0 + (1-q)/beta
//        = 1                   for x >= x1
struct PerturbedTailModel {
  double mu = 0.0;
  double sigma = 1.0;  // > 0
  double q = 0.9;      // in (0,1)
  double beta = 0.002; // > 0
};

struct PointMassModel {
  double value = 0.0;
};

struct MixtureModel;

using CapacityModel =
    std::variant<NormalModel, PerturbedTailModel, PointMassModel, MixtureModel>;

// (1-eps) base + eps contaminant.
struct MixtureModel {
  std::shared_ptr<CapacityModel> base;
  std::shared_ptr<CapacityModel> contaminant;
  double eps = 0.0;  // in [0,1]
};

void validate_model(const CapacityModel& model);

// Location parameter used by the deterministic UE pseudo-scenario.
double model_location(const CapacityModel& model);

double model_cdf(const CapacityModel& model, double x);
double model_quantile(const CapacityModel& model, double u);

double perturbed_cdf(const PerturbedTailModel& m, double x);
double perturbed_quantile(const PerturbedTailModel& m, double u);

// Sampling ---------------------------------------------------------------

// M scenarios, one capacity per arc, from counter-based streams derived
// from (seed, arc, scenario): reordering or parallelising evaluation cannot
// change the draws, and equal laws under the same seed yield equal samples.
// All samples are floored at floor_fraction * location to stay positive.
ScenarioSet sample_scenarios(const std::vector<CapacityModel>& arc_models,
                             int num_scenarios, std::uint64_t seed);

// Single deterministic pseudo-scenario at each model's location parameter,
// used by the plain (deterministic) user-equilibrium mode.
ScenarioSet mean_scenario_set(const std::vector<CapacityModel>& arc_models);

// Replaces the capacities of `count` scenarios on arc `arc_index` with
// `outlier_value`.  The affected scenario indices are the first `count`
// entries of a seed-determined permutation of all indices, so sweeps over
// increasing counts contaminate nested index sets.
ScenarioSet contaminate(const ScenarioSet& s, int arc_index, int count,
                        double outlier_value, std::uint64_t seed);

// Empirical distributions and transport distance -------------------------

class EmpiricalDistribution {
 public:
  explicit EmpiricalDistribution(std::vector<double> values);

  // Right-continuous ECDF value at x.
  double cdf(double x) const;
  const std::vector<double>& sorted_values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }

 private:
  std::vector<double> values_;  // ascending
};

// First Kantorovich (1-Wasserstein) distance between two empirical
// distributions, computed by the merged-breakpoint CDF-area formula
// integral |F1 - F2| dx.  For equal sample counts L it equals
// (1/L) sum_i |x_(i) - y_(i)| over sorted order statistics.
double kantorovich_1d(const EmpiricalDistribution& a,
                      const EmpiricalDistribution& b);

}  // namespace lapue
