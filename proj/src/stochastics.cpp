#include "lapue/stochastics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lapue/rng.hpp"

namespace lapue {

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

namespace {

// Acklam's rational approximation to the inverse normal CDF (~1.15e-9
// relative accuracy before refinement).
double acklam_ppf(double p) {
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425;
  if (p < plow) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - plow) {
    const double q = std::sqrt(-2.0 * std::log(1.0 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

}  // namespace

double normal_quantile(double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("normal_quantile: u must lie in (0,1)");
  // Work in the lower tail, where 1 - u is exact (Sterbenz) and the erfc-based
  // CDF retains full relative precision for the refinement step below.
  if (u > 0.5) return -normal_quantile(1.0 - u);
  double x = acklam_ppf(u);
  // One Halley step against the erfc-based CDF brings the estimate to
  // within a few ulps.
  const double e = normal_cdf(x) - u;
  const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
  if (pdf > 0.0) {
    const double w = e / pdf;
    x -= w / (1.0 + 0.5 * x * w);
  }
  return x;
}

// Capacity models ---------------------------------------------------------

void validate_model(const CapacityModel& model) {
  std::visit(
      [](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NormalModel>) {
          if (!(m.mu > 0.0)) throw std::invalid_argument("normal: mu must be > 0");
          if (!(m.sigma >= 0.0)) throw std::invalid_argument("normal: sigma must be >= 0");
          if (!(m.floor_fraction > 0.0 && m.floor_fraction < 1.0))
            throw std::invalid_argument("normal: floor_fraction must lie in (0,1)");
        } else if constexpr (std::is_same_v<T, PerturbedTailModel>) {
          if (!(m.mu > 0.0)) throw std::invalid_argument("perturbed: mu must be > 0");
          if (!(m.sigma > 0.0)) throw std::invalid_argument("perturbed: sigma must be > 0");
          if (!(m.q > 0.0 && m.q < 1.0)) throw std::invalid_argument("perturbed: q must lie in (0,1)");
          if (!(m.beta > 0.0)) throw std::invalid_argument("perturbed: beta must be > 0");
        } else if constexpr (std::is_same_v<T, PointMassModel>) {
          if (!(m.value > 0.0)) throw std::invalid_argument("point mass: value must be > 0");
        } else {
          if (!m.base || !m.contaminant)
            throw std::invalid_argument("mixture: base and contaminant required");
          if (!(m.eps >= 0.0 && m.eps <= 1.0))
            throw std::invalid_argument("mixture: eps must lie in [0,1]");
          validate_model(*m.base);
          validate_model(*m.contaminant);
        }
      },
      model);
}

double model_location(const CapacityModel& model) {
  return std::visit(
      [](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NormalModel>) return m.mu;
        else if constexpr (std::is_same_v<T, PerturbedTailModel>) return m.mu;
        else if constexpr (std::is_same_v<T, PointMassModel>) return m.value;
        else return model_location(*m.base);
      },
      model);
}

double perturbed_cdf(const PerturbedTailModel& m, double x) {
  const double x0 = m.mu + m.sigma * normal_quantile(m.q);
  const double x1 = x0 + (1.0 - m.q) / m.beta;
  if (x <= x0) return normal_cdf((x - m.mu) / m.sigma);
  if (x >= x1) return 1.0;
  return m.q + m.beta * (x - x0);
}

double perturbed_quantile(const PerturbedTailModel& m, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("perturbed_quantile: u must lie in (0,1)");
  if (u <= m.q) return m.mu + m.sigma * normal_quantile(u);
  const double x0 = m.mu + m.sigma * normal_quantile(m.q);
  return x0 + (u - m.q) / m.beta;
}

double model_cdf(const CapacityModel& model, double x) {
  return std::visit(
      [x](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NormalModel>) {
          if (m.sigma == 0.0) return x >= m.mu ? 1.0 : 0.0;
          return normal_cdf((x - m.mu) / m.sigma);
        } else if constexpr (std::is_same_v<T, PerturbedTailModel>) {
          return perturbed_cdf(m, x);
        } else if constexpr (std::is_same_v<T, PointMassModel>) {
          return x >= m.value ? 1.0 : 0.0;
        } else {
          return (1.0 - m.eps) * model_cdf(*m.base, x) +
                 m.eps * model_cdf(*m.contaminant, x);
        }
      },
      model);
}

double model_quantile(const CapacityModel& model, double u) {
  if (!(u > 0.0 && u < 1.0))
    throw std::invalid_argument("model_quantile: u must lie in (0,1)");
  return std::visit(
      [u, &model](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NormalModel>) {
          if (m.sigma == 0.0) return m.mu;
          return m.mu + m.sigma * normal_quantile(u);
        } else if constexpr (std::is_same_v<T, PerturbedTailModel>) {
          return perturbed_quantile(m, u);
        } else if constexpr (std::is_same_v<T, PointMassModel>) {
          return m.value;
        } else {
          // Generalised inverse by bisection on the mixture CDF.
          double lo = model_quantile(*m.base, 1e-14);
          double hi = model_quantile(*m.base, 1.0 - 1e-14);
          const double c = model_location(*m.contaminant);
          lo = std::min(lo, c - 1.0);
          hi = std::max(hi, c + 1.0);
          while (model_cdf(model, lo) >= u) lo -= (hi - lo);
          while (model_cdf(model, hi) < u) hi += (hi - lo);
          for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            if (model_cdf(model, mid) >= u) hi = mid;
            else lo = mid;
            if (hi - lo < 1e-12 * (1.0 + std::abs(hi))) break;
          }
          return hi;
        }
      },
      model);
}

// Sampling ----------------------------------------------------------------

namespace {

double sample_one(const CapacityModel& model, CounterRng& rng) {
  return std::visit(
      [&rng](const auto& m) -> double {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, NormalModel>) {
          if (m.sigma == 0.0) {
            rng.next_uniform();  // keep streams aligned across laws
            return m.mu;
          }
          return m.mu + m.sigma * normal_quantile(rng.next_uniform());
        } else if constexpr (std::is_same_v<T, PerturbedTailModel>) {
          return perturbed_quantile(m, rng.next_uniform());
        } else if constexpr (std::is_same_v<T, PointMassModel>) {
          rng.next_uniform();
          return m.value;
        } else {
          const double pick = rng.next_uniform();
          if (pick < m.eps) return sample_one(*m.contaminant, rng);
          return sample_one(*m.base, rng);
        }
      },
      model);
}

}  // namespace

ScenarioSet sample_scenarios(const std::vector<CapacityModel>& arc_models,
                             int num_scenarios, std::uint64_t seed) {
  if (num_scenarios < 1)
    throw std::invalid_argument("sample_scenarios: need at least one scenario");
  if (arc_models.empty())
    throw std::invalid_argument("sample_scenarios: need at least one arc model");
  for (const CapacityModel& m : arc_models) validate_model(m);

  const int A = static_cast<int>(arc_models.size());
  ScenarioSet out;
  out.seed = seed;
  out.source = "sampled";
  out.capacities.resize(num_scenarios, A);
  for (int a = 0; a < A; ++a) {
    const double floor_frac = std::visit(
        [](const auto& m) -> double {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, NormalModel>) return m.floor_fraction;
          else return 0.01;
        },
        arc_models[a]);
    const double floor_value = floor_frac * model_location(arc_models[a]);
    for (int i = 0; i < num_scenarios; ++i) {
      CounterRng rng(CounterRng::derive(seed, static_cast<std::uint64_t>(a),
                                        static_cast<std::uint64_t>(i)));
      out.capacities(i, a) = std::max(sample_one(arc_models[a], rng), floor_value);
    }
  }
  return out;
}

ScenarioSet mean_scenario_set(const std::vector<CapacityModel>& arc_models) {
  if (arc_models.empty())
    throw std::invalid_argument("mean_scenario_set: need at least one arc model");
  ScenarioSet out;
  out.seed = 0;
  out.source = "mean";
  out.capacities.resize(1, static_cast<int>(arc_models.size()));
  for (size_t a = 0; a < arc_models.size(); ++a) {
    validate_model(arc_models[a]);
    out.capacities(0, a) = model_location(arc_models[a]);
  }
  return out;
}

ScenarioSet contaminate(const ScenarioSet& s, int arc_index, int count,
                        double outlier_value, std::uint64_t seed) {
  const int M = s.num_scenarios();
  if (arc_index < 0 || arc_index >= s.capacities.cols())
    throw std::invalid_argument("contaminate: bad arc index");
  if (count < 0 || count > M)
    throw std::invalid_argument("contaminate: count must lie in [0, M]");
  if (!(outlier_value > 0.0))
    throw std::invalid_argument("contaminate: outlier capacity must be > 0");

  // Seeded Fisher-Yates permutation; the first `count` entries are replaced,
  // so larger counts contaminate supersets of smaller ones.
  std::vector<int> perm(M);
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(CounterRng::derive(seed, 0x636f6e74ULL));
  for (int i = M - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.next_uniform() * (i + 1));
    std::swap(perm[i], perm[std::min(j, i)]);
  }

  ScenarioSet out = s;
  out.source = s.source + "+contaminated";
  for (int k = 0; k < count; ++k) out.capacities(perm[k], arc_index) = outlier_value;
  return out;
}

// Empirical distributions --------------------------------------------------

EmpiricalDistribution::EmpiricalDistribution(std::vector<double> values)
    : values_(std::move(values)) {
  if (values_.empty())
    throw std::invalid_argument("empirical: need at least one sample");
  for (double v : values_) {
    if (!std::isfinite(v))
      throw std::invalid_argument("empirical: samples must be finite");
  }
  std::sort(values_.begin(), values_.end());
}

double EmpiricalDistribution::cdf(double x) const {
  const auto it = std::upper_bound(values_.begin(), values_.end(), x);
  return static_cast<double>(it - values_.begin()) / values_.size();
}

double kantorovich_1d(const EmpiricalDistribution& a,
                      const EmpiricalDistribution& b) {
  const std::vector<double>& x = a.sorted_values();
  const std::vector<double>& y = b.sorted_values();
  // integral |F_a - F_b| dx over the merged breakpoints; between adjacent
  // breakpoints both ECDFs are constant.
  std::vector<double> pts;
  pts.reserve(x.size() + y.size());
  pts.insert(pts.end(), x.begin(), x.end());
  pts.insert(pts.end(), y.begin(), y.end());
  std::sort(pts.begin(), pts.end());

  double total = 0.0;
  size_t ix = 0;
  size_t iy = 0;
  for (size_t j = 0; j + 1 < pts.size(); ++j) {
    const double lo = pts[j];
    const double hi = pts[j + 1];
    while (ix < x.size() && x[ix] <= lo) ++ix;
    while (iy < y.size() && y[iy] <= lo) ++iy;
    if (hi > lo) {
      const double fa = static_cast<double>(ix) / x.size();
      const double fb = static_cast<double>(iy) / y.size();
      total += std::abs(fa - fb) * (hi - lo);
    }
  }
  return total;
}

}  // namespace lapue
