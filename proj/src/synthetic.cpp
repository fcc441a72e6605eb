#include "deepssm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deepssm/errors.hpp"

namespace deepssm {

ModelParameters<double> random_ground_truth(const ModelConfig& config, std::uint64_t seed,
                                            double spectral_radius) {
  ModelConfig c = config;
  c.seed = seed;
  auto p = init_parameters<double>(c);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> uniform(0.2, 1.0);
  for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
    auto& factors = p.stack(op).factors;
    for (int pos = 0; pos < c.layers; ++pos) {
      factors[pos] = factors[pos].unaryExpr([&](double) { return uniform(rng); });
    }
  }
  const Matrix<double> t1 = p.transition();
  const double radius = t1.eigenvalues().cwiseAbs().maxCoeff();
  if (radius > 0) p.state_stack.factors[0] *= spectral_radius / radius;
  return p;
}

SynthSeries synthesize_ohlcv(const ModelParameters<double>& truth, std::size_t days,
                             const Date& start, int sma_period, std::uint64_t seed, double level,
                             double loop_gain) {
  if (truth.n_x() != kFeatureCount || truth.n_y() != 1) {
    throw ConfigError("truth", "synthetic OHLCV needs n_x = 5 and n_y = 1");
  }
  if (days < 1) throw ConfigError("days", "must be >= 1");
  if (sma_period < 1) throw ConfigError("sma_period", "must be >= 1");
  if (!(loop_gain > 0) || loop_gain > 1) throw ConfigError("loop_gain", "must be in (0, 1]");

  const auto steps = static_cast<Index>(days);
  SynthSeries out{{}, truth, Matrix<double>(truth.n_z(), steps), Matrix<double>(1, steps), level};
  const Index n_z = truth.n_z();
  const Matrix<double> t1 = truth.transition();
  const Matrix<double> d = truth.emission();
  // Steady-state response of the close to a constant control.
  const Matrix<double> resolvent = (Matrix<double>::Identity(n_z, n_z) - t1).inverse();
  const double gain = (d.row(kAdjClose) * resolvent * truth.control_gain()).value();
  if (!(gain > 0) || !std::isfinite(gain)) {
    throw ConfigError("truth", "control has no positive steady-state effect on the close");
  }
  out.truth.control_stack.factors[0] *= loop_gain / gain;
  const Matrix<double> t2 = out.truth.control_gain();

  std::mt19937_64 rng(seed);
  const Vector<double> zero_z = Vector<double>::Zero(n_z);
  const Vector<double> zero_x = Vector<double>::Zero(kFeatureCount);
  Vector<double> z = sample_gaussian<double>(truth.z0_mean, truth.p0_cov, rng);

  std::vector<double> deviations;
  auto& s = out.series;
  for (Index k = 0; k < steps; ++k) {
    double u = 0;
    if (!deviations.empty()) {
      const std::size_t len = std::min(deviations.size(), static_cast<std::size_t>(sma_period));
      u = std::accumulate(deviations.end() - static_cast<long>(len), deviations.end(), 0.0) /
          static_cast<double>(len);
    }
    out.controls(0, k) = u;
    z = t1 * z + t2 * out.controls.col(k) + sample_gaussian<double>(zero_z, truth.q_cov, rng);
    const Vector<double> x = d * z + sample_gaussian<double>(zero_x, truth.r_cov, rng);
    out.states.col(k) = z;
    s.dates.push_back(Date::from_days(start.to_days() + static_cast<long>(k)));
    s.open.push_back(level + x(kOpen));
    s.adj_close.push_back(level + x(kAdjClose));
    s.close.push_back(level + x(kAdjClose));
    s.high.push_back(level + x(kHigh));
    s.low.push_back(level + x(kLow));
    s.volume.push_back(level + x(kVolume));
    deviations.push_back(x(kAdjClose));
  }
  return out;
}

}  // namespace deepssm
