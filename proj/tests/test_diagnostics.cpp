#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "rlsbias/diagnostics.hpp"
#include "rlsbias/excitation.hpp"
#include "rlsbias/experiment.hpp"
#include "test_support.hpp"

namespace rlsbias {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TraceRecord record(long k, double err) {
  TraceRecord r;
  r.k = k;
  r.abs_error = Vector::Constant(1, err);
  r.scaled_error = Vector::Constant(1, static_cast<double>(k) * err);
  r.error_norm = err;
  return r;
}

TEST(PredictBias, GaussianExample) {
  const CEstimate c{SymMatrix::diagonal(vec({0.1, 1, 10, 100})), 0};
  const BiasPrediction b = predict_bias_asymptote(c, Regularizer::ridge(4, 1e-5), Vector::Ones(4));
  // -r C^{-1} 1
  const Vector expected = vec({-1e-4, -1e-5, -1e-6, -1e-7});
  EXPECT_LE(((b.v - expected).array() / expected.array()).abs().maxCoeff(), 1e-12);
  EXPECT_NEAR(b.error_at(100)(0), -1e-6, 1e-18);
}

TEST(PredictBias, IdentityCase) {
  const CEstimate c{SymMatrix::identity(3), 0};
  Vector t0 = Vector::Zero(3);
  t0(0) = 1.0;
  const BiasPrediction b = predict_bias_asymptote(c, Regularizer(SymMatrix::identity(3), t0), Vector::Zero(3));
  EXPECT_EQ(b.v, t0);
}

TEST(PredictBias, SingularCIsNotPersistentlyExciting) {
  const CEstimate c{SymMatrix::diagonal(vec({1, 0})), 0};
  EXPECT_THROW(predict_bias_asymptote(c, Regularizer::ridge(2, 1.0), Vector::Ones(2)), NotPersistentlyExcitingError);
}

TEST(ExactBias, NoDataIsPriorError) {
  const Vector theta = vec({0.5, -2.0});
  const Regularizer reg(SymMatrix::diagonal(vec({3, 0.2})), vec({1, 1}));
  EXPECT_LE((exact_bias(RegressorAccumulator(2), reg, theta) - (reg.theta0() - theta)).norm(), 1e-15);
}

TEST(ExactBias, ScalarOneObservation) {
  RegressorAccumulator acc(1);
  acc.absorb(Observation{Matrix::Ones(1, 1), Vector::Ones(1)});
  // (1 + 1)^{-1} * 1 * (0 - 1)
  EXPECT_DOUBLE_EQ(exact_bias(acc, Regularizer::ridge(1, 1.0), Vector::Ones(1))(0), -0.5);
}

TEST(ExactBias, MatchesRunningRlsErrorOnFirData) {
  std::mt19937_64 gen(3);
  std::vector<Vector> u;
  for (int k = 0; k < 1000; ++k) u.push_back(testing::random_vector(gen, 1));
  const FirModel fir = scalar_fir_example();
  const Vector theta = fir_true_theta(fir);
  const auto obs = fir_simulate(fir, u);
  const Regularizer reg = Regularizer::ridge(4, 1e-5);
  EstimatorState s = rls_init(reg);
  RegressorAccumulator acc(4);
  for (const auto& o : obs) {
    s = rls_step(s, o);
    acc.absorb(o);
  }
  EXPECT_LE((exact_bias(acc, reg, theta) - (s.theta - theta)).norm(), 1e-8);
}

TEST(LogSlope, PowerLaws) {
  for (long k : {2L, 3L, 10L, 1000L, 1000000L}) {
    const double kd = static_cast<double>(k);
    // Rounding in f_k / f_{k-1} is amplified by 1 / log(k / (k-1)) ~ k.
    const double tol = 1e-13 * kd;
    EXPECT_NEAR(*log_slope(1.0 / kd, 1.0 / (kd - 1.0), k), -1.0, tol);
    EXPECT_EQ(*log_slope(3.5, 3.5, k), 0.0);
    EXPECT_NEAR(*log_slope(kd * kd, (kd - 1.0) * (kd - 1.0), k), 2.0, tol);
  }
}

TEST(LogSlope, BaseIndependent) {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> d(1e-6, 10.0);
  for (int i = 0; i < 200; ++i) {
    const long k = 2 + i * 37;
    const double a = d(gen), b = d(gen);
    const double base10 = (std::log10(a) - std::log10(b)) /
                          (std::log10(static_cast<double>(k)) - std::log10(static_cast<double>(k - 1)));
    EXPECT_NEAR(*log_slope(a, b, k), base10, 1e-12 * std::max(1.0, std::abs(base10)) * static_cast<double>(k));
  }
}

TEST(LogSlope, UndefinedCases) {
  EXPECT_FALSE(log_slope(1.0, 1.0, 1).has_value());
  EXPECT_FALSE(log_slope(0.0, 1.0, 5).has_value());
  EXPECT_FALSE(log_slope(1.0, 0.0, 5).has_value());
  EXPECT_FALSE(log_slope(-1.0, 1.0, 5).has_value());
  EXPECT_FALSE(log_slope(std::numeric_limits<double>::infinity(), 1.0, 5).has_value());
}

// Every component decays like a_m k^c, so the p-norm does too.
TEST(LogSlope, CommonComponentRateCarriesToEveryPNorm) {
  std::mt19937_64 gen(6);
  std::uniform_real_distribution<double> amp(0.1, 10.0);
  for (double c : {-2.0, -1.0, -0.5, 1.0}) {
    for (double p : {1.0, 2.0, 8.0}) {
      for (int trial = 0; trial < 20; ++trial) {
        const Index n = 1 + trial % 8;
        Vector a(n);
        for (Index m = 0; m < n; ++m) a(m) = amp(gen);
        auto norm_at = [&](long k) {
          const Vector e = a * std::pow(static_cast<double>(k), c);
          return std::pow(e.array().abs().pow(p).sum(), 1.0 / p);
        };
        for (long k : {2L, 17L, 500L, 9999L}) {
          EXPECT_NEAR(*log_slope(norm_at(k), norm_at(k - 1), k), c, 1e-10) << "c=" << c << " p=" << p;
        }
      }
    }
  }
}

TEST(MovingAverage, HandExamples) {
  const std::vector<double> s{1, 2, 3, 4};
  const auto ma = moving_average(std::span<const double>(s), 2);
  EXPECT_FALSE(ma[0].has_value());
  EXPECT_DOUBLE_EQ(*ma[1], 1.5);
  EXPECT_DOUBLE_EQ(*ma[2], 2.5);
  EXPECT_DOUBLE_EQ(*ma[3], 3.5);

  const auto id = moving_average(std::span<const double>(s), 1);
  for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(*id[i], s[i]);

  const std::vector<double> flat(50, -0.75);
  const auto mf = moving_average(std::span<const double>(flat), 10);
  for (std::size_t i = 9; i < flat.size(); ++i) EXPECT_DOUBLE_EQ(*mf[i], -0.75);
}

TEST(MovingAverage, SkipsMissingEntries) {
  const std::vector<std::optional<double>> s{std::nullopt, 2.0, std::nullopt, 4.0};
  const auto ma = moving_average(std::span<const std::optional<double>>(s), 2);
  EXPECT_FALSE(ma[0].has_value());
  EXPECT_DOUBLE_EQ(*ma[1], 2.0);
  EXPECT_DOUBLE_EQ(*ma[2], 2.0);
  EXPECT_DOUBLE_EQ(*ma[3], 4.0);
}

TEST(MovingAverage, RejectsBadInput) {
  const std::vector<double> s{1.0};
  EXPECT_THROW(moving_average(std::span<const double>(s), 0), DimensionError);
  EXPECT_THROW(moving_average(std::span<const double>(), 3), DimensionError);
}

TEST(AverageOverTrials, SingleTrialIsIdentity) {
  Trace t{record(1, 0.5), record(2, 0.25), record(3, 0.125)};
  recompute_log_slopes(t);
  const Trace avg = average_over_trials(std::vector<Trace>{t});
  ASSERT_EQ(avg.size(), t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    EXPECT_EQ(avg[i].error_norm, t[i].error_norm);
    EXPECT_EQ(avg[i].abs_error, t[i].abs_error);
    EXPECT_EQ(avg[i].log_slope, t[i].log_slope);
  }
}

TEST(AverageOverTrials, PointwiseMean) {
  const Trace a{record(1, 2), record(2, 2)};
  const Trace b{record(1, 4), record(2, 4)};
  const Trace avg = average_over_trials(std::vector<Trace>{a, b});
  EXPECT_EQ(avg[0].error_norm, 3.0);
  EXPECT_EQ(avg[1].abs_error(0), 3.0);
  EXPECT_EQ(avg[1].scaled_error(0), 6.0);
  EXPECT_EQ(*avg[1].log_slope, 0.0);
}

TEST(AverageOverTrials, KeepsBothSlopeReadings) {
  // Trial slopes -1 and -2 average to -1.5; the averaged norm has its own slope.
  Trace a{record(1, 1.0), record(2, 0.5)};
  Trace b{record(1, 1.0), record(2, 0.25)};
  recompute_log_slopes(a);
  recompute_log_slopes(b);
  const Trace avg = average_over_trials(std::vector<Trace>{a, b});
  EXPECT_NEAR(*avg[1].mean_log_slope, -1.5, 1e-15);
  EXPECT_NEAR(*avg[1].log_slope, std::log(0.375) / std::log(2.0), 1e-15);
}

TEST(AverageOverTrials, KappaNeedsEveryTrial) {
  Trace a{record(1, 1.0)}, b{record(1, 1.0)};
  a[0].kappa = 2.0;
  EXPECT_FALSE(average_over_trials(std::vector<Trace>{a, b})[0].kappa.has_value());
  b[0].kappa = 4.0;
  EXPECT_EQ(*average_over_trials(std::vector<Trace>{a, b})[0].kappa, 3.0);
}

TEST(AverageOverTrials, RejectsMismatchedGrids) {
  EXPECT_THROW(average_over_trials(std::vector<Trace>{{record(1, 1)}, {record(1, 1), record(2, 1)}}),
               DimensionError);
  EXPECT_THROW(average_over_trials(std::vector<Trace>{{record(1, 1)}, {record(2, 1)}}), DimensionError);
  EXPECT_THROW(average_over_trials(std::vector<Trace>{}), DimensionError);
}

// Gaussian scenario (e2): the gap between k * exact_bias(k) and the predicted
// limit shrinks as data accumulates. Per trial the 500-step average of the
// gap wanders like a random walk of size O(1/sqrt(k)), so the decrease is
// checked on the trial mean at a few checkpoints rather than step by step.
TEST(BiasAsymptote, ScaledExactBiasGapDecreases) {
  const ScenarioConfig cfg = ScenarioConfig::defaults(ScenarioId::E2);
  const Regularizer reg = Regularizer::ridge(4, cfg.r);
  const std::vector<std::size_t> checkpoints{999, 2499, 4999, 9999};
  std::vector<double> mean(checkpoints.size(), 0.0);
  for (long t = 0; t < cfg.trials; ++t) {
    TrialRng rng(trial_seed(cfg.seed, static_cast<std::uint64_t>(t)));
    const TrialData data = generate_regressor_stream(cfg, rng);
    const Vector v = predict_bias_asymptote(CEstimate{SymMatrix(*analytic_C(cfg)), 0}, reg, data.theta).v;
    RegressorAccumulator acc(4);
    std::vector<double> gap;
    for (long k = 1; k <= cfg.steps; ++k) {
      acc.absorb(data.stream[static_cast<std::size_t>(k - 1)]);
      gap.push_back((static_cast<double>(k) * exact_bias(acc, reg, data.theta) - v).norm() / v.norm());
    }
    const auto ma = moving_average(std::span<const double>(gap), 500);
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      mean[c] += *ma[checkpoints[c]] / static_cast<double>(cfg.trials);
    }
  }
  for (std::size_t c = 1; c < mean.size(); ++c) EXPECT_LT(mean[c], mean[c - 1]) << "checkpoint " << c;
  EXPECT_LT(mean.back(), 0.05);
}

}  // namespace
}  // namespace rlsbias
