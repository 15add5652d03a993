#pragma once

/** @file
 * Monte-Carlo scenario runner: data generation per scenario, RLS over each
 * trial, deterministic trial averaging and file output.
 *
 * Trace row k (k = 1..steps) holds theta_k, the estimate after observations
 * 0..k-1, next to kappa(Phi_k^T Phi_k + R), the Gram matrix of observations
 * 0..k. A run with `steps` = K therefore draws K + 1 observations.
 */

#include <atomic>
#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "rlsbias/config.hpp"
#include "rlsbias/diagnostics.hpp"
#include "rlsbias/estimators.hpp"
#include "rlsbias/excitation.hpp"
#include "rlsbias/rng.hpp"
#include "rlsbias/sysid_models.hpp"
#include "rlsbias/trace_io.hpp"
#include "rlsbias/version.hpp"

namespace rlsbias {

struct TrialData {
  Vector theta;
  std::vector<Observation> stream;  ///< observations 0..steps
};

struct TrialOutcome {
  Trace trace;
  RegressorAccumulator final_acc;  ///< all observations of the trial
};

/// One trial's data: true parameters and steps + 1 noise-free observations.
inline TrialData generate_regressor_stream(const ScenarioConfig& cfg, TrialRng& rng) {
  const auto count = static_cast<std::size_t>(cfg.steps + 1);
  TrialData data;
  auto uniform_inputs = [&] {
    std::vector<Vector> u(count, Vector(1));
    for (Vector& v : u) v(0) = rng.uniform(-1.0, 1.0);
    return u;
  };

  switch (cfg.scenario) {
    case ScenarioId::E3: {
      const FirModel model = scalar_fir_example();
      data.theta = fir_true_theta(model);
      const auto u = uniform_inputs();
      data.stream = fir_simulate(model, u);
      return data;
    }
    case ScenarioId::E4: {
      const IirModel model = scalar_iir_example();
      data.theta = iir_true_theta(model);
      const auto u = uniform_inputs();
      data.stream = iir_simulate(model, u);
      return data;
    }
    case ScenarioId::E1:
    case ScenarioId::E2:
    case ScenarioId::Custom:
      break;
  }

  const Index n = cfg.n;
  const Index p = cfg.p;
  if (cfg.theta) {
    data.theta = *cfg.theta;
  } else {
    data.theta.resize(n);
    for (Index i = 0; i < n; ++i) data.theta(i) = rng.uniform(-1.0, 1.0);
  }
  Vector scale;
  if (cfg.input == InputDistribution::Gaussian) {
    scale = detail::to_vector(cfg.variances).array().sqrt();
  }
  data.stream.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Matrix phi(p, n);
    for (Index i = 0; i < p; ++i) {
      for (Index j = 0; j < n; ++j) {
        phi(i, j) = cfg.input == InputDistribution::Uniform ? rng.uniform(-1.0, 1.0) : scale(j) * rng.normal();
      }
    }
    Vector y = phi * data.theta;
    data.stream.push_back(Observation{std::move(phi), std::move(y)});
  }
  return data;
}

/// Runs RLS over one trial and records a trace row for every k in 1..steps.
/// kappa is sampled when k is a multiple of kappa_every.
inline TrialOutcome run_trial(const TrialData& data, const Regularizer& reg, long kappa_every = 1) {
  if (data.stream.size() < 2) throw DimensionError("run_trial: need at least two observations");
  if (kappa_every < 1) throw DimensionError("run_trial: kappa_every must be >= 1");
  const long steps = static_cast<long>(data.stream.size()) - 1;

  EstimatorState state = rls_init(reg);
  TrialOutcome out{Trace(), RegressorAccumulator(reg.dim())};
  RegressorAccumulator& acc = out.final_acc;
  acc.absorb(data.stream.front());
  std::optional<double> kappa_prev = regularized_condition(acc, reg);
  double norm_prev = (state.theta - data.theta).norm();

  out.trace.reserve(static_cast<std::size_t>(steps));
  for (long k = 1; k <= steps; ++k) {
    state = rls_step(state, data.stream[static_cast<std::size_t>(k - 1)]);
    acc.absorb(data.stream[static_cast<std::size_t>(k)]);

    TraceRecord rec;
    rec.k = k;
    const Vector err = state.theta - data.theta;
    rec.abs_error = err.cwiseAbs();
    rec.scaled_error = static_cast<double>(k) * err;
    rec.error_norm = err.norm();
    std::optional<double> kappa;
    if (k % kappa_every == 0) kappa = regularized_condition(acc, reg);
    rec.kappa = kappa;
    if (kappa && kappa_prev) rec.delta_kappa = *kappa - *kappa_prev;
    rec.log_slope = log_slope(rec.error_norm, norm_prev, k);
    rec.mean_log_slope = rec.log_slope;
    out.trace.push_back(std::move(rec));
    kappa_prev = kappa;
    norm_prev = err.norm();
  }
  return out;
}

/// Results for one value of r.
struct RunOutput {
  double r = 0.0;
  Trace averaged;
  Matrix C;                      ///< limit of (1/k) Phi^T Phi used for the asymptote
  std::string c_source;          ///< "analytic" or "empirical"
  double kappa_C = 0.0;
  std::optional<Vector> v_mean;  ///< trial mean of C^{-1} R (theta0 - theta); missing if C is singular
};

struct ScenarioResult {
  ScenarioConfig config;
  std::vector<std::uint64_t> trial_seeds;
  std::vector<RunOutput> runs;
};

struct RunManifest {
  ScenarioConfig config;
  std::string version;
  std::vector<std::uint64_t> trial_seeds;
  double wall_seconds = 0.0;
  std::vector<std::string> files;
};

/// Called from worker threads, once per (r, trial), before reduction.
using TrialCallback = std::function<void(std::size_t r_index, long trial, const Trace&)>;

/// C for scenarios where it is known in closed form; empty for the IIR case.
inline std::optional<Matrix> analytic_C(const ScenarioConfig& cfg) {
  const Index n = cfg.n;
  switch (cfg.scenario) {
    case ScenarioId::E3:
      return Matrix(Matrix::Identity(n, n) / 3.0);  // lagged iid U[-1,1] inputs
    case ScenarioId::E4:
      return std::nullopt;
    case ScenarioId::E1:
    case ScenarioId::E2:
    case ScenarioId::Custom:
      if (cfg.input == InputDistribution::Gaussian) {
        return Matrix(static_cast<double>(cfg.p) * detail::to_vector(cfg.variances).asDiagonal());
      }
      return Matrix(static_cast<double>(cfg.p) / 3.0 * Matrix::Identity(n, n));
  }
  return std::nullopt;
}

namespace detail {

/// Runs fn(i) for i in [0, count) on up to `workers` threads and rethrows the
/// first exception by index.
inline void parallel_for(long count, unsigned workers, const std::function<void(long)>& fn) {
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(count));
  std::atomic<long> next{0};
  auto body = [&] {
    for (long i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[static_cast<std::size_t>(i)] = std::current_exception();
      }
    }
  };
  const unsigned threads = std::min<unsigned>(workers, static_cast<unsigned>(std::max<long>(count, 1)));
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(body);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace detail

/**
 * Runs every trial for every r and reduces in trial order. Trials are
 * processed in fixed-size batches so memory stays bounded; the batch size
 * does not depend on `workers`, and neither does the output.
 */
inline ScenarioResult simulate_scenario(const ScenarioConfig& cfg, const TrialCallback& on_trial = {}) {
  validate(cfg);
  ScenarioResult result;
  result.config = cfg;
  for (long t = 0; t < cfg.trials; ++t) result.trial_seeds.push_back(trial_seed(cfg.seed, static_cast<std::uint64_t>(t)));

  const std::vector<double> rs = cfg.r_values();
  const Index n = cfg.n;
  const Vector prior = cfg.prior();
  const std::optional<Matrix> c_known = analytic_C(cfg);
  constexpr long kBatch = 16;

  struct PerR {
    TraceAverager avg;
    Vector bias_sum;
    Matrix gram_sum;
    long gram_count = 0;
  };
  std::vector<PerR> acc(rs.size());
  for (PerR& a : acc) {
    a.bias_sum = Vector::Zero(n);
    a.gram_sum = Matrix::Zero(n, n);
  }
  std::vector<Vector> thetas(static_cast<std::size_t>(cfg.trials));

  for (long first = 0; first < cfg.trials; first += kBatch) {
    const long count = std::min(kBatch, cfg.trials - first);
    std::vector<std::vector<std::optional<TrialOutcome>>> batch(
        static_cast<std::size_t>(count), std::vector<std::optional<TrialOutcome>>(rs.size()));
    detail::parallel_for(count, cfg.workers, [&](long i) {
      const long trial = first + i;
      TrialRng rng(result.trial_seeds[static_cast<std::size_t>(trial)]);
      TrialData data;
      try {
        data = generate_regressor_stream(cfg, rng);
      } catch (const NumericalError& e) {
        throw NumericalError("trial " + std::to_string(trial) + ": " + e.what());
      }
      thetas[static_cast<std::size_t>(trial)] = data.theta;
      for (std::size_t ri = 0; ri < rs.size(); ++ri) {
        const Regularizer reg(SymMatrix::scaled_identity(n, rs[ri]), prior);
        try {
          batch[static_cast<std::size_t>(i)][ri] = run_trial(data, reg, cfg.kappa_every);
        } catch (const NumericalError& e) {
          throw NumericalError("trial " + std::to_string(trial) + ": " + e.what());
        }
        if (on_trial) on_trial(ri, trial, batch[static_cast<std::size_t>(i)][ri]->trace);
      }
    });
    for (long i = 0; i < count; ++i) {
      for (std::size_t ri = 0; ri < rs.size(); ++ri) {
        const TrialOutcome& o = *batch[static_cast<std::size_t>(i)][ri];
        acc[ri].avg.add(o.trace);
        acc[ri].gram_sum += o.final_acc.gram().dense();
        acc[ri].gram_count += o.final_acc.count();
      }
    }
  }

  for (std::size_t ri = 0; ri < rs.size(); ++ri) {
    RunOutput run;
    run.r = rs[ri];
    run.averaged = acc[ri].avg.result();
    if (c_known) {
      run.C = *c_known;
      run.c_source = "analytic";
    } else {
      run.C = acc[ri].gram_sum / static_cast<double>(acc[ri].gram_count);
      run.c_source = "empirical";
    }
    const SymMatrix c_sym(run.C);
    run.kappa_C = condition_number(c_sym);
    if (std::isfinite(run.kappa_C)) {
      const Regularizer reg(SymMatrix::scaled_identity(n, rs[ri]), prior);
      Vector sum = Vector::Zero(n);
      for (const Vector& theta : thetas) {
        sum += predict_bias_asymptote(CEstimate{c_sym, 0}, reg, theta).v;
      }
      run.v_mean = sum / static_cast<double>(cfg.trials);
    }
    result.runs.push_back(std::move(run));
  }
  return result;
}

inline std::string r_label(double r) { return "r" + format_double(r); }

inline std::string manifest_text(const RunManifest& m) {
  const ScenarioConfig& c = m.config;
  std::ostringstream out;
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
  };
  auto vec = [&](const Vector& v) { return list(std::vector<double>(v.data(), v.data() + v.size())); };
  out << "version: " << m.version << '\n'
      << "scenario: " << to_string(c.scenario) << '\n'
      << "n: " << c.n << "\np: " << c.p << "\nq: " << c.q << "\nw: " << c.w << '\n'
      << "r_values: " << list(c.r_values()) << '\n'
      << "theta0: " << vec(c.prior()) << '\n'
      << "theta: " << (c.theta ? vec(*c.theta) : std::string("sampled per trial / model")) << '\n'
      << "trials: " << c.trials << "\nsteps: " << c.steps << "\nseed: " << c.seed << '\n'
      << "input: " << to_string(c.input) << '\n';
  if (!c.variances.empty()) out << "variances: " << list(c.variances) << '\n';
  out << "kappa_every: " << c.kappa_every << "\nworkers: " << c.workers << '\n'
      << "rng: mt19937_64 per trial, seed = splitmix64(seed ^ splitmix64(trial)); normals by Box-Muller\n";
  if (c.scenario == ScenarioId::E1) out << "note: the e1 r grid is an artifact default, configurable with --r-grid\n";
  out << "trial_seeds:";
  for (auto s : m.trial_seeds) out << ' ' << s;
  out << "\nwall_seconds: " << m.wall_seconds << "\nfiles:\n";
  for (const auto& f : m.files) out << "  " << f << '\n';
  return out.str();
}

/// Simulates the scenario and writes trace, asymptote, optional per-trial
/// CSVs and manifest.txt into cfg.out_dir.
inline RunManifest run_scenario(const ScenarioConfig& cfg) {
  validate(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  namespace fs = std::filesystem;
  const fs::path dir(cfg.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + cfg.out_dir + "'");

  const std::vector<double> rs = cfg.r_values();
  RunManifest manifest;
  manifest.config = cfg;
  manifest.version = kVersion;

  std::mutex files_mutex;
  std::vector<std::string> trial_files;
  TrialCallback cb;
  if (cfg.per_trial) {
    cb = [&](std::size_t ri, long trial, const Trace& trace) {
      char idx[32];
      std::snprintf(idx, sizeof idx, "%04ld", trial);
      const std::string name = "trial_" + std::string(idx) + "_" + r_label(rs[ri]) + ".csv";
      emit_csv(trace, (dir / name).string());
      std::lock_guard lock(files_mutex);
      trial_files.push_back(name);
    };
  }
  const ScenarioResult result = simulate_scenario(cfg, cb);
  manifest.trial_seeds = result.trial_seeds;

  for (const RunOutput& run : result.runs) {
    const std::string trace_name = "trace_" + r_label(run.r) + ".csv";
    emit_csv(run.averaged, (dir / trace_name).string());
    manifest.files.push_back(trace_name);
    if (run.v_mean) {
      const std::string asym_name = "asymptote_" + r_label(run.r) + ".csv";
      write_text_file((dir / asym_name).string(), asymptote_csv(*run.v_mean, run.kappa_C));
      manifest.files.push_back(asym_name);
    }
  }
  std::sort(trial_files.begin(), trial_files.end());
  manifest.files.insert(manifest.files.end(), trial_files.begin(), trial_files.end());
  manifest.files.push_back("manifest.txt");
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_text_file((dir / "manifest.txt").string(), manifest_text(manifest));
  return manifest;
}

}  // namespace rlsbias
