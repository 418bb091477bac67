#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "spice/classify.hpp"
#include "spice/csv.hpp"
#include "spice/errors.hpp"
#include "spice/estimators.hpp"
#include "spice/evaluation.hpp"
#include "spice/matrix.hpp"
#include "spice/rng.hpp"
#include "spice/simulation.hpp"
#include "spice/solver.hpp"
#include "spice/tuning.hpp"

namespace spice {

/// Runs fn(0..count-1) on a bounded pool. Work items must be independent;
/// result aggregation stays deterministic because callers collect into
/// index-addressed slots.
template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = std::min(threads, count);
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

/// Solver settings used by the experiment pipelines. Sparsity readout
/// (hard zeros at epsilon = 1e-8) needs the outer loop to run the
/// shrinking entries all the way down, so the pipelines default to a much
/// tighter outer tolerance than the standalone solver.
inline SolverConfig pipeline_solver_config() {
  SolverConfig cfg;
  cfg.inner_tol = 1e-7;
  cfg.outer_tol = 1e-9;
  cfg.max_inner_sweeps = 200;
  cfg.max_outer_iters = 300;
  return cfg;
}

// ---------------------------------------------------------------------------
// simulate: estimation error and sparsity recovery on the synthetic models
// ---------------------------------------------------------------------------

struct SimulateConfig {
  std::vector<std::string> models = {"ar1"};  // ar1 | ar4 | rand01 | rand05
  std::vector<int> p_list = {30};
  int n = 100;
  int n_val = 100;
  int n_reps = 50;
  std::uint64_t seed = 1;
  std::vector<std::string> estimators = {"sample", "ledoit_wolf", "spice"};
  int grid_size = 20;
  std::optional<double> fixed_lambda;  // skip tuning when present
  PenaltySpec pen;                     // lambda field ignored unless fixed
  SolverConfig solver = pipeline_solver_config();
  // Grid-scan fits only feed the validation score, which is insensitive to
  // the deep outer iterations the sparsity readout needs, so the scan runs
  // at the standalone defaults; only the final fit uses `solver`.
  SolverConfig tuning_solver;
  SpiceMode mode = SpiceMode::correlation;
  int threads = 1;
  std::string out_dir;  // empty: no files written
};

inline ModelSpec model_spec_for(const std::string& token, int p, std::uint64_t seed) {
  ModelSpec spec;
  spec.p = p;
  spec.seed = seed;
  if (token == "ar1") {
    spec.kind = ModelKind::AR1;
  } else if (token == "ar4") {
    spec.kind = ModelKind::AR4;
  } else if (token == "rand01") {
    spec.kind = ModelKind::RandomSparse;
    spec.alpha = 0.1;
  } else if (token == "rand05") {
    spec.kind = ModelKind::RandomSparse;
    spec.alpha = 0.5;
  } else {
    throw Error("unknown model '" + token + "' (expected ar1|ar4|rand01|rand05)");
  }
  return spec;
}

struct EstimatorCell {
  std::string estimator;
  std::optional<ReplicationSummary> kl;  // absent if no replication succeeded
  int n_ok = 0;
  int n_failed = 0;
};

struct SimulateCell {
  std::string model;
  int p = 0;
  std::vector<EstimatorCell> kl_cells;
  std::optional<ReplicationSummary> tp;  // % true nonzeros recovered (spice)
  std::optional<ReplicationSummary> tn;  // % true zeros recovered (spice)
  std::vector<std::vector<int>> zero_counts;
  std::vector<double> spice_frobenius_errors;  // ||omega_hat - omega0||_F per rep
  std::vector<double> selected_lambdas;
};

struct SimulateResult {
  std::vector<SimulateCell> cells;
};

namespace detail {

struct RepOutcome {
  bool spice_ok = false;
  double spice_kl = 0.0;
  double spice_frob = 0.0;
  std::optional<double> tp_pct, tn_pct;
  Mask zero_pattern;
  double lambda = 0.0;
  bool sample_ok = false;
  double sample_kl = 0.0;
  bool lw_ok = false;
  double lw_kl = 0.0;
  std::string error;
};

}  // namespace detail

inline SimulateResult run_simulate(const SimulateConfig& cfg) {
  SimulateResult result;
  const bool want_sample = std::count(cfg.estimators.begin(), cfg.estimators.end(), "sample");
  const bool want_lw =
      std::count(cfg.estimators.begin(), cfg.estimators.end(), "ledoit_wolf");
  const bool want_spice = std::count(cfg.estimators.begin(), cfg.estimators.end(), "spice");
  for (const std::string& est : cfg.estimators)
    if (est != "sample" && est != "ledoit_wolf" && est != "spice")
      throw Error("run_simulate: unknown estimator '" + est + "'");

  for (std::size_t mi = 0; mi < cfg.models.size(); ++mi) {
    for (int p : cfg.p_list) {
      const std::uint64_t truth_seed = derive_seed(cfg.seed, mi, p, 0);
      const GroundTruth truth = build_model(model_spec_for(cfg.models[mi], p, truth_seed));

      std::vector<detail::RepOutcome> reps(cfg.n_reps);
      parallel_for(cfg.n_reps, cfg.threads, [&](int r) {
        detail::RepOutcome& out = reps[r];
        try {
          const DataMatrix train =
              sample_mvn(truth, cfg.n, derive_seed(cfg.seed, mi, p, 2 * r + 1));
          const DataMatrix val =
              sample_mvn(truth, cfg.n_val, derive_seed(cfg.seed, mi, p, 2 * r + 2));
          const SymmetricMatrix sigma_train = sample_covariance(train);

          if (want_sample) {
            try {
              out.sample_kl = kl_loss(truth.sigma0, invert_pd(sigma_train));
              out.sample_ok = true;
            } catch (const Error&) {
              out.sample_ok = false;  // p >= n: sample covariance not invertible
            }
          }
          if (want_lw) {
            try {
              out.lw_kl = kl_loss(truth.sigma0, invert_pd(ledoit_wolf(train)));
              out.lw_ok = true;
            } catch (const Error&) {
              out.lw_ok = false;
            }
          }
          if (want_spice) {
            SolverConfig solver = cfg.solver;
            solver.init_strategy = default_init_strategy(cfg.n, p);
            double lambda;
            if (cfg.fixed_lambda) {
              lambda = *cfg.fixed_lambda;
            } else {
              SolverConfig scan = cfg.tuning_solver;
              scan.init_strategy = solver.init_strategy;
              const LambdaGrid grid = default_grid(train, cfg.grid_size);
              lambda = select_lambda_validation(train, val, grid, cfg.pen, scan, cfg.mode)
                           .best_lambda;
            }
            PenaltySpec pen = cfg.pen;
            pen.lambda = lambda;
            const EstimateReport rep = fit_spice(train, pen, solver, cfg.mode);
            out.spice_kl = kl_loss(truth.sigma0, rep.omega_hat);
            out.spice_frob = frobenius_distance(rep.omega_hat, truth.omega0);
            const SparsityConfusion conf = sparsity_confusion(truth.support, rep.support());
            out.tp_pct = conf.tp_pct;
            out.tn_pct = conf.tn_pct;
            out.zero_pattern = rep.zero_pattern;
            out.lambda = lambda;
            out.spice_ok = true;
          }
        } catch (const Error& e) {
          out.error = e.what();
        }
      });

      SimulateCell cell;
      cell.model = cfg.models[mi];
      cell.p = p;

      auto collect = [&](const std::string& name, auto ok_of, auto kl_of) {
        EstimatorCell ec;
        ec.estimator = name;
        std::vector<double> kls;
        for (const auto& r : reps) {
          if (ok_of(r)) {
            kls.push_back(kl_of(r));
            ++ec.n_ok;
          } else {
            ++ec.n_failed;
          }
        }
        if (kls.size() >= 2) ec.kl = summarize(kls);
        cell.kl_cells.push_back(std::move(ec));
      };
      if (want_sample)
        collect("sample", [](const auto& r) { return r.sample_ok; },
                [](const auto& r) { return r.sample_kl; });
      if (want_lw)
        collect("ledoit_wolf", [](const auto& r) { return r.lw_ok; },
                [](const auto& r) { return r.lw_kl; });
      if (want_spice) {
        collect("spice", [](const auto& r) { return r.spice_ok; },
                [](const auto& r) { return r.spice_kl; });
        std::vector<double> tps, tns;
        std::vector<Mask> masks;
        for (const auto& r : reps) {
          if (!r.spice_ok) {
            if (!r.error.empty())
              std::cerr << "replication failed (" << cell.model << ", p=" << p
                        << "): " << r.error << "\n";
            continue;
          }
          if (r.tp_pct) tps.push_back(*r.tp_pct);
          if (r.tn_pct) tns.push_back(*r.tn_pct);
          masks.push_back(r.zero_pattern);
          cell.spice_frobenius_errors.push_back(r.spice_frob);
          cell.selected_lambdas.push_back(r.lambda);
        }
        if (tps.size() >= 2) cell.tp = summarize(tps);
        if (tns.size() >= 2) cell.tn = summarize(tns);
        if (!masks.empty()) cell.zero_counts = zero_pattern_counts(masks);
      }
      result.cells.push_back(std::move(cell));
    }
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    {
      std::ofstream out(fs::path(cfg.out_dir) / "kl_summary.csv");
      out << "model,p,estimator,mean,se,n_reps\n";
      for (const auto& cell : result.cells)
        for (const auto& ec : cell.kl_cells) {
          out << cell.model << "," << cell.p << "," << ec.estimator << ",";
          if (ec.kl)
            out << format_double(ec.kl->mean) << "," << format_double(ec.kl->se) << ","
                << ec.kl->n_reps << "\n";
          else
            out << "NA,NA," << ec.n_ok << "\n";
        }
    }
    {
      std::ofstream out(fs::path(cfg.out_dir) / "sparsity_summary.csv");
      out << "model,p,tp_mean,tp_se,tn_mean,tn_se\n";
      for (const auto& cell : result.cells) {
        if (cell.kl_cells.empty() && !cell.tp && !cell.tn) continue;
        out << cell.model << "," << cell.p << ",";
        if (cell.tp)
          out << format_double(cell.tp->mean) << "," << format_double(cell.tp->se);
        else
          out << "NA,NA";
        out << ",";
        if (cell.tn)
          out << format_double(cell.tn->mean) << "," << format_double(cell.tn->se);
        else
          out << "NA,NA";
        out << "\n";
      }
    }
    for (const auto& cell : result.cells) {
      if (cell.zero_counts.empty()) continue;
      std::ofstream out(fs::path(cfg.out_dir) /
                        ("zero_counts_" + cell.model + "_" + std::to_string(cell.p) + ".csv"));
      const auto names = default_colnames(cell.p);
      for (int j = 0; j < cell.p; ++j) out << (j ? "," : "") << names[j];
      out << "\n";
      for (int i = 0; i < cell.p; ++i) {
        for (int j = 0; j < cell.p; ++j) out << (j ? "," : "") << cell.zero_counts[i][j];
        out << "\n";
      }
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// classify: repeated stratified splits with per-split feature selection
// ---------------------------------------------------------------------------

struct ClassifyConfig {
  int n_splits = 100;
  std::array<int, 2> n_train_per_class{15, 27};
  int p_keep = 50;
  int cv_folds = 5;
  int grid_size = 10;
  std::vector<std::string> estimators = {"naive_bayes", "ledoit_wolf", "spice_a", "spice_b"};
  PenaltySpec pen;
  // The discriminant only consumes the estimate's values, never its zero
  // pattern, so the standalone solver defaults are enough here.
  SolverConfig solver;
  SpiceMode mode = SpiceMode::correlation;
  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir;  // empty: no files written
};

struct ClassifyRow {
  std::string estimator;
  std::string scheme;  // "A", "B" or "-"
  ReplicationSummary error_pct;
  int n_failed = 0;
};

struct ClassifyResult {
  std::vector<ClassifyRow> rows;
};

namespace detail {

inline double test_error_pct(const LdaModel& model, const LabeledData& test) {
  int wrong = 0;
  std::vector<double> obs(test.p());
  for (int i = 0; i < test.n(); ++i) {
    for (int j = 0; j < test.p(); ++j) obs[j] = test.x.values(i, j);
    if (lda_classify(model, obs) != test.labels[i]) ++wrong;
  }
  return 100.0 * wrong / test.n();
}

}  // namespace detail

inline ClassifyResult run_classify_protocol(const LabeledData& data,
                                            const ClassifyConfig& cfg) {
  for (const std::string& est : cfg.estimators)
    if (est != "naive_bayes" && est != "ledoit_wolf" && est != "spice_a" &&
        est != "spice_b")
      throw Error("run_classify_protocol: unknown estimator '" + est + "'");
  const int n_est = static_cast<int>(cfg.estimators.size());

  // per split, per estimator: error % or NaN on failure
  std::vector<std::vector<double>> errors(cfg.n_splits,
                                          std::vector<double>(n_est,
                                                              std::numeric_limits<double>::quiet_NaN()));

  parallel_for(cfg.n_splits, cfg.threads, [&](int s) {
    const std::uint64_t split_seed = derive_seed(cfg.seed, 0x51, s, 0);
    LabeledData train, test;
    std::tie(train, test) = stratified_split(data, cfg.n_train_per_class, split_seed);

    // feature selection on the training half only, re-done per split
    std::vector<int> cols =
        t_statistic_ranking(train, std::min(cfg.p_keep, train.p()));
    std::sort(cols.begin(), cols.end());
    const LabeledData train_k = select_columns(train, cols);
    const LabeledData test_k = select_columns(test, cols);
    const DataMatrix pooled = pooled_centered(train_k);

    for (int e = 0; e < n_est; ++e) {
      const std::string& est = cfg.estimators[e];
      try {
        SymmetricMatrix omega_hat;
        if (est == "naive_bayes") {
          const SymmetricMatrix nb = naive_bayes_diagonal(pooled);
          omega_hat = SymmetricMatrix(nb.dim());
          for (int j = 0; j < nb.dim(); ++j) {
            if (!(nb(j, j) > 0.0))
              throw NonPositiveVariance("naive_bayes: zero pooled variance");
            omega_hat.set(j, j, 1.0 / nb(j, j));
          }
        } else if (est == "ledoit_wolf") {
          omega_hat = invert_pd(ledoit_wolf(pooled));
        } else {
          SolverConfig solver = cfg.solver;
          solver.init_strategy = default_init_strategy(pooled.n(), pooled.p());
          const LambdaGrid grid = default_grid(pooled, cfg.grid_size);
          const TuningCriterion crit = est == "spice_a"
                                           ? TuningCriterion::cv_likelihood
                                           : TuningCriterion::cv_classification_error;
          // scheme A scores the Gaussian likelihood on the pooled-centered
          // data; scheme B refits the discriminant pipeline per fold and
          // scores the classification error
          const DataMatrix& cv_data = est == "spice_a" ? pooled : train_k.x;
          const TuningResult tuned =
              select_lambda_cv(cv_data, cfg.cv_folds, grid, crit, cfg.pen, solver,
                               &train_k.labels, derive_seed(split_seed, e), cfg.mode);
          PenaltySpec pen = cfg.pen;
          pen.lambda = tuned.best_lambda;
          omega_hat = fit_spice(pooled, pen, solver, cfg.mode).omega_hat;
        }
        const LdaModel model = fit_lda(train_k, omega_hat);
        errors[s][e] = detail::test_error_pct(model, test_k);
      } catch (const Error& ex) {
        std::cerr << "classify split " << s << " (" << est << ") failed: " << ex.what()
                  << "\n";
      }
    }
  });

  ClassifyResult result;
  for (int e = 0; e < n_est; ++e) {
    ClassifyRow row;
    row.estimator = cfg.estimators[e];
    row.scheme = row.estimator == "spice_a" ? "A" : row.estimator == "spice_b" ? "B" : "-";
    if (row.estimator == "spice_a" || row.estimator == "spice_b")
      row.estimator = "spice";
    std::vector<double> vals;
    for (int s = 0; s < cfg.n_splits; ++s) {
      if (std::isnan(errors[s][e]))
        ++row.n_failed;
      else
        vals.push_back(errors[s][e]);
    }
    if (vals.size() >= 2) row.error_pct = summarize(vals);
    result.rows.push_back(std::move(row));
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream out(fs::path(cfg.out_dir) / "classification_report.csv");
    out << "estimator,scheme,mean_error_pct,se\n";
    for (const auto& row : result.rows)
      out << row.estimator << "," << row.scheme << ","
          << format_double(row.error_pct.mean) << "," << format_double(row.error_pct.se)
          << "\n";
  }
  return result;
}

/// Synthetic two-class Gaussian sample with a shared covariance from a
/// ground-truth model and class means -mu (class 0) and +mu (class 1).
inline LabeledData make_two_class_gaussian(const GroundTruth& truth,
                                           const std::vector<double>& mu,
                                           std::array<int, 2> n_per_class,
                                           std::uint64_t seed) {
  const int p = truth.sigma0.dim();
  const int n = n_per_class[0] + n_per_class[1];
  const DataMatrix noise = sample_mvn(truth, n, seed);
  LabeledData data;
  data.x.values = Matrix(n, p);
  data.labels.resize(n);
  for (int i = 0; i < n; ++i) {
    const int label = i < n_per_class[0] ? 0 : 1;
    const double sign = label == 0 ? -1.0 : 1.0;
    data.labels[i] = label;
    for (int j = 0; j < p; ++j) data.x.values(i, j) = noise.values(i, j) + sign * mu[j];
  }
  return data;
}

// ---------------------------------------------------------------------------
// bench: wall-clock scaling of one solve as p grows
// ---------------------------------------------------------------------------

struct BenchConfig {
  std::vector<int> p_list = {50, 100, 200};
  int n = 100;
  double lambda = 0.2;
  PenaltySpec pen;
  SolverConfig solver;  // standalone defaults: bench measures the plain solver
  SpiceMode mode = SpiceMode::correlation;
  std::uint64_t seed = 1;
  std::string out_dir;
};

struct BenchRow {
  int p = 0;
  double seconds = 0.0;
  int outer_iters = 0;
};

struct BenchResult {
  std::vector<BenchRow> rows;
};

inline BenchResult run_bench(const BenchConfig& cfg) {
  BenchResult result;
  for (int p : cfg.p_list) {
    ModelSpec spec;
    spec.kind = ModelKind::AR4;
    spec.p = p;
    spec.seed = derive_seed(cfg.seed, p, 0xBE);
    const GroundTruth truth = build_model(spec);
    const DataMatrix x = sample_mvn(truth, cfg.n, derive_seed(cfg.seed, p, 0xDA));

    PenaltySpec pen = cfg.pen;
    pen.lambda = cfg.lambda;
    SolverConfig solver = cfg.solver;
    solver.init_strategy = default_init_strategy(cfg.n, p);

    const auto start = std::chrono::steady_clock::now();
    const EstimateReport rep = fit_spice(x, pen, solver, cfg.mode);
    const auto stop = std::chrono::steady_clock::now();

    BenchRow row;
    row.p = p;
    row.seconds = std::chrono::duration<double>(stop - start).count();
    row.outer_iters = rep.outer_iters;
    result.rows.push_back(row);
  }

  if (!cfg.out_dir.empty()) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::ofstream out(fs::path(cfg.out_dir) / "timing.csv");
    out << "p,seconds,outer_iters\n";
    for (const auto& row : result.rows)
      out << row.p << "," << format_double(row.seconds) << "," << row.outer_iters << "\n";
  }
  return result;
}

}  // namespace spice
