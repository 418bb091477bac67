// Command-line front end: simulate / estimate / tune / classify / bench.
// Exit codes: 0 success, 1 runtime failure, 2 usage or parse error.

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "spice/spice.hpp"

namespace {

namespace fs = std::filesystem;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
  std::vector<int> out;
  for (const std::string& tok : split_list(s)) {
    try {
      out.push_back(std::stoi(tok));
    } catch (...) {
      throw CLI::ValidationError(std::string(what) + ": bad integer '" + tok + "'");
    }
  }
  if (out.empty()) throw CLI::ValidationError(std::string(what) + ": empty list");
  return out;
}

// "lo:hi:k" (linear) or "lo:hi:klog" / "lo:hi:k:log" (log-spaced)
spice::LambdaGrid parse_grid(const std::string& s) {
  std::string body = s;
  bool log_spaced = false;
  if (body.size() >= 4 && body.substr(body.size() - 4) == ":log") {
    log_spaced = true;
    body = body.substr(0, body.size() - 4);
  } else if (body.size() >= 3 && body.substr(body.size() - 3) == "log") {
    log_spaced = true;
    body = body.substr(0, body.size() - 3);
  }
  const auto parts = split_list([&] {
    std::string b = body;
    for (char& c : b)
      if (c == ':') c = ',';
    return b;
  }());
  if (parts.size() != 3) throw CLI::ValidationError("--grid: expected lo:hi:k(log)");
  try {
    const double lo = std::stod(parts[0]);
    const double hi = std::stod(parts[1]);
    const int k = std::stoi(parts[2]);
    return log_spaced ? spice::log_spaced_grid(lo, hi, k) : spice::linear_grid(lo, hi, k);
  } catch (const spice::Error& e) {
    throw CLI::ValidationError(std::string("--grid: ") + e.what());
  } catch (...) {
    throw CLI::ValidationError("--grid: expected lo:hi:k(log)");
  }
}

spice::SpiceMode parse_mode(const std::string& s) {
  if (s == "corr") return spice::SpiceMode::correlation;
  if (s == "cov") return spice::SpiceMode::covariance;
  throw CLI::ValidationError("--mode: expected corr or cov");
}

struct LabeledCsv {
  spice::LabeledData data;
  std::vector<std::string> feature_names;
};

LabeledCsv read_labeled_csv(const std::string& path, const std::string& label_col) {
  auto [m, header] = spice::read_numeric_csv(path);
  int label_idx = -1;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == label_col) label_idx = static_cast<int>(j);
  if (label_idx < 0)
    throw spice::MissingLabels(path + ": no '" + label_col + "' column");
  LabeledCsv out;
  out.data.labels.resize(m.rows());
  out.data.x.values = spice::Matrix(m.rows(), m.cols() - 1);
  for (int i = 0; i < m.rows(); ++i) {
    const double lv = m(i, label_idx);
    if (lv != 0.0 && lv != 1.0)
      throw spice::ParseError(path + ": line " + std::to_string(i + 2) +
                              ": label must be 0 or 1");
    out.data.labels[i] = static_cast<int>(lv);
    int jj = 0;
    for (int j = 0; j < m.cols(); ++j) {
      if (j == label_idx) continue;
      out.data.x.values(i, jj++) = m(i, j);
    }
  }
  for (int j = 0; j < static_cast<int>(header.size()); ++j)
    if (j != label_idx) out.feature_names.push_back(header[j]);
  return out;
}

void write_report(const fs::path& path, const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(path);
  if (!out) throw spice::Error("cannot write " + path.string());
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
}

struct CommonFlags {
  std::uint64_t seed = 1;
  std::string out_dir = ".";
  double q = 1.0;
  double epsilon = 1e-8;
  std::string mode = "corr";
  int threads = 1;
};

void add_common(CLI::App* cmd, CommonFlags& c) {
  cmd->add_option("--seed", c.seed, "RNG seed (runs are reproducible given the seed)");
  cmd->add_option("--out", c.out_dir, "output directory");
  cmd->add_option("--q", c.q, "penalty exponent q >= 1")->check(CLI::Range(1.0, 64.0));
  cmd->add_option("--epsilon", c.epsilon, "perturbation / hard-zero threshold");
  cmd->add_option("--mode", c.mode, "corr: fit on correlations and rescale; cov: fit on covariance");
  cmd->add_option("--threads", c.threads, "worker threads for independent work items");
}

void add_solver_overrides(CLI::App* cmd, spice::SolverConfig& s) {
  cmd->add_option("--inner-tol", s.inner_tol, "sweep convergence threshold");
  cmd->add_option("--outer-tol", s.outer_tol, "relative objective change threshold");
  cmd->add_option("--max-inner", s.max_inner_sweeps, "max sweeps per outer iteration");
  cmd->add_option("--max-outer", s.max_outer_iters, "max outer iterations");
}

int cmd_simulate(const CommonFlags& common, const std::string& models_s, const std::string& p_s,
                 int n, int n_val, int reps, const std::string& estimators_s, int grid_size,
                 const std::optional<double>& lambda, const spice::SolverConfig& solver) {
  spice::SimulateConfig cfg;
  cfg.models = split_list(models_s);
  cfg.p_list = parse_int_list(p_s, "--p");
  cfg.n = n;
  cfg.n_val = n_val > 0 ? n_val : n;
  cfg.n_reps = reps;
  cfg.seed = common.seed;
  cfg.estimators = split_list(estimators_s);
  cfg.grid_size = grid_size;
  cfg.fixed_lambda = lambda;
  cfg.pen.q = common.q;
  cfg.pen.epsilon = common.epsilon;
  cfg.solver = solver;
  cfg.mode = parse_mode(common.mode);
  cfg.threads = common.threads;
  cfg.out_dir = common.out_dir;
  spice::run_simulate(cfg);
  std::cout << "wrote kl_summary.csv, sparsity_summary.csv and zero-count matrices to "
            << cfg.out_dir << "\n";
  return 0;
}

int cmd_estimate(const CommonFlags& common, const std::string& input,
                 const std::string& estimator, const std::optional<double>& lambda,
                 const std::string& tune, const spice::SolverConfig& solver_in) {
  auto [values, colnames] = spice::read_numeric_csv(input);
  spice::DataMatrix x{std::move(values)};
  if (x.n() < 2) throw spice::TooFewObservations(input + ": need at least 2 rows");

  spice::SymmetricMatrix sigma_hat = spice::sample_covariance(x);
  for (int j = 0; j < x.p(); ++j)
    if (!(sigma_hat(j, j) > 0.0))
      throw spice::NonPositiveVariance(input + ": column '" + colnames[j] +
                                       "' has zero variance");

  spice::SolverConfig solver = solver_in;
  solver.init_strategy = spice::default_init_strategy(x.n(), x.p());
  const spice::SpiceMode mode = parse_mode(common.mode);

  spice::SymmetricMatrix omega_hat;
  spice::Mask zero_pattern;
  std::vector<std::pair<std::string, std::string>> kv;

  if (estimator == "spice") {
    spice::PenaltySpec pen;
    pen.q = common.q;
    pen.epsilon = common.epsilon;
    if (lambda) {
      pen.lambda = *lambda;
    } else {
      // no explicit lambda: tune by k-fold cross-validated likelihood
      int k = 5;
      if (!tune.empty()) {
        if (tune.rfind("cv:", 0) != 0)
          throw CLI::ValidationError("--tune: expected cv:<k>");
        k = std::stoi(tune.substr(3));
      }
      const spice::LambdaGrid grid = spice::default_grid(x);
      pen.lambda = spice::select_lambda_cv(x, k, grid, spice::TuningCriterion::cv_likelihood,
                                           pen, solver, nullptr, common.seed, mode)
                       .best_lambda;
    }
    const spice::EstimateReport rep = spice::fit_spice(x, pen, solver, mode);
    omega_hat = rep.omega_hat;
    zero_pattern = rep.zero_pattern;
    kv = {{"lambda", spice::format_double(rep.lambda)},
          {"q", spice::format_double(rep.q)},
          {"objective", spice::format_double(rep.objective_trace.back())},
          {"outer_iters", std::to_string(rep.outer_iters)},
          {"converged", rep.converged ? "true" : "false"},
          {"nnz_offdiag", std::to_string(rep.nnz_offdiag())}};
  } else {
    if (estimator == "sample") {
      omega_hat = spice::invert_pd(sigma_hat);
    } else if (estimator == "ledoit_wolf") {
      omega_hat = spice::invert_pd(spice::ledoit_wolf(x));
    } else if (estimator == "naive_bayes") {
      const spice::SymmetricMatrix nb = spice::naive_bayes_diagonal(x);
      omega_hat = spice::SymmetricMatrix(x.p());
      for (int j = 0; j < x.p(); ++j) omega_hat.set(j, j, 1.0 / nb(j, j));
    } else {
      throw CLI::ValidationError("--estimator: expected spice|sample|ledoit_wolf|naive_bayes");
    }
    auto [thr, zeros] = spice::threshold_small_entries(omega_hat, common.epsilon);
    omega_hat = std::move(thr);
    zero_pattern = std::move(zeros);
    int nnz = 0;
    for (int i = 0; i < x.p(); ++i)
      for (int j = 0; j < x.p(); ++j)
        if (i != j && !zero_pattern(i, j)) ++nnz;
    kv = {{"lambda", "NA"},     {"q", "NA"},
          {"objective", "NA"},  {"outer_iters", "NA"},
          {"converged", "NA"},  {"nnz_offdiag", std::to_string(nnz)}};
  }

  fs::create_directories(common.out_dir);
  spice::write_matrix_csv((fs::path(common.out_dir) / "omega_hat.csv").string(), omega_hat,
                          colnames);
  spice::write_mask_csv((fs::path(common.out_dir) / "zero_pattern.csv").string(),
                        zero_pattern, colnames);
  write_report(fs::path(common.out_dir) / "report.txt", kv);
  std::cout << "wrote omega_hat.csv, zero_pattern.csv, report.txt to " << common.out_dir
            << "\n";
  return 0;
}

int cmd_tune(const CommonFlags& common, const std::string& input, const std::string& val_csv,
             int k, const std::string& criterion_s, const std::string& label_col,
             const std::string& grid_s, int grid_size, const spice::SolverConfig& solver_in) {
  spice::PenaltySpec pen;
  pen.q = common.q;
  pen.epsilon = common.epsilon;
  const spice::SpiceMode mode = parse_mode(common.mode);

  spice::TuningResult result;
  if (!val_csv.empty()) {
    auto [train_m, train_h] = spice::read_numeric_csv(input);
    auto [val_m, val_h] = spice::read_numeric_csv(val_csv);
    spice::DataMatrix x_train{std::move(train_m)}, x_val{std::move(val_m)};
    spice::SolverConfig solver = solver_in;
    solver.init_strategy = spice::default_init_strategy(x_train.n(), x_train.p());
    const spice::LambdaGrid grid =
        grid_s.empty() ? spice::default_grid(x_train, grid_size) : parse_grid(grid_s);
    result = spice::select_lambda_validation(x_train, x_val, grid, pen, solver, mode);
  } else if (criterion_s == "error") {
    LabeledCsv lab = read_labeled_csv(input, label_col);
    spice::SolverConfig solver = solver_in;
    solver.init_strategy = spice::default_init_strategy(lab.data.n(), lab.data.p());
    const spice::LambdaGrid grid =
        grid_s.empty() ? spice::default_grid(lab.data.x, grid_size) : parse_grid(grid_s);
    result = spice::select_lambda_cv(lab.data.x, k, grid,
                                     spice::TuningCriterion::cv_classification_error, pen,
                                     solver, &lab.data.labels, common.seed, mode);
  } else if (criterion_s == "likelihood") {
    auto [m, h] = spice::read_numeric_csv(input);
    spice::DataMatrix x{std::move(m)};
    spice::SolverConfig solver = solver_in;
    solver.init_strategy = spice::default_init_strategy(x.n(), x.p());
    const spice::LambdaGrid grid =
        grid_s.empty() ? spice::default_grid(x, grid_size) : parse_grid(grid_s);
    result = spice::select_lambda_cv(x, k, grid, spice::TuningCriterion::cv_likelihood, pen,
                                     solver, nullptr, common.seed, mode);
  } else {
    throw CLI::ValidationError("--criterion: expected likelihood or error");
  }

  fs::create_directories(common.out_dir);
  {
    std::ofstream out(fs::path(common.out_dir) / "tuning.csv");
    out << "lambda,score\n";
    for (const auto& [l, s] : result.criterion_values)
      out << spice::format_double(l) << "," << spice::format_double(s) << "\n";
  }
  write_report(fs::path(common.out_dir) / "tuning_report.txt",
               {{"best_lambda", spice::format_double(result.best_lambda)},
                {"criterion", spice::criterion_name(result.criterion)},
                {"n_grid", std::to_string(result.criterion_values.size() +
                                          result.failed_lambdas.size())},
                {"n_failed", std::to_string(result.failed_lambdas.size())}});
  std::cout << "best_lambda = " << spice::format_double(result.best_lambda) << "\n";
  return 0;
}

int cmd_classify(const CommonFlags& common, const std::string& input,
                 const std::string& label_col, int splits, const std::string& train_per_class,
                 int p_keep, int k, int grid_size, const std::string& estimators_s,
                 const spice::SolverConfig& solver) {
  LabeledCsv lab = read_labeled_csv(input, label_col);
  const auto counts = lab.data.class_counts();
  if (counts[0] == 0 || counts[1] == 0)
    throw spice::MissingClass(input + ": need both classes present");

  spice::ClassifyConfig cfg;
  cfg.n_splits = splits;
  const std::vector<int> tpc = parse_int_list(train_per_class, "--train-per-class");
  if (tpc.size() != 2)
    throw CLI::ValidationError("--train-per-class: expected two counts, class0,class1");
  cfg.n_train_per_class = {tpc[0], tpc[1]};
  cfg.p_keep = p_keep > 0 ? p_keep : lab.data.p();
  cfg.cv_folds = k;
  cfg.grid_size = grid_size;
  cfg.estimators = split_list(estimators_s);
  cfg.pen.q = common.q;
  cfg.pen.epsilon = common.epsilon;
  cfg.solver = solver;
  cfg.mode = parse_mode(common.mode);
  cfg.seed = common.seed;
  cfg.threads = common.threads;
  cfg.out_dir = common.out_dir;

  const spice::ClassifyResult result = spice::run_classify_protocol(lab.data, cfg);
  for (const auto& row : result.rows)
    std::cout << row.estimator << " (" << row.scheme
              << "): " << spice::format_double(row.error_pct.mean) << " % +- "
              << spice::format_double(row.error_pct.se) << "\n";
  std::cout << "wrote classification_report.csv to " << cfg.out_dir << "\n";
  return 0;
}

int cmd_bench(const CommonFlags& common, const std::string& p_s, int n, double lambda,
              const spice::SolverConfig& solver) {
  spice::BenchConfig cfg;
  cfg.p_list = parse_int_list(p_s, "--p");
  cfg.n = n;
  cfg.lambda = lambda;
  cfg.pen.q = common.q;
  cfg.pen.epsilon = common.epsilon;
  cfg.solver = solver;
  cfg.mode = parse_mode(common.mode);
  cfg.seed = common.seed;
  cfg.out_dir = common.out_dir;
  const spice::BenchResult result = spice::run_bench(cfg);
  for (const auto& row : result.rows)
    std::cout << "p=" << row.p << "  " << spice::format_double(row.seconds) << " s  ("
              << row.outer_iters << " outer iterations)\n";
  std::cout << "wrote timing.csv to " << cfg.out_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse inverse covariance estimation by penalized Gaussian likelihood"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo estimation experiments");
  CommonFlags sim_common;
  std::string sim_models = "ar1", sim_p = "30", sim_estimators = "sample,ledoit_wolf,spice";
  int sim_n = 100, sim_nval = 0, sim_reps = 50, sim_grid_size = 20;
  std::optional<double> sim_lambda;
  spice::SolverConfig sim_solver = spice::pipeline_solver_config();
  add_common(sim, sim_common);
  add_solver_overrides(sim, sim_solver);
  sim->add_option("--models", sim_models, "comma list: ar1|ar4|rand01|rand05");
  sim->add_option("--p", sim_p, "comma list of dimensions");
  sim->add_option("--n", sim_n, "training observations per replication");
  sim->add_option("--n-val", sim_nval, "validation observations (default: n)");
  sim->add_option("--reps", sim_reps, "replications per (model, p)");
  sim->add_option("--estimators", sim_estimators, "comma list: sample|ledoit_wolf|spice");
  sim->add_option("--grid-size", sim_grid_size, "tuning grid size");
  sim->add_option("--lambda", sim_lambda, "fixed lambda (skips tuning)");

  // estimate
  auto* est = app.add_subcommand("estimate", "fit a concentration matrix to a CSV");
  CommonFlags est_common;
  std::string est_input, est_estimator = "spice", est_tune;
  std::optional<double> est_lambda;
  spice::SolverConfig est_solver = spice::pipeline_solver_config();
  add_common(est, est_common);
  add_solver_overrides(est, est_solver);
  est->add_option("--input", est_input, "n x p CSV with header row")->required();
  est->add_option("--estimator", est_estimator, "spice|sample|ledoit_wolf|naive_bayes");
  est->add_option("--lambda", est_lambda, "penalty tuning parameter");
  est->add_option("--tune", est_tune, "cv:<k> cross-validated likelihood tuning");

  // tune
  auto* tun = app.add_subcommand("tune", "select lambda by validation or cross-validation");
  CommonFlags tun_common;
  std::string tun_input, tun_val, tun_criterion = "likelihood", tun_label_col = "label",
              tun_grid;
  int tun_k = 5, tun_grid_size = 20;
  spice::SolverConfig tun_solver;
  add_common(tun, tun_common);
  add_solver_overrides(tun, tun_solver);
  tun->add_option("--input", tun_input, "training CSV")->required();
  tun->add_option("--val", tun_val, "validation CSV (hold-out tuning instead of CV)");
  tun->add_option("--k", tun_k, "CV folds");
  tun->add_option("--criterion", tun_criterion, "likelihood|error (error needs labels)");
  tun->add_option("--label-col", tun_label_col, "label column name");
  tun->add_option("--grid", tun_grid, "lo:hi:k(log); default data-driven");
  tun->add_option("--grid-size", tun_grid_size, "data-driven grid size");

  // classify
  auto* cls = app.add_subcommand("classify", "repeated-split discriminant protocol");
  CommonFlags cls_common;
  std::string cls_input, cls_label_col = "label", cls_train_pc = "15,27",
              cls_estimators = "naive_bayes,ledoit_wolf,spice_a,spice_b";
  int cls_splits = 100, cls_p_keep = 0, cls_k = 5, cls_grid_size = 10;
  spice::SolverConfig cls_solver;
  add_common(cls, cls_common);
  add_solver_overrides(cls, cls_solver);
  cls->add_option("--input", cls_input, "labeled CSV (0/1 label column)")->required();
  cls->add_option("--label-col", cls_label_col, "label column name");
  cls->add_option("--splits", cls_splits, "number of random stratified splits");
  cls->add_option("--train-per-class", cls_train_pc, "training counts: class0,class1");
  cls->add_option("--p-keep", cls_p_keep, "features kept by t-ranking (0: all)");
  cls->add_option("--k", cls_k, "CV folds for schemes A/B");
  cls->add_option("--grid-size", cls_grid_size, "tuning grid size");
  cls->add_option("--estimators", cls_estimators,
                  "comma list: naive_bayes|ledoit_wolf|spice_a|spice_b");

  // bench
  auto* ben = app.add_subcommand("bench", "solver wall-time scaling");
  CommonFlags ben_common;
  std::string ben_p = "50,100,200";
  int ben_n = 100;
  double ben_lambda = 0.2;
  spice::SolverConfig ben_solver;
  add_common(ben, ben_common);
  add_solver_overrides(ben, ben_solver);
  ben->add_option("--p", ben_p, "comma list of dimensions");
  ben->add_option("--n", ben_n, "observations");
  ben->add_option("--lambda", ben_lambda, "fixed lambda");

  try {
    app.parse(argc, argv);
    if (sim->parsed())
      return cmd_simulate(sim_common, sim_models, sim_p, sim_n, sim_nval, sim_reps,
                          sim_estimators, sim_grid_size, sim_lambda, sim_solver);
    if (est->parsed())
      return cmd_estimate(est_common, est_input, est_estimator, est_lambda, est_tune,
                          est_solver);
    if (tun->parsed())
      return cmd_tune(tun_common, tun_input, tun_val, tun_k, tun_criterion, tun_label_col,
                      tun_grid, tun_grid_size, tun_solver);
    if (cls->parsed())
      return cmd_classify(cls_common, cls_input, cls_label_col, cls_splits, cls_train_pc,
                          cls_p_keep, cls_k, cls_grid_size, cls_estimators, cls_solver);
    if (ben->parsed())
      return cmd_bench(ben_common, ben_p, ben_n, ben_lambda, ben_solver);
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const spice::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const spice::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
