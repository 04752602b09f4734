#include "sindex/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <thread>
#include <tuple>

namespace sindex {

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

void parallel_for(int n_tasks, int threads, const std::function<void(int)>& task) {
  if (threads <= 0) {
    threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  threads = std::min(threads, n_tasks);
  if (threads <= 1) {
    for (int i = 0; i < n_tasks; ++i) task(i);
    return;
  }
  std::atomic<int> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (int i = next.fetch_add(1); i < n_tasks; i = next.fetch_add(1)) {
        if (failed.load()) return;
        try {
          task(i);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          failed.store(true);
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

Direction default_beta0(int p) {
  return Direction(Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p))));
}

}  // namespace

LawKind law_from_name(const std::string& name) {
  if (name == "gaussian") return LawKind::gaussian;
  if (name == "elliptical_t") return LawKind::elliptical_t;
  if (name == "uniform_cube") return LawKind::uniform_cube;
  throw IngestError("unknown predictor law '" + name +
                    "'; valid: gaussian, elliptical_t, uniform_cube");
}

std::string law_name(LawKind kind) {
  switch (kind) {
    case LawKind::gaussian: return "gaussian";
    case LawKind::elliptical_t: return "elliptical_t";
    case LawKind::uniform_cube: return "uniform_cube";
  }
  return "?";
}

Eigen::MatrixXd gen_predictors(const PredictorLaw& law, Eigen::Index n, Rng& rng) {
  if (law.p < 2) throw IngestError("predictor law: p must be at least 2");
  Eigen::MatrixXd x(n, law.p);
  switch (law.kind) {
    case LawKind::gaussian:
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < law.p; ++j) x(i, j) = rng.normal();
      }
      break;
    case LawKind::elliptical_t: {
      if (law.t_dof <= 2) throw IngestError("elliptical_t law needs dof > 2");
      // scale mixture standardized to covariance I_p
      const double nu = static_cast<double>(law.t_dof);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double w = rng.chi_squared(law.t_dof);
        const double scale = std::sqrt((nu - 2.0) / w);
        for (int j = 0; j < law.p; ++j) x(i, j) = scale * rng.normal();
      }
      break;
    }
    case LawKind::uniform_cube: {
      const double half = std::sqrt(3.0);  // U(-sqrt 3, sqrt 3) has unit variance
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int j = 0; j < law.p; ++j) x(i, j) = rng.uniform(-half, half);
      }
      break;
    }
  }
  return x;
}

Dataset gen_dataset(const ModelSpec& model, const PredictorLaw& law, const Direction& beta0,
                    Eigen::Index n, Rng& rng) {
  if (beta0.dim() != law.p) {
    throw std::invalid_argument("gen_dataset: beta0 dimension does not match the law");
  }
  Dataset data;
  data.x = gen_predictors(law, n, rng);
  data.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    data.y[i] = sample_response(model, data.x.row(i).dot(beta0.coords()), rng);
  }
  data.standardized = false;
  return data;
}

Lemma1Result lemma1_residual(const KappaFn& kappa, const Direction& beta,
                             const ModelSpec& model, const PredictorLaw& law,
                             std::int64_t n_mc, Rng& rng) {
  if (n_mc < 1000) throw std::invalid_argument("lemma1_residual: need n_mc >= 1000");
  const int p = law.p;
  const Eigen::MatrixXd q = projection_complement(beta);
  const int batches = 100;
  const std::int64_t per_batch = n_mc / batches;

  Lemma1Result result;
  Eigen::MatrixXd batch_means(batches, p);
  Eigen::VectorXd x(p);
  for (int b = 0; b < batches; ++b) {
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(p);
    for (std::int64_t i = 0; i < per_batch; ++i) {
      switch (law.kind) {
        case LawKind::gaussian:
          for (int j = 0; j < p; ++j) x[j] = rng.normal();
          break;
        case LawKind::elliptical_t: {
          const double nu = static_cast<double>(law.t_dof);
          const double scale = std::sqrt((nu - 2.0) / rng.chi_squared(law.t_dof));
          for (int j = 0; j < p; ++j) x[j] = scale * rng.normal();
          break;
        }
        case LawKind::uniform_cube:
          for (int j = 0; j < p; ++j) x[j] = rng.uniform(-std::sqrt(3.0), std::sqrt(3.0));
          break;
      }
      const double t = beta.coords().dot(x);
      const double y = sample_response(model, t, rng);
      double k = kappa(t, y);
      if (std::abs(k) > 1e6) {
        k = k > 0.0 ? 1e6 : -1e6;
        ++result.clipped;
      }
      acc.noalias() += x * k;
    }
    batch_means.row(b) = (q * (acc / static_cast<double>(per_batch))).transpose();
  }

  const Eigen::RowVectorXd overall = batch_means.colwise().mean();
  result.residual_norm = overall.norm();
  const Eigen::MatrixXd centered = batch_means.rowwise() - overall;
  const double var_sum = centered.squaredNorm() / static_cast<double>(batches - 1);
  result.mc_se = std::sqrt(var_sum / static_cast<double>(batches));
  return result;
}

const std::vector<std::string>& kappa_names() {
  static const std::vector<std::string> names{"constant", "ty", "y_cubed", "t2y", "true_score"};
  return names;
}

KappaFn kappa_by_name(const std::string& name, const ModelSpec& model) {
  if (name == "constant") return [](double, double) { return 1.0; };
  if (name == "ty") return [](double t, double y) { return t * y; };
  if (name == "y_cubed") return [](double, double y) { return y * y * y; };
  if (name == "t2y") return [](double t, double y) { return t * t * y; };
  if (name == "true_score") {
    return [model](double t, double y) { return analytic_score(model, t, y); };
  }
  std::ostringstream msg;
  msg << "unknown kappa '" << name << "'; valid:";
  for (const auto& n : kappa_names()) msg << " " << n;
  throw IngestError(msg.str());
}

EstimatorKind estimator_from_name(const std::string& name) {
  if (name == "ols") return EstimatorKind::ols;
  if (name == "adaptive") return EstimatorKind::adaptive;
  if (name == "oracle_one_step") return EstimatorKind::oracle_one_step;
  if (name == "mle") return EstimatorKind::mle;
  throw IngestError("unknown estimator '" + name +
                    "'; valid: ols, adaptive, oracle_one_step, mle");
}

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::adaptive: return "adaptive";
    case EstimatorKind::oracle_one_step: return "oracle_one_step";
    case EstimatorKind::mle: return "mle";
  }
  return "?";
}

void validate_mc_config(const McConfig& config) {
  std::vector<std::string> problems;
  if (config.law.p < 2) problems.push_back("law.p: must be at least 2");
  if (config.law.kind == LawKind::elliptical_t && config.law.t_dof <= 2) {
    problems.push_back("law.t_dof: elliptical_t needs dof > 2");
  }
  if (!(config.model.sigma_or_scale > 0.0)) {
    problems.push_back("model.sigma_or_scale: must be positive");
  }
  if (config.model.error == ErrorLaw::student_t && config.model.t_dof < 3) {
    problems.push_back("model.t_dof: student-t error needs integer dof >= 3");
  }
  if (config.beta0 && config.beta0->dim() != config.law.p) {
    problems.push_back("beta0: dimension does not match law.p");
  }
  if (config.n_grid.empty()) {
    problems.push_back("n_grid: must be non-empty");
  } else {
    for (std::size_t i = 0; i + 1 < config.n_grid.size(); ++i) {
      if (config.n_grid[i] >= config.n_grid[i + 1]) {
        problems.push_back("n_grid: must be strictly increasing");
        break;
      }
    }
    if (config.n_grid.front() < config.law.p + 2) {
      problems.push_back("n_grid: smallest n must be at least p + 2");
    }
  }
  if (config.replications < 2) problems.push_back("replications: must be at least 2");
  if (config.estimators.empty()) problems.push_back("estimators: must be non-empty");
  if (!(config.fit.discretization_mesh_constant > 0.0)) {
    problems.push_back("fit.discretization_mesh_constant: must be positive");
  }
  if (!(config.fit.kernel.bandwidth_constant > 0.0)) {
    problems.push_back("fit.kernel.bandwidth_constant: must be positive");
  }
  if (!(config.fit.kernel.trim_constant > 0.0)) {
    problems.push_back("fit.kernel.trim_constant: must be positive");
  }
  if (!(config.fit.kernel.trim_exponent > 0.0 && config.fit.kernel.trim_exponent < 0.5)) {
    problems.push_back("fit.kernel.trim_exponent: must lie in (0, 1/2)");
  }
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid configuration (" << problems.size() << " problem(s)):";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw IngestError(msg.str());
  }
}

namespace {

struct RepOutcome {
  // per estimator (indexed like config.estimators): angular error and the
  // complement-coordinate deviation, or failure
  std::vector<bool> ok;
  std::vector<double> angular;
  std::vector<Eigen::VectorXd> delta;
};

RepOutcome run_replication(const McConfig& config, const Direction& beta0,
                           const ComplementBasis& gamma0, Eigen::Index n, int rep) {
  Rng rng(stream_seed(config.seed, static_cast<std::uint64_t>(n),
                      static_cast<std::uint64_t>(rep)));
  const Dataset data = gen_dataset(config.model, config.law, beta0, n, rng);

  const std::size_t k = config.estimators.size();
  RepOutcome out;
  out.ok.assign(k, false);
  out.angular.assign(k, 0.0);
  out.delta.assign(k, Eigen::VectorXd());

  Whitener whitener;
  Dataset z;
  try {
    std::tie(whitener, z) = whiten(data);
  } catch (const EstimationError&) {
    return out;  // every estimator fails on this replication
  }

  for (std::size_t e = 0; e < k; ++e) {
    try {
      Direction estimate = beta0;  // placeholder, overwritten below
      switch (config.estimators[e]) {
        case EstimatorKind::ols:
          estimate = unwhiten_direction(whitener, ols_direction(z));
          break;
        case EstimatorKind::adaptive: {
          FitConfig fit = config.fit;
          fit.seed = stream_seed(config.seed ^ 0x5eedf17ULL, static_cast<std::uint64_t>(n),
                                 static_cast<std::uint64_t>(rep));
          estimate = adaptive_fit(data, fit).beta_hat_original;
          break;
        }
        case EstimatorKind::oracle_one_step:
          estimate = unwhiten_direction(
              whitener, oracle_one_step(z, config.model, ols_direction(z)));
          break;
        case EstimatorKind::mle:
          estimate = unwhiten_direction(whitener, mle_fit(z, config.model, ols_direction(z)));
          break;
      }
      const Direction aligned = align_sign(estimate, beta0);
      out.ok[e] = true;
      out.angular[e] = angular_error(aligned, beta0);
      out.delta[e] = std::sqrt(static_cast<double>(n)) * gamma0.columns().transpose() *
                     (aligned.coords() - beta0.coords());
    } catch (const EstimationError&) {
      out.ok[e] = false;
    }
  }
  return out;
}

}  // namespace

McReport run_monte_carlo(const McConfig& config, int threads) {
  validate_mc_config(config);
  const Direction beta0 = config.beta0 ? *config.beta0 : default_beta0(config.law.p);
  const ComplementBasis gamma0 = orthonormal_complement(beta0);

  const int reps = config.replications;
  const int n_cells = static_cast<int>(config.n_grid.size());
  const int tasks = n_cells * reps;

  std::vector<RepOutcome> outcomes(tasks);
  parallel_for(tasks, threads, [&](int task) {
    const int n_idx = task / reps;
    const int rep = task % reps;
    outcomes[task] = run_replication(config, beta0, gamma0, config.n_grid[n_idx], rep);
  });

  McReport report;
  report.config = config;
  report.config.beta0 = beta0;

  // aggregate estimator-major so the CSV groups by estimator
  for (std::size_t e = 0; e < config.estimators.size(); ++e) {
    for (int n_idx = 0; n_idx < n_cells; ++n_idx) {
      const Eigen::Index n = config.n_grid[n_idx];
      McCell cell;
      cell.estimator = estimator_name(config.estimators[e]);
      cell.n = n;

      std::vector<double> errors;
      std::vector<Eigen::VectorXd> deltas;
      for (int rep = 0; rep < reps; ++rep) {
        const RepOutcome& out = outcomes[n_idx * reps + rep];
        if (out.ok[e]) {
          errors.push_back(out.angular[e]);
          deltas.push_back(out.delta[e]);
        } else {
          cell.failed_replications.push_back(rep);
        }
      }
      cell.failures = static_cast<int>(cell.failed_replications.size());
      cell.used = static_cast<int>(errors.size());
      if (cell.failures * 5 > reps) {
        std::ostringstream msg;
        msg << "estimator " << cell.estimator << " failed " << cell.failures << "/" << reps
            << " replications at n = " << n << " (more than 20%)";
        throw EstimationError(msg.str());
      }

      std::sort(errors.begin(), errors.end());
      cell.median_angular_error = quantile_sorted(errors, 0.5);
      cell.iqr_angular_error = quantile_sorted(errors, 0.75) - quantile_sorted(errors, 0.25);

      const int pk = config.law.p - 1;
      Eigen::VectorXd mean = Eigen::VectorXd::Zero(pk);
      for (const auto& d : deltas) mean += d;
      mean /= static_cast<double>(deltas.size());
      Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(pk, pk);
      for (const auto& d : deltas) {
        const Eigen::VectorXd c = d - mean;
        cov.noalias() += c * c.transpose();
      }
      cov /= static_cast<double>(deltas.size() - 1);
      cell.covariance = std::move(cov);

      report.cells.push_back(std::move(cell));
    }
  }

  // efficiency ratios against the mle cell at the same n
  for (auto& cell : report.cells) {
    if (cell.estimator == "mle") continue;
    for (const auto& ref : report.cells) {
      if (ref.estimator == "mle" && ref.n == cell.n) {
        const double denom = ref.covariance.trace();
        if (denom > 0.0) cell.efficiency_vs_mle = cell.covariance.trace() / denom;
      }
    }
  }

  // rate slopes per estimator over the n grid
  if (n_cells >= 2) {
    for (std::size_t e = 0; e < config.estimators.size(); ++e) {
      const std::string name = estimator_name(config.estimators[e]);
      double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
      int count = 0;
      for (const auto& cell : report.cells) {
        if (cell.estimator != name || cell.median_angular_error <= 0.0) continue;
        const double lx = std::log(static_cast<double>(cell.n));
        const double ly = std::log(cell.median_angular_error);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++count;
      }
      if (count >= 2) {
        const double denom = count * sxx - sx * sx;
        if (denom > 0.0) report.rate_slopes[name] = (count * sxy - sx * sy) / denom;
      }
    }
  }
  return report;
}

nlohmann::json report_to_json(const McReport& report) {
  const McConfig& c = report.config;
  nlohmann::json j;
  j["config"] = {
      {"model",
       {{"link", link_name(c.model.link)},
        {"error", error_name(c.model.error)},
        {"sigma_or_scale", c.model.sigma_or_scale},
        {"t_dof", c.model.t_dof}}},
      {"law", {{"kind", law_name(c.law.kind)}, {"p", c.law.p}, {"t_dof", c.law.t_dof}}},
      {"n_grid", c.n_grid},
      {"replications", c.replications},
      {"fit",
       {{"kernel",
         {{"bandwidth_constant", c.fit.kernel.bandwidth_constant},
          {"trim_constant", c.fit.kernel.trim_constant},
          {"trim_exponent", c.fit.kernel.trim_exponent}}},
        {"use_discretization", c.fit.use_discretization},
        {"discretization_mesh_constant", c.fit.discretization_mesh_constant},
        {"use_sample_splitting", c.fit.use_sample_splitting}}},
      {"seed", c.seed},
  };
  if (c.beta0) {
    j["config"]["beta0"] = std::vector<double>(c.beta0->coords().data(),
                                               c.beta0->coords().data() + c.beta0->dim());
  }
  std::vector<std::string> estimators;
  for (const auto e : c.estimators) estimators.push_back(estimator_name(e));
  j["config"]["estimators"] = estimators;

  j["cells"] = nlohmann::json::array();
  for (const auto& cell : report.cells) {
    nlohmann::json jc;
    jc["estimator"] = cell.estimator;
    jc["n"] = cell.n;
    jc["median_angular_error"] = cell.median_angular_error;
    jc["iqr_angular_error"] = cell.iqr_angular_error;
    std::vector<std::vector<double>> cov;
    for (Eigen::Index r = 0; r < cell.covariance.rows(); ++r) {
      cov.emplace_back(cell.covariance.row(r).data(),
                       cell.covariance.row(r).data() + cell.covariance.cols());
    }
    jc["covariance"] = cov;
    if (cell.efficiency_vs_mle) jc["efficiency_vs_mle"] = *cell.efficiency_vs_mle;
    jc["failures"] = cell.failures;
    jc["replications_used"] = cell.used;
    jc["failed_replications"] = cell.failed_replications;
    j["cells"].push_back(std::move(jc));
  }
  j["rate_slopes"] = report.rate_slopes;
  return j;
}

namespace {

void csv_row(std::ostream& out, const std::string& estimator, Eigen::Index n,
             const std::string& statistic, double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  out << estimator << "," << n << "," << statistic << "," << buf << "\n";
}

}  // namespace

void write_report_csv(const McReport& report, std::ostream& out) {
  out << "estimator,n,statistic,value\n";
  for (const auto& cell : report.cells) {
    csv_row(out, cell.estimator, cell.n, "median_angular_error", cell.median_angular_error);
    csv_row(out, cell.estimator, cell.n, "iqr_angular_error", cell.iqr_angular_error);
    for (Eigen::Index r = 0; r < cell.covariance.rows(); ++r) {
      for (Eigen::Index c = 0; c < cell.covariance.cols(); ++c) {
        std::ostringstream stat;
        stat << "cov_" << r << "_" << c;
        csv_row(out, cell.estimator, cell.n, stat.str(), cell.covariance(r, c));
      }
    }
    if (cell.efficiency_vs_mle) {
      csv_row(out, cell.estimator, cell.n, "efficiency_vs_mle", *cell.efficiency_vs_mle);
    }
    csv_row(out, cell.estimator, cell.n, "failures", cell.failures);
    csv_row(out, cell.estimator, cell.n, "replications_used", cell.used);
  }
  // n = 0 marks grid-wide statistics
  for (const auto& [name, slope] : report.rate_slopes) {
    csv_row(out, name, 0, "rate_slope", slope);
  }
}

ScoreDiagReport score_diag(const ModelSpec& model, const PredictorLaw& law,
                           const Direction& beta0, const std::vector<Eigen::Index>& n_grid,
                           Eigen::Index n_eval, const KernelSpec& kernel, std::uint64_t seed) {
  if (n_grid.empty()) throw IngestError("score_diag: empty n grid");
  for (std::size_t i = 0; i + 1 < n_grid.size(); ++i) {
    if (n_grid[i] >= n_grid[i + 1]) throw IngestError("score_diag: grid must be increasing");
  }
  const AnalyticScore truth(model);

  ScoreDiagReport report;
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    Rng rng(stream_seed(seed, static_cast<std::uint64_t>(n_grid[i]), 1));
    const Dataset train = gen_dataset(model, law, beta0, n_grid[i], rng);
    const Eigen::VectorXd t = train.x * beta0.coords();
    const ScoreField field =
        fit_score({t.data(), static_cast<std::size_t>(t.size())},
                  {train.y.data(), static_cast<std::size_t>(train.y.size())}, kernel);

    Rng eval_rng(stream_seed(seed, static_cast<std::uint64_t>(n_grid[i]), 2));
    const Dataset eval = gen_dataset(model, law, beta0, n_eval, eval_rng);
    report.points.push_back(
        {n_grid[i], score_l2_diagnostic(field, truth, eval.x, eval.y, beta0)});
  }

  if (report.points.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    int count = 0;
    for (const auto& pt : report.points) {
      if (pt.diagnostic <= 0.0) continue;
      const double lx = std::log(static_cast<double>(pt.n));
      const double ly = std::log(pt.diagnostic);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      ++count;
    }
    if (count >= 2) {
      const double denom = count * sxx - sx * sx;
      if (denom > 0.0) report.slope = (count * sxy - sx * sy) / denom;
    }
  }
  return report;
}

}  // namespace sindex
