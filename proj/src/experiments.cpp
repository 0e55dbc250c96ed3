#include "eivdc/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <limits>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "eivdc/errors.hpp"
#include "eivdc/estimators.hpp"
#include "eivdc/numeric.hpp"
#include "eivdc/parallel.hpp"
#include "text.hpp"

namespace eivdc {
namespace {

using nlohmann::json;

json interval_json(const ConfidenceInterval& ci) {
  return json{{"lo", ci.lo}, {"hi", ci.hi}, {"level", ci.level},
              {"method", std::string(to_string(ci.method))}};
}

bool is_estimation_failure(ErrorKind kind) {
  return kind == ErrorKind::near_singular_denominator || kind == ErrorKind::degenerate_block ||
         kind == ErrorKind::singular_design;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

void fill_pooled(EstimateReport& report, const CrossSection& design) {
  report.gamma_names = design.control_names();
}

}  // namespace

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::ols: return "ols";
    case Method::three_m: return "3m";
    case Method::dc: return "dc";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  const std::string t = lower(text);
  if (t == "ols") return Method::ols;
  if (t == "3m") return Method::three_m;
  if (t == "dc") return Method::dc;
  fail(ErrorKind::parameter, "method must be one of ols, 3m, dc; got '" + std::string(text) + "'");
}

void EstimateOptions::validate() const {
  if (blocks_per_year < 1) fail(ErrorKind::parameter, "blocks per year must be at least 1");
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::parameter, "alpha must lie in (0, 1)");
  if (bootstrap_draws < 1) fail(ErrorKind::parameter, "bootstrap draws must be at least 1");
}

EstimateReport estimate_panel(const PanelData& panel, const EstimateOptions& options) {
  options.validate();
  EstimateReport report;
  report.method = options.method;
  report.options = options;
  report.observations = static_cast<std::size_t>(panel.size());
  report.firms = panel.num_firms();
  report.years = panel.years().size();

  switch (options.method) {
    case Method::ols: {
      const CrossSection design = pooled_design(panel, options.fe, options.te);
      fill_pooled(report, design);
      const OlsResult fit = ols(design);
      report.beta_hat = fit.beta;
      report.ci_beta = wald_ci(fit.beta, fit.cov(0, 0), options.alpha);
      for (Index j = 0; j < fit.gamma.size(); ++j) {
        report.gamma_hat.push_back(fit.gamma(j));
        report.ci_gamma.push_back(wald_ci(fit.gamma(j), fit.cov(j + 1, j + 1), options.alpha));
      }
      break;
    }
    case Method::three_m: {
      const CrossSection design = pooled_design(panel, options.fe, options.te);
      fill_pooled(report, design);
      const Geary3mResult fit = geary_3m(design);
      report.beta_hat = fit.beta;
      report.ci_beta = wald_ci(fit.beta, asy_var_3m(design, fit.beta), options.alpha);
      if (fit.weak_identification) {
        report.warnings.push_back(
            "weak identification: third-moment denominator is small relative to its scale");
      }
      const Matrix gamma_cov = gamma_cov_3m(design, fit.beta, fit.gamma);
      for (Index j = 0; j < fit.gamma.size(); ++j) {
        report.gamma_hat.push_back(fit.gamma(j));
        report.ci_gamma.push_back(wald_ci(fit.gamma(j), gamma_cov(j, j), options.alpha));
      }
      break;
    }
    case Method::dc: {
      Rng partition_rng(derive_seed(options.seed, "partition"));
      const PanelDcResult fit =
          panel_dc_estimate(panel, options.blocks_per_year, options.fe, options.te,
                            options.partition_mode, partition_rng, options.threads);
      fill_pooled(report, fit.design);
      report.beta_hat = fit.beta;
      report.subsample_estimates = fit.subsamples.values;
      report.degenerate_blocks = fit.subsamples.degenerate;
      report.discarded_rows = fit.discarded_rows;
      const double total_blocks =
          static_cast<double>(fit.subsamples.values.size() + fit.subsamples.degenerate);
      const double rows_per_block =
          static_cast<double>(report.observations - report.discarded_rows) / total_blocks;
      report.blocks_over_block_size = total_blocks / rows_per_block;

      const BootstrapConfig boot{options.bootstrap_draws, options.alpha,
                                 derive_seed(options.seed, "bootstrap")};
      const BootstrapResult draws =
          dc_bootstrap_ci(fit.subsamples.values, fit.beta, boot, options.threads);
      report.ci_beta = draws.ci;
      for (Index j = 0; j < fit.gamma.size(); ++j) report.gamma_hat.push_back(fit.gamma(j));
      if (fit.design.num_controls() > 0) {
        report.ci_gamma = dc_bootstrap_gamma_ci(fit.design, draws.draws, boot);
      }
      if (fit.subsamples.degenerate > 0) {
        report.warnings.push_back(std::to_string(fit.subsamples.degenerate) +
                                  " degenerate block(s) excluded from the median");
      }
      if (report.blocks_over_block_size > 0.1) {
        report.warnings.push_back("blocks are small relative to their count (B/b = " +
                                  text::format(report.blocks_over_block_size) + ")");
      }
      break;
    }
  }
  return report;
}

std::string report_json(const EstimateReport& report) {
  json gamma = json::array();
  for (std::size_t j = 0; j < report.gamma_hat.size(); ++j) {
    json entry{{"name", report.gamma_names[j]}, {"estimate", report.gamma_hat[j]}};
    if (j < report.ci_gamma.size()) entry["ci"] = interval_json(report.ci_gamma[j]);
    gamma.push_back(std::move(entry));
  }
  const auto& o = report.options;
  json doc{
      {"method", std::string(to_string(report.method))},
      {"beta_hat", report.beta_hat},
      {"ci_beta", interval_json(report.ci_beta)},
      {"gamma", gamma},
      {"subsample_estimates", report.subsample_estimates},
      {"seed", o.seed},
      {"config",
       {{"blocks_per_year", o.blocks_per_year},
        {"total_blocks", report.method == Method::dc
                             ? report.subsample_estimates.size() + report.degenerate_blocks
                             : std::size_t{0}},
        {"fe", o.fe},
        {"te", o.te},
        {"alpha", o.alpha},
        {"bootstrap_draws", o.bootstrap_draws},
        {"partition_mode", std::string(to_string(o.partition_mode))}}},
      {"diagnostics",
       {{"observations", report.observations},
        {"firms", report.firms},
        {"years", report.years},
        {"degenerate_blocks", report.degenerate_blocks},
        {"discarded_rows", report.discarded_rows},
        {"blocks_over_block_size", report.blocks_over_block_size}}},
      {"warnings", report.warnings},
  };
  return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Monte Carlo

std::string MethodSpec::label(int periods) const {
  switch (method) {
    case Method::ols: return "OLS";
    case Method::three_m: return "3M";
    case Method::dc: return "DC(" + std::to_string(blocks_per_year * periods) + ")";
  }
  return "?";
}

ModelSpec ModelSpec::from_number(int number) {
  switch (number) {
    case 1: return {false, false};
    case 2: return {true, false};
    case 3: return {false, true};
    case 4: return {true, true};
    default: fail(ErrorKind::parameter, "model spec must be 1, 2, 3 or 4");
  }
}

void McConfig::validate() const {
  dgp.validate();
  if (reps < 1) fail(ErrorKind::parameter, "reps must be at least 1");
  if (methods.empty()) fail(ErrorKind::parameter, "no methods requested");
  if (specs.empty()) fail(ErrorKind::parameter, "no model specs requested");
  if (!dgp.beta_by_period.empty()) {
    fail(ErrorKind::parameter, "Monte Carlo designs need a constant beta");
  }
  for (const auto& m : methods) {
    if (m.blocks_per_year < 1) fail(ErrorKind::parameter, "blocks per year must be at least 1");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) fail(ErrorKind::parameter, "alpha must lie in (0, 1)");
  if (bootstrap_draws < 1) fail(ErrorKind::parameter, "bootstrap draws must be at least 1");
}

const McCell* McSummary::find(std::string_view method, int spec, std::string_view coef) const {
  for (const auto& c : cells) {
    if (c.method == method && c.spec == spec && c.coef == coef) return &c;
  }
  return nullptr;
}

McSummary run_mc(const McConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  DgpConfig dgp = config.dgp;
  dgp.seed = derive_seed(config.seed, "mc");

  struct Job {
    MethodSpec method;
    ModelSpec spec;
    std::string label;
  };
  std::vector<Job> jobs;
  for (const auto& m : config.methods) {
    for (const auto& s : config.specs) jobs.push_back({m, s, m.label(dgp.periods)});
  }
  const std::size_t reps = static_cast<std::size_t>(config.reps);
  const double nan = std::numeric_limits<double>::quiet_NaN();

  // Two cells (beta, gamma) per job.
  std::vector<std::vector<double>> estimate(2 * jobs.size(), std::vector<double>(reps, nan));
  std::vector<std::vector<char>> hit(2 * jobs.size(), std::vector<char>(reps, 0));
  std::vector<std::vector<std::size_t>> degenerate(jobs.size(), std::vector<std::size_t>(reps, 0));

  parallel_for(reps, config.threads, [&](std::size_t r) {
    SimulatedPanel sim;
    try {
      sim = generate_panel(dgp, r);
    } catch (const Error& e) {
      fail(e.kind(), "replication " + std::to_string(r) + ": " + e.what());
    }
    const PanelData panel = sim.to_panel();
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      EstimateOptions options;
      options.method = jobs[j].method.method;
      options.blocks_per_year = jobs[j].method.blocks_per_year;
      options.fe = jobs[j].spec.fe;
      options.te = jobs[j].spec.te;
      options.alpha = config.alpha;
      options.bootstrap_draws = config.bootstrap_draws;
      options.partition_mode = config.partition_mode;
      options.seed = derive_seed(config.seed ^ mix64(r + 1),
                                 jobs[j].label + "/" + std::to_string(jobs[j].spec.number()));
      try {
        const EstimateReport report = estimate_panel(panel, options);
        estimate[2 * j][r] = report.beta_hat;
        hit[2 * j][r] = report.ci_beta.contains(dgp.beta);
        const auto it = std::find(report.gamma_names.begin(), report.gamma_names.end(), "z");
        const auto g = static_cast<std::size_t>(it - report.gamma_names.begin());
        estimate[2 * j + 1][r] = report.gamma_hat[g];
        hit[2 * j + 1][r] = report.ci_gamma[g].contains(dgp.gamma);
        degenerate[j][r] = report.degenerate_blocks;
      } catch (const Error& e) {
        if (!is_estimation_failure(e.kind())) throw;
      }
    }
  });

  McSummary summary;
  summary.config = config;
  for (std::size_t j = 0; j < jobs.size(); ++j) {
    for (int c = 0; c < 2; ++c) {
      const auto& est = estimate[2 * j + static_cast<std::size_t>(c)];
      const auto& hits = hit[2 * j + static_cast<std::size_t>(c)];
      std::vector<double> ok;
      std::size_t covered = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        if (std::isnan(est[r])) continue;
        ok.push_back(est[r]);
        covered += hits[r] ? 1 : 0;
      }
      McCell cell;
      cell.method = jobs[j].label;
      cell.spec = jobs[j].spec.number();
      cell.coef = c == 0 ? "beta" : "gamma";
      cell.truth = c == 0 ? dgp.beta : dgp.gamma;
      cell.reps = ok.size();
      cell.failures = reps - ok.size();
      cell.mean = ok.empty() ? nan : mean(ok);
      cell.sd = ok.empty() ? nan : stddev(ok);
      cell.coverage =
          ok.empty() ? nan : static_cast<double>(covered) / static_cast<double>(ok.size());
      for (const auto d : degenerate[j]) cell.degenerate_blocks += d;
      summary.cells.push_back(std::move(cell));
      summary.estimates.push_back(est);
    }
  }
  summary.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return summary;
}

void write_summary_csv(std::ostream& out, const McSummary& summary) {
  out << "method,spec,coef,truth,mean,sd,coverage,reps,failures,degenerate_blocks\n";
  for (const auto& c : summary.cells) {
    out << c.method << ',' << c.spec << ',' << c.coef << ',' << text::format(c.truth) << ','
        << text::format(c.mean) << ',' << text::format(c.sd) << ',' << text::format(c.coverage)
        << ',' << c.reps << ',' << c.failures << ',' << c.degenerate_blocks << '\n';
  }
}

void write_summary_text(std::ostream& out, const McSummary& summary) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::left << std::setw(8) << "method" << std::right << std::setw(5) << "spec"
      << std::setw(7) << "coef" << std::setw(9) << "truth" << std::setw(10) << "mean"
      << std::setw(10) << "sd" << std::setw(10) << "coverage" << std::setw(7) << "reps"
      << std::setw(9) << "failures" << '\n';
  out << std::fixed;
  for (const auto& c : summary.cells) {
    out << std::left << std::setw(8) << c.method << std::right << std::setw(5) << c.spec
        << std::setw(7) << c.coef << std::setprecision(3) << std::setw(9) << c.truth
        << std::setprecision(4) << std::setw(10) << c.mean << std::setw(10) << c.sd
        << std::setprecision(3) << std::setw(10) << c.coverage << std::setw(7) << c.reps
        << std::setw(9) << c.failures << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

std::string summary_json(const McSummary& summary) {
  const auto& cfg = summary.config;
  json methods = json::array();
  for (const auto& m : cfg.methods) {
    methods.push_back({{"method", std::string(to_string(m.method))},
                       {"blocks_per_year", m.blocks_per_year},
                       {"label", m.label(cfg.dgp.periods)}});
  }
  json specs = json::array();
  for (const auto& s : cfg.specs) specs.push_back(s.number());
  std::ostringstream dgp_text;
  cfg.dgp.write(dgp_text);
  json dgp = json::object();
  std::istringstream lines(dgp_text.str());
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "beta_by_period") {
      json list = json::array();
      std::istringstream items(value);
      for (std::string item; std::getline(items, item, ',');) list.push_back(std::stod(item));
      dgp[key] = list;
    } else {
      dgp[key] = json::parse(value);
    }
  }
  json cells = json::array();
  for (const auto& c : summary.cells) {
    cells.push_back({{"method", c.method},
                     {"spec", c.spec},
                     {"coef", c.coef},
                     {"truth", c.truth},
                     {"mean", c.mean},
                     {"sd", c.sd},
                     {"coverage", c.coverage},
                     {"reps", c.reps},
                     {"failures", c.failures},
                     {"degenerate_blocks", c.degenerate_blocks}});
  }
  json doc{{"config",
            {{"reps", cfg.reps},
             {"seed", cfg.seed},
             {"alpha", cfg.alpha},
             {"bootstrap_draws", cfg.bootstrap_draws},
             {"partition_mode", std::string(to_string(cfg.partition_mode))},
             {"methods", methods},
             {"specs", specs},
             {"dgp", dgp}}},
           {"cells", cells},
           {"seconds", summary.seconds}};
  return doc.dump(2);
}

std::span<const ReferenceCell> reference_cells() {
  // (method, spec, coef, beta0, mean, sd, coverage)
  static constexpr ReferenceCell cells[] = {
      {"OLS", 1, "beta", 0.0, 0.000, 0.000, 0.952},
      {"OLS", 2, "beta", 0.0, 0.000, 0.000, 0.945},
      {"OLS", 3, "beta", 0.0, 0.000, 0.000, 0.951},
      {"OLS", 4, "beta", 0.0, 0.000, 0.000, 0.945},
      {"OLS", 1, "gamma", 0.0, 0.050, 0.002, 0.951},
      {"OLS", 2, "gamma", 0.0, 0.050, 0.002, 0.944},
      {"OLS", 3, "gamma", 0.0, 0.050, 0.002, 0.951},
      {"OLS", 4, "gamma", 0.0, 0.050, 0.002, 0.943},
      {"3M", 1, "beta", 0.0, 0.036, 7.513, 0.966},
      {"3M", 2, "beta", 0.0, 0.039, 2.774, 0.982},
      {"3M", 3, "beta", 0.0, 0.007, 1.418, 0.966},
      {"3M", 4, "beta", 0.0, 0.031, 4.966, 0.982},
      {"3M", 1, "gamma", 0.0, -0.017, 14.081, 0.965},
      {"3M", 2, "gamma", 0.0, -0.012, 4.483, 0.983},
      {"3M", 3, "gamma", 0.0, 0.038, 2.717, 0.965},
      {"3M", 4, "gamma", 0.0, 0.004, 7.430, 0.982},
      {"DC(20)", 1, "beta", 0.0, 0.001, 0.008, 0.966},
      {"DC(20)", 2, "beta", 0.0, 0.001, 0.008, 0.970},
      {"DC(20)", 3, "beta", 0.0, 0.001, 0.007, 0.967},
      {"DC(20)", 4, "beta", 0.0, 0.001, 0.008, 0.969},
      {"DC(20)", 1, "gamma", 0.0, 0.048, 0.015, 0.967},
      {"DC(20)", 2, "gamma", 0.0, 0.049, 0.013, 0.967},
      {"DC(20)", 3, "gamma", 0.0, 0.048, 0.014, 0.965},
      {"DC(20)", 4, "gamma", 0.0, 0.049, 0.013, 0.967},
      {"DC(40)", 1, "beta", 0.0, 0.001, 0.005, 0.957},
      {"DC(40)", 2, "beta", 0.0, 0.001, 0.005, 0.963},
      {"DC(40)", 3, "beta", 0.0, 0.001, 0.005, 0.955},
      {"DC(40)", 4, "beta", 0.0, 0.001, 0.005, 0.963},
      {"DC(40)", 1, "gamma", 0.0, 0.047, 0.010, 0.954},
      {"DC(40)", 2, "gamma", 0.0, 0.048, 0.009, 0.961},
      {"DC(40)", 3, "gamma", 0.0, 0.047, 0.010, 0.954},
      {"DC(40)", 4, "gamma", 0.0, 0.048, 0.008, 0.959},
      {"OLS", 1, "beta", 0.025, 0.011, 0.000, 0.000},
      {"OLS", 2, "beta", 0.025, 0.009, 0.000, 0.000},
      {"OLS", 3, "beta", 0.025, 0.011, 0.000, 0.000},
      {"OLS", 4, "beta", 0.025, 0.009, 0.000, 0.000},
      {"OLS", 1, "gamma", 0.025, 0.077, 0.001, 0.000},
      {"OLS", 2, "gamma", 0.025, 0.075, 0.001, 0.000},
      {"OLS", 3, "gamma", 0.025, 0.077, 0.001, 0.000},
      {"OLS", 4, "gamma", 0.025, 0.075, 0.001, 0.000},
      {"3M", 1, "beta", 0.025, 0.025, 0.000, 0.947},
      {"3M", 2, "beta", 0.025, 0.025, 0.001, 0.955},
      {"3M", 3, "beta", 0.025, 0.025, 0.000, 0.948},
      {"3M", 4, "beta", 0.025, 0.025, 0.001, 0.955},
      {"3M", 1, "gamma", 0.025, 0.050, 0.002, 0.950},
      {"3M", 2, "gamma", 0.025, 0.050, 0.002, 0.947},
      {"3M", 3, "gamma", 0.025, 0.050, 0.002, 0.950},
      {"3M", 4, "gamma", 0.025, 0.050, 0.002, 0.947},
      {"DC(20)", 1, "beta", 0.025, 0.026, 0.007, 0.941},
      {"DC(20)", 2, "beta", 0.025, 0.024, 0.010, 0.923},
      {"DC(20)", 3, "beta", 0.025, 0.026, 0.007, 0.939},
      {"DC(20)", 4, "beta", 0.025, 0.025, 0.010, 0.927},
      {"DC(20)", 1, "gamma", 0.025, 0.048, 0.014, 0.939},
      {"DC(20)", 2, "gamma", 0.025, 0.051, 0.015, 0.922},
      {"DC(20)", 3, "gamma", 0.025, 0.048, 0.014, 0.937},
      {"DC(20)", 4, "gamma", 0.025, 0.050, 0.015, 0.927},
      {"DC(40)", 1, "beta", 0.025, 0.026, 0.007, 0.943},
      {"DC(40)", 2, "beta", 0.025, 0.018, 0.007, 0.755},
      {"DC(40)", 3, "beta", 0.025, 0.026, 0.007, 0.942},
      {"DC(40)", 4, "beta", 0.025, 0.019, 0.008, 0.798},
      {"DC(40)", 1, "gamma", 0.025, 0.049, 0.013, 0.940},
      {"DC(40)", 2, "gamma", 0.025, 0.061, 0.011, 0.753},
      {"DC(40)", 3, "gamma", 0.025, 0.049, 0.013, 0.941},
      {"DC(40)", 4, "gamma", 0.025, 0.059, 0.012, 0.798},
  };
  return cells;
}

// ---------------------------------------------------------------------------
// Expanding window

WindowResult expanding_window(const PanelData& panel, int first_end,
                              const std::vector<Method>& methods,
                              const EstimateOptions& options) {
  if (methods.empty()) fail(ErrorKind::parameter, "no methods requested");
  const auto years = panel.years();
  const int start = years.front();
  const int last = years.back();
  if (first_end < start || first_end > last) {
    fail(ErrorKind::parameter, "first window end " + std::to_string(first_end) +
                                   " is outside the panel years " + std::to_string(start) +
                                   "-" + std::to_string(last));
  }
  const auto windows = static_cast<std::size_t>(last - first_end + 1);
  std::vector<std::vector<WindowRow>> per_window(windows);

  EstimateOptions inner = options;
  inner.threads = 1;
  parallel_for(windows, options.threads, [&](std::size_t w) {
    const int end = first_end + static_cast<int>(w);
    const LoadResult window = restrict_years(panel, start, end);
    for (const Method method : methods) {
      EstimateOptions o = inner;
      o.method = method;
      EstimateReport report;
      try {
        report = estimate_panel(window.panel, o);
      } catch (const Error& e) {
        fail(e.kind(), "window " + std::to_string(start) + "-" + std::to_string(end) + ", " +
                           std::string(to_string(method)) + ": " + e.what());
      }
      const std::string name(to_string(method));
      per_window[w].push_back(
          {end, name, "beta", report.beta_hat, report.ci_beta.lo, report.ci_beta.hi});
      for (std::size_t j = 0; j < report.gamma_hat.size(); ++j) {
        const ConfidenceInterval ci = j < report.ci_gamma.size()
                                          ? report.ci_gamma[j]
                                          : ConfidenceInterval{report.gamma_hat[j],
                                                               report.gamma_hat[j]};
        per_window[w].push_back(
            {end, name, report.gamma_names[j], report.gamma_hat[j], ci.lo, ci.hi});
      }
    }
  });

  WindowResult result;
  result.start_year = start;
  for (auto& rows : per_window) {
    for (auto& row : rows) result.rows.push_back(std::move(row));
  }
  return result;
}

void write_window_csv(std::ostream& out, const WindowResult& result) {
  out << "end_year,method,coef,estimate,lo,hi\n";
  for (const auto& r : result.rows) {
    out << r.end_year << ',' << r.method << ',' << r.coef << ',' << text::format(r.estimate)
        << ',' << text::format(r.lo) << ',' << text::format(r.hi) << '\n';
  }
}

}  // namespace eivdc
