// Command-line front end: simulate, estimate, mc, expand-window.

#include <CLI11.hpp>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "eivdc/data_model.hpp"
#include "eivdc/dgp.hpp"
#include "eivdc/errors.hpp"
#include "eivdc/experiments.hpp"

namespace {

using namespace eivdc;

struct SchemaFlags {
  CsvSchema schema;
  std::string input;
};

struct EstimateFlags {
  std::string method = "dc";
  int blocks_per_year = 1;
  bool fe = false;
  bool te = false;
  double alpha = 0.05;
  int bootstrap_draws = 399;
  std::string partition_mode = "random";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
};

struct DgpFlags {
  std::optional<int> n, periods, first_year;
  std::optional<double> beta, gamma, tau_sq, mu_y, sigma_y_sq;
};

std::map<std::string, std::string> read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::not_found, "cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      fail(ErrorKind::parse, path + ":" + std::to_string(line_no) + ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

// Applies config-file entries to options not given on the command line.
// Keys use the long flag name with '-' or '_'. Keys that match no flag are
// returned for the caller (DGP fields).
std::map<std::string, std::string> apply_config(CLI::App& app, const std::string& path) {
  std::map<std::string, std::string> rest;
  for (const auto& [key, value] : read_key_values(path)) {
    std::string flag = key;
    for (auto& c : flag) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = app.get_option_no_throw("--" + flag);
    if (opt == nullptr) {
      rest[key] = value;
      continue;
    }
    if (opt->count() > 0) continue;
    opt->add_result(value);
    opt->run_callback();
  }
  return rest;
}

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& seed) {
  if (seed) return *seed;
  std::random_device rd;
  const std::uint64_t generated = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  std::cerr << "seed: " << generated << " (pass --seed " << generated << " to replay)\n";
  return generated;
}

void add_schema_flags(CLI::App* cmd, SchemaFlags& s, bool with_input) {
  if (with_input) cmd->add_option("--input,-i", s.input, "Panel CSV file")->required();
  cmd->add_option("--firm-col", s.schema.firm, "Firm identifier column")->capture_default_str();
  cmd->add_option("--year-col", s.schema.year, "Year column")->capture_default_str();
  cmd->add_option("--y-col", s.schema.y, "Outcome column")->capture_default_str();
  cmd->add_option("--x-col", s.schema.x, "Mismeasured regressor column")->capture_default_str();
  cmd->add_option("--z-col", s.schema.z, "Control column (repeatable)");
}

void add_estimate_flags(CLI::App* cmd, EstimateFlags& f, bool with_method) {
  if (with_method) {
    cmd->add_option("--method", f.method, "ols, 3m or dc")->capture_default_str();
  }
  cmd->add_option("--blocks-per-year", f.blocks_per_year, "DC blocks per year")
      ->capture_default_str();
  cmd->add_flag("--fe", f.fe, "Firm fixed effects");
  cmd->add_flag("--te", f.te, "Time effects");
  cmd->add_option("--alpha", f.alpha, "1 - confidence level")->capture_default_str();
  cmd->add_option("--bootstrap-draws", f.bootstrap_draws, "Bootstrap draws")
      ->capture_default_str();
  cmd->add_option("--partition-mode", f.partition_mode, "random or adjacent")
      ->capture_default_str();
  cmd->add_option("--seed", f.seed, "Seed; generated and printed when omitted");
  cmd->add_option("--threads", f.threads, "Worker cap (0 = all cores)")->capture_default_str();
}

void add_dgp_flags(CLI::App* cmd, DgpFlags& d) {
  cmd->add_option("--firms", d.n, "Firms");
  cmd->add_option("--periods", d.periods, "Periods");
  cmd->add_option("--first-year", d.first_year, "Label of the first period");
  cmd->add_option("--beta", d.beta, "Slope on the latent regressor");
  cmd->add_option("--gamma", d.gamma, "Slope on the control");
  cmd->add_option("--tau-sq", d.tau_sq, "Reliability of the observed regressor");
  cmd->add_option("--mu-y", d.mu_y, "Outcome mean");
  cmd->add_option("--sigma-y-sq", d.sigma_y_sq, "Outcome variance");
}

void apply_dgp(DgpConfig& cfg, const DgpFlags& d, const std::map<std::string, std::string>& kv) {
  for (const auto& [key, value] : kv) {
    if (!cfg.set(key, value)) fail(ErrorKind::usage, "unknown config key '" + key + "'");
  }
  if (d.n) cfg.n = *d.n;
  if (d.periods) cfg.periods = *d.periods;
  if (d.first_year) cfg.first_year = *d.first_year;
  if (d.beta) cfg.beta = *d.beta;
  if (d.gamma) cfg.gamma = *d.gamma;
  if (d.tau_sq) cfg.tau_sq = *d.tau_sq;
  if (d.mu_y) cfg.mu_y = *d.mu_y;
  if (d.sigma_y_sq) cfg.sigma_y_sq = *d.sigma_y_sq;
}

EstimateOptions to_options(const EstimateFlags& f, std::uint64_t seed) {
  EstimateOptions o;
  o.method = parse_method(f.method);
  o.blocks_per_year = f.blocks_per_year;
  o.fe = f.fe;
  o.te = f.te;
  o.alpha = f.alpha;
  o.bootstrap_draws = f.bootstrap_draws;
  o.partition_mode = parse_partition_mode(f.partition_mode);
  o.seed = seed;
  o.threads = f.threads;
  return o;
}

LoadResult load(const SchemaFlags& s) {
  LoadResult result = load_panel_csv(s.input, s.schema);
  if (result.dropped_firms > 0) {
    std::cerr << "dropped " << result.dropped_firms << " single-year firm(s) ("
              << result.dropped_rows << " rows)\n";
  }
  return result;
}

void write_or_print(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) fail(ErrorKind::not_found, "cannot write " + path);
  out << content;
}

void print_report(const EstimateReport& r) {
  std::cout << "method: " << to_string(r.method) << "\n"
            << "observations: " << r.observations << " (" << r.firms << " firms, " << r.years
            << " years)\n"
            << "beta: " << r.beta_hat << "  [" << r.ci_beta.lo << ", " << r.ci_beta.hi << "] ("
            << to_string(r.ci_beta.method) << ", level " << r.ci_beta.level << ")\n";
  for (std::size_t j = 0; j < r.gamma_hat.size(); ++j) {
    std::cout << r.gamma_names[j] << ": " << r.gamma_hat[j];
    if (j < r.ci_gamma.size()) {
      std::cout << "  [" << r.ci_gamma[j].lo << ", " << r.ci_gamma[j].hi << "]";
    }
    std::cout << "\n";
  }
  if (r.method == Method::dc) {
    std::cout << "subsample estimates: " << r.subsample_estimates.size()
              << ", degenerate blocks: " << r.degenerate_blocks
              << ", discarded rows: " << r.discarded_rows
              << ", B/b: " << r.blocks_over_block_size << "\n";
  }
  std::cout << "seed: " << r.options.seed << "\n";
  for (const auto& w : r.warnings) std::cout << "warning: " << w << "\n";
}

std::vector<MethodSpec> parse_methods(const std::string& text, int default_blocks) {
  std::vector<MethodSpec> out;
  std::stringstream ss(text);
  for (std::string token; std::getline(ss, token, ',');) {
    if (token.empty()) continue;
    MethodSpec m;
    const auto colon = token.find(':');
    m.method = parse_method(token.substr(0, colon));
    m.blocks_per_year = default_blocks;
    if (colon != std::string::npos) {
      if (m.method != Method::dc) fail(ErrorKind::usage, "only dc takes a block count: " + token);
      m.blocks_per_year = std::stoi(token.substr(colon + 1));
    }
    out.push_back(m);
  }
  if (out.empty()) fail(ErrorKind::usage, "no methods given");
  return out;
}

std::vector<ModelSpec> parse_specs(const std::string& text) {
  std::vector<ModelSpec> out;
  std::stringstream ss(text);
  for (std::string token; std::getline(ss, token, ',');) {
    if (token.empty()) continue;
    out.push_back(ModelSpec::from_number(std::stoi(token)));
  }
  if (out.empty()) fail(ErrorKind::usage, "no model specs given");
  return out;
}

std::string guidance(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::near_singular_denominator:
      return "The third-moment estimator is not identified when the slope is near zero or the "
             "regressor is symmetric. Use --method dc, whose intervals remain valid there.";
    case ErrorKind::divisibility:
    case ErrorKind::too_many_blocks:
      return "Lower --blocks-per-year or use a larger sample.";
    case ErrorKind::calibration:
      return "Raise sigma_y_sq or lower beta/gamma so the outcome noise variance is positive.";
    default:
      return {};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Error-in-variables estimators: OLS, third-moment and divide-and-conquer"};
  app.require_subcommand(1);
  std::string config_path;

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Write a simulated panel as CSV");
  DgpFlags sim_dgp;
  std::optional<std::uint64_t> sim_seed;
  std::uint64_t sim_stream = 0;
  std::string sim_out;
  add_dgp_flags(simulate, sim_dgp);
  simulate->add_option("--seed", sim_seed, "Seed; generated and printed when omitted");
  simulate->add_option("--replication", sim_stream, "Replication index")->capture_default_str();
  simulate->add_option("--output,-o", sim_out, "Output CSV (default stdout)");

  // estimate
  auto* estimate = app.add_subcommand("estimate", "Estimate on a panel CSV");
  SchemaFlags est_schema;
  EstimateFlags est_flags;
  std::string est_format = "text";
  std::string est_json;
  add_schema_flags(estimate, est_schema, true);
  add_estimate_flags(estimate, est_flags, true);
  estimate->add_option("--format", est_format, "text or json")
      ->check(CLI::IsMember({"text", "json"}))
      ->capture_default_str();
  estimate->add_option("--json", est_json, "Also write the JSON report to this file");

  // mc
  auto* mc = app.add_subcommand("mc", "Monte Carlo study");
  DgpFlags mc_dgp;
  EstimateFlags mc_flags;
  int mc_reps = 500;
  std::string mc_methods = "ols,3m,dc";
  std::string mc_specs = "1";
  bool paper_scale = false;
  std::string mc_csv, mc_json;
  add_dgp_flags(mc, mc_dgp);
  add_estimate_flags(mc, mc_flags, false);
  mc->add_option("--reps", mc_reps, "Replications")->capture_default_str();
  mc->add_option("--methods", mc_methods, "Comma list of ols, 3m, dc or dc:K")
      ->capture_default_str();
  mc->add_option("--specs", mc_specs, "Comma list of model specs 1-4")->capture_default_str();
  mc->add_flag("--paper-scale", paper_scale, "n=3000, T=20, 20000 replications (hours)");
  mc->add_option("--csv", mc_csv, "Write the summary table as CSV");
  mc->add_option("--json", mc_json, "Write the summary as JSON");

  // expand-window
  auto* expand = app.add_subcommand("expand-window", "Expanding-window estimates");
  SchemaFlags win_schema;
  EstimateFlags win_flags;
  int first_end = 1980;
  std::string win_methods = "3m,dc";
  std::string win_out;
  add_schema_flags(expand, win_schema, true);
  add_estimate_flags(expand, win_flags, false);
  expand->add_option("--first-end", first_end, "End year of the first window")
      ->capture_default_str();
  expand->add_option("--methods", win_methods, "Comma list of ols, 3m, dc")
      ->capture_default_str();
  expand->add_option("--output,-o", win_out, "Output CSV (default stdout)");

  for (auto* cmd : {simulate, estimate, mc, expand}) {
    cmd->add_option("--config", config_path, "key=value file; command-line flags take precedence");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : exit_code(ErrorKind::usage);
  }

  const bool json_errors = estimate->parsed() && est_format == "json";
  try {
    CLI::App* active = app.get_subcommands().front();
    std::map<std::string, std::string> extra;
    if (!config_path.empty()) extra = apply_config(*active, config_path);

    if (active == simulate) {
      DgpConfig cfg;
      apply_dgp(cfg, sim_dgp, extra);
      if (!sim_seed && extra.count("seed") == 0) cfg.seed = resolve_seed(std::nullopt);
      if (sim_seed) cfg.seed = *sim_seed;
      const PanelData panel = generate_panel(cfg, sim_stream).to_panel();
      CsvSchema schema;
      schema.z = {"z"};
      std::ostringstream out;
      write_panel_csv(out, panel, schema);
      write_or_print(sim_out, out.str());
      return 0;
    }

    if (!extra.empty() && active != mc) {
      fail(ErrorKind::usage, "unknown config key '" + extra.begin()->first + "'");
    }

    if (active == estimate) {
      if (estimate->get_option("--blocks-per-year")->count() > 0 && est_flags.method != "dc") {
        fail(ErrorKind::usage, "--blocks-per-year requires --method dc");
      }
      const LoadResult data = load(est_schema);
      const EstimateOptions options = to_options(est_flags, resolve_seed(est_flags.seed));
      const EstimateReport report = estimate_panel(data.panel, options);
      const std::string json = report_json(report) + "\n";
      if (est_format == "json") {
        std::cout << json;
      } else {
        print_report(report);
      }
      if (!est_json.empty()) write_or_print(est_json, json);
      return 0;
    }

    if (active == mc) {
      McConfig cfg;
      if (paper_scale) {
        cfg.dgp.n = 3000;
        cfg.dgp.periods = 20;
        cfg.reps = 20000;
      } else {
        cfg.dgp.n = 500;
        cfg.dgp.periods = 5;
      }
      apply_dgp(cfg.dgp, mc_dgp, extra);
      if (mc->get_option("--reps")->count() > 0 || !paper_scale) cfg.reps = mc_reps;
      cfg.methods = parse_methods(mc_methods, mc_flags.blocks_per_year);
      cfg.specs = parse_specs(mc_specs);
      cfg.alpha = mc_flags.alpha;
      cfg.bootstrap_draws = mc_flags.bootstrap_draws;
      cfg.partition_mode = parse_partition_mode(mc_flags.partition_mode);
      cfg.seed = resolve_seed(mc_flags.seed);
      cfg.threads = mc_flags.threads;
      if (paper_scale) {
        std::cerr << "warning: paper-scale mode runs " << cfg.reps << " replications of n="
                  << cfg.dgp.n << ", T=" << cfg.dgp.periods << "; expect hours\n";
      }
      const McSummary summary = run_mc(cfg);
      write_summary_text(std::cout, summary);
      std::cout << "elapsed: " << summary.seconds << " s\n";
      if (paper_scale) {
        std::cout << "\nreference cells (n=3000, T=20, 20000 draws):\n";
        for (const auto& ref : reference_cells()) {
          if (ref.beta0 != cfg.dgp.beta) continue;
          if (summary.find(ref.method, ref.spec, ref.coef) == nullptr) continue;
          std::cout << ref.method << " spec " << ref.spec << " " << ref.coef
                    << ": mean " << ref.mean << ", sd " << ref.sd << ", coverage "
                    << ref.coverage << "\n";
        }
      }
      if (!mc_csv.empty()) {
        std::ostringstream out;
        write_summary_csv(out, summary);
        write_or_print(mc_csv, out.str());
      }
      if (!mc_json.empty()) write_or_print(mc_json, summary_json(summary) + "\n");
      return 0;
    }

    if (active == expand) {
      const LoadResult data = load(win_schema);
      std::vector<Method> methods;
      for (const auto& m : parse_methods(win_methods, win_flags.blocks_per_year)) {
        methods.push_back(m.method);
      }
      EstimateOptions options = to_options(win_flags, resolve_seed(win_flags.seed));
      const WindowResult result = expanding_window(data.panel, first_end, methods, options);
      std::ostringstream out;
      write_window_csv(out, result);
      write_or_print(win_out, out.str());
      return 0;
    }
  } catch (const Error& e) {
    const std::string kind(to_string(e.kind()));
    if (json_errors) {
      std::cout << nlohmann::json{{"error", kind}, {"message", e.what()}}.dump() << "\n";
    }
    std::cerr << "error [" << kind << "]: " << e.what() << "\n";
    const std::string hint = guidance(e.kind());
    if (!hint.empty()) std::cerr << hint << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error [usage]: " << e.what() << "\n";
    return exit_code(ErrorKind::usage);
  }
  return 0;
}
