#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "chainsync/chainsync.hpp"

namespace chainsync::cli {
namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitToleranceBreach = 2;

struct CommonOpts {
  std::string config_path;
  std::uint64_t seed = 1;
  long executions = 100000;
  std::string engine = "analytic";
  std::string timing = "expected";
  std::string out = "-";
  double tolerance = 0.02;
};

void add_common_options(CLI::App* sub, CommonOpts& o) {
  sub->add_option("--config", o.config_path, "model configuration file");
  sub->add_option("--seed", o.seed, "random seed");
  sub->add_option("--executions", o.executions, "simulated protocol executions");
  sub->add_option("--engine", o.engine, "analytic | simulate | both")
      ->check(CLI::IsMember({"analytic", "simulate", "both"}));
  sub->add_option("--timing", o.timing, "expected | stochastic")
      ->check(CLI::IsMember({"expected", "stochastic"}));
  sub->add_option("--out", o.out, "output CSV path ('-' for stdout)");
  sub->add_option("--tolerance", o.tolerance, "max allowed kernel discrepancy");
}

// Reference setup used when no --config is given: Ethereum-style blockchain
// defaults on the techB link with a 20% / 60 s duty cycle.
ModelConfig default_config() {
  ModelConfig cfg;
  cfg.link = table_presets("techB");
  cfg.device.p_s = 0.2;
  cfg.device.t_s = 60.0;
  return cfg;
}

ModelConfig load_config(const std::string& path) {
  return path.empty() ? validate_config(default_config()) : parse_config_file(path);
}

TimingMode timing_mode(const std::string& name) {
  return name == "stochastic" ? TimingMode::Stochastic : TimingMode::Expected;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::string trimmed = detail::trim(item);
    if (trimmed.empty()) continue;
    std::size_t used = 0;
    const double v = std::stod(trimmed, &used);
    if (used != trimmed.size())
      throw config_error("malformed number in list: '" + trimmed + "'");
    values.push_back(v);
  }
  return values;
}

void write_output(const std::string& out, const std::string& content) {
  if (out == "-") {
    std::cout << content;
    return;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw config_error("cannot open output file: " + out);
  f << content;
}

// -- validate ---------------------------------------------------------------

int cmd_validate(const CommonOpts& o) {
  const ModelConfig cfg = load_config(o.config_path);
  if (o.executions < 2)
    throw config_error("insufficient transitions: --executions must be >= 2");
  const TransitionKernel kernel = build_kernel(cfg);
  const SimTrace trace =
      run_simulation(cfg, o.seed, o.executions, timing_mode(o.timing));
  const EmpiricalKernel emp = empirical_kernel(trace, cfg.n_max);

  std::ostringstream csv;
  csv << "n,m,analytic,empirical,visits\n";
  double max_discrepancy = 0.0;
  for (int n = 0; n <= cfg.n_max; ++n) {
    if (emp.visits[n] == 0) continue;  // unobserved rows are omitted
    for (int m = 0; m <= cfg.n_max; ++m) {
      csv << n << ',' << m << ',' << csv_double(kernel.at(n, m)) << ','
          << csv_double(emp.at(n, m)) << ',' << emp.visits[n] << '\n';
      if (emp.visits[n] >= 1000)
        max_discrepancy =
            std::max(max_discrepancy, std::abs(kernel.at(n, m) - emp.at(n, m)));
    }
  }
  write_output(o.out, csv.str());
  std::cout << "max discrepancy over rows with >= 1000 visits: "
            << csv_double(max_discrepancy) << "\n";
  if (max_discrepancy > o.tolerance) {
    std::cout << "tolerance " << csv_double(o.tolerance) << " exceeded\n";
    return kExitToleranceBreach;
  }
  return kExitOk;
}

// -- sweep --------------------------------------------------------------

double analytic_metric(const std::string& metric, const ModelConfig& cfg) {
  const TransitionKernel kernel = build_kernel(cfg);
  if (metric == "p_sync") return prob_stay_synced(kernel);
  const StationaryDistribution dist = stationary(kernel);
  if (metric == "idle_time") return mean_idle_time(dist, cfg);
  return expected_dl_per_execution(kernel, dist, cfg);
}

double simulated_metric(const std::string& metric, const ModelConfig& cfg,
                        const CommonOpts& o) {
  const SimTrace trace =
      run_simulation(cfg, o.seed, o.executions, timing_mode(o.timing));
  if (metric == "p_sync") return empirical_kernel(trace, cfg.n_max).at(0, 0);
  if (metric == "idle_time") return mean_idle_per_execution(trace);
  return trace_data_usage(trace).dl_bits;
}

int cmd_sweep(const CommonOpts& o, const std::string& param, bool values_given,
              const std::string& values_text, const std::string& metric) {
  static const std::map<std::string, std::vector<double>> kDefaultGrids = {
      {"device.t_s", {0.0, 30.0, 60.0, 300.0, 900.0, 1800.0}},
      {"link.p_e_dl", {0.0, 0.1, 0.3}},
      {"blockchain.l_b", {40e3, 400e3, 4000e3}},
      {"blockchain.lambda_b", {1.0 / 60.0, 1.0 / 12.0, 1.0 / 3.0}},
  };
  std::vector<double> values;
  if (values_given) {
    values = parse_double_list(values_text);
    if (values.empty()) throw config_error("empty value list");
  } else {
    const auto it = kDefaultGrids.find(param);
    if (it == kDefaultGrids.end())
      throw config_error("no default value grid for parameter '" + param +
                         "'; pass --values");
    values = it->second;
  }
  const ModelConfig base = load_config(o.config_path);
  const bool use_analytic = o.engine != "simulate";
  const bool use_simulate = o.engine != "analytic";

  std::ostringstream csv;
  csv << "param,value";
  if (use_analytic) csv << ",analytic_" << metric;
  if (use_simulate) csv << ",simulated_" << metric;
  csv << '\n';

  std::vector<double> flag_column;
  for (const double v : values) {
    ModelConfig cfg = base;
    set_parameter(cfg, param, v);
    cfg = validate_config(cfg);
    csv << param << ',' << csv_double(v);
    if (use_analytic) {
      const double m = analytic_metric(metric, cfg);
      csv << ',' << csv_double(m);
      flag_column.push_back(m);
    }
    if (use_simulate) {
      const double m = simulated_metric(metric, cfg, o);
      csv << ',' << csv_double(m);
      if (!use_analytic) flag_column.push_back(m);
    }
    csv << '\n';
  }
  write_output(o.out, csv.str());

  if (metric == "p_sync" && kDefaultGrids.count(param) != 0) {
    const bool monotone = std::is_sorted(flag_column.rbegin(), flag_column.rend());
    std::cout << "# p_sync monotone non-increasing in " << param << ": "
              << (monotone ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

// -- data-usage ---------------------------------------------------------

bool equal_except_protocol(const ModelConfig& a, const ModelConfig& b) {
  const auto& x = a.blockchain;
  const auto& y = b.blockchain;
  const auto& u = a.link;
  const auto& v = b.link;
  return x.lambda_b == y.lambda_b && x.l_b == y.l_b && x.l_h == y.l_h &&
         x.l_n == y.l_n && x.l_r == y.l_r && x.l_i == y.l_i && x.l_poi == y.l_poi &&
         x.p_m == y.p_m && u.rate_ul_bps == v.rate_ul_bps &&
         u.rate_dl_bps == v.rate_dl_bps && u.p_e_ul == v.p_e_ul &&
         u.p_e_dl == v.p_e_dl && u.t_c == v.t_c && u.t_w == v.t_w &&
         u.n_peers == v.n_peers && a.device.p_s == b.device.p_s &&
         a.device.t_s == b.device.t_s && a.n_max == b.n_max &&
         a.eps_trunc == b.eps_trunc;
}

int cmd_data_usage(const CommonOpts& o, const std::string& cfg_p1_path,
                   const std::string& cfg_p2_path, std::vector<double> pm_values) {
  if (cfg_p1_path.empty() != cfg_p2_path.empty())
    throw config_error("pass both --config-p1 and --config-p2, or neither");
  ModelConfig cfg_p1;
  ModelConfig cfg_p2;
  if (!cfg_p1_path.empty()) {
    cfg_p1 = parse_config_file(cfg_p1_path);
    cfg_p2 = parse_config_file(cfg_p2_path);
    if (cfg_p1.device.protocol != Protocol::P1 ||
        cfg_p2.device.protocol != Protocol::P2)
      throw config_error("--config-p1 must select P1 and --config-p2 must select P2");
    if (!equal_except_protocol(cfg_p1, cfg_p2))
      throw config_error("mismatched non-protocol fields between P1 and P2 configs");
  } else {
    cfg_p1 = load_config(o.config_path);
    cfg_p2 = cfg_p1;
    cfg_p1.device.protocol = Protocol::P1;
    cfg_p2.device.protocol = Protocol::P2;
  }
  if (pm_values.empty())
    pm_values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};

  const bool use_analytic = o.engine != "simulate";
  const bool use_simulate = o.engine != "analytic";
  std::ostringstream csv;
  csv << "p_m";
  if (use_analytic) csv << ",ul_p1,dl_p1,ul_p2,dl_p2,dl_ratio";
  if (use_simulate) csv << ",sim_ul_p1,sim_dl_p1,sim_ul_p2,sim_dl_p2,sim_dl_ratio";
  csv << '\n';

  for (const double pm : pm_values) {
    ModelConfig c1 = cfg_p1;
    ModelConfig c2 = cfg_p2;
    c1.blockchain.p_m = pm;
    c2.blockchain.p_m = pm;
    c1 = validate_config(c1);
    c2 = validate_config(c2);
    csv << csv_double(pm);
    if (use_analytic) {
      // Canonical synchronized execution: one triggering block, event
      // transfer weighted by its match probability.
      const DataUsage p1 =
          execution_data_usage({Protocol::P1, 0, false, false}, c1);
      const DataUsage hit = execution_data_usage({Protocol::P2, 0, false, true}, c2);
      const DataUsage miss =
          execution_data_usage({Protocol::P2, 0, false, false}, c2);
      const DataUsage p2{miss.ul_bits,
                         pm * hit.dl_bits + (1.0 - pm) * miss.dl_bits};
      csv << ',' << csv_double(p1.ul_bits) << ',' << csv_double(p1.dl_bits) << ','
          << csv_double(p2.ul_bits) << ',' << csv_double(p2.dl_bits) << ','
          << csv_double(p2.dl_bits / p1.dl_bits);
    }
    if (use_simulate) {
      const TimingMode mode = timing_mode(o.timing);
      const DataUsage p1 =
          trace_data_usage(run_simulation(c1, o.seed, o.executions, mode));
      const DataUsage p2 =
          trace_data_usage(run_simulation(c2, o.seed, o.executions, mode));
      csv << ',' << csv_double(p1.ul_bits) << ',' << csv_double(p1.dl_bits) << ','
          << csv_double(p2.ul_bits) << ',' << csv_double(p2.dl_bits) << ','
          << csv_double(p2.dl_bits / p1.dl_bits);
    }
    csv << '\n';
  }
  write_output(o.out, csv.str());
  return kExitOk;
}

// -- fractions ----------------------------------------------------------

int cmd_fractions(const CommonOpts& o, std::vector<double> ts_values) {
  if (ts_values.empty()) ts_values = {10.0, 60.0, 600.0};
  const ModelConfig base = load_config(o.config_path);
  std::ostringstream csv;
  csv << "t_s,idle_frac,sleep_frac,exec_frac,analytic_idle_s,sim_idle_s\n";
  for (const double ts : ts_values) {
    ModelConfig cfg = base;
    cfg.device.t_s = ts;
    cfg = validate_config(cfg);
    const SimTrace trace =
        run_simulation(cfg, o.seed, o.executions, timing_mode(o.timing));
    const TimeFractions fr = time_fractions(trace);
    const TransitionKernel kernel = build_kernel(cfg);
    const double analytic_idle = mean_idle_time(stationary(kernel), cfg);
    csv << csv_double(ts) << ',' << csv_double(fr.idle) << ','
        << csv_double(fr.sleep) << ',' << csv_double(fr.exec) << ','
        << csv_double(analytic_idle) << ','
        << csv_double(mean_idle_per_execution(trace)) << '\n';
  }
  write_output(o.out, csv.str());
  return kExitOk;
}

}  // namespace

int run(std::vector<std::string> args) {
  CLI::App app{"Blockchain synchronization traffic model for IoT devices"};
  app.require_subcommand(1);

  CommonOpts validate_opts;
  CLI::App* validate =
      app.add_subcommand("validate", "compare analytic and simulated kernels");
  add_common_options(validate, validate_opts);

  CommonOpts sweep_opts;
  std::string sweep_param = "device.t_s";
  std::string sweep_values_text;
  std::string sweep_metric = "p_sync";
  CLI::App* sweep = app.add_subcommand("sweep", "sweep one parameter and emit a metric");
  add_common_options(sweep, sweep_opts);
  sweep->add_option("--param", sweep_param,
                    "dotted parameter path, e.g. device.t_s or link.p_e_dl");
  sweep->add_option("--values", sweep_values_text, "comma-separated value list");
  sweep->add_option("--metric", sweep_metric, "p_sync | idle_time | dl_per_exec")
      ->check(CLI::IsMember({"p_sync", "idle_time", "dl_per_exec"}));

  CommonOpts usage_opts;
  std::string cfg_p1_path;
  std::string cfg_p2_path;
  std::string pm_values_text;
  CLI::App* usage =
      app.add_subcommand("data-usage", "per-execution traffic of P1 vs P2");
  add_common_options(usage, usage_opts);
  usage->add_option("--config-p1", cfg_p1_path, "P1 configuration file");
  usage->add_option("--config-p2", cfg_p2_path, "P2 configuration file");
  usage->add_option("--pm-values", pm_values_text,
                    "comma-separated event-match probabilities");

  CommonOpts fractions_opts;
  std::string ts_values_text;
  CLI::App* fractions =
      app.add_subcommand("fractions", "time spent idle / sleeping / executing");
  add_common_options(fractions, fractions_opts);
  fractions->add_option("--ts-values", ts_values_text,
                        "comma-separated sleep durations, seconds");

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  try {
    if (app.got_subcommand(validate)) return cmd_validate(validate_opts);
    if (app.got_subcommand(sweep))
      return cmd_sweep(sweep_opts, sweep_param, sweep->count("--values") > 0,
                       sweep_values_text, sweep_metric);
    if (app.got_subcommand(usage))
      return cmd_data_usage(usage_opts, cfg_p1_path, cfg_p2_path,
                            parse_double_list(pm_values_text));
    if (app.got_subcommand(fractions))
      return cmd_fractions(fractions_opts, parse_double_list(ts_values_text));
  } catch (const config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfigError;
  }
  return kExitConfigError;
}

}  // namespace chainsync::cli
