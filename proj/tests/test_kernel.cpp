#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <vector>

#include "chainsync/kernel.hpp"
#include "chainsync/params.hpp"
#include "support/oracles.hpp"

using namespace chainsync;

namespace {

ModelConfig make_config(const char* preset, Protocol proto, double p_s, double t_s,
                        double p_m = 0.0) {
  ModelConfig cfg;
  cfg.link = table_presets(preset);
  cfg.device.protocol = proto;
  cfg.device.p_s = p_s;
  cfg.device.t_s = t_s;
  cfg.blockchain.p_m = p_m;
  return validate_config(cfg);
}

double row_sum(const std::vector<double>& row) {
  double s = 0.0;
  for (double v : row) s += v;
  return s;
}

}  // namespace

TEST_CASE("poisson pmf") {
  CHECK(poisson_pmf(0, 0.0) == 1.0);
  CHECK(poisson_pmf(3, 0.0) == 0.0);
  CHECK(poisson_pmf(0, 0.5416 / 12.0) ==
        Catch::Approx(0.9558700239995666).epsilon(1e-12));
  CHECK(poisson_pmf(2, 5.0) == Catch::Approx(0.08422433748856833).epsilon(1e-12));
  CHECK_THROWS_AS(poisson_pmf(-1, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(poisson_pmf(1, -1.0), std::invalid_argument);

  // large arguments stay finite and normalized
  double sum = 0.0;
  for (int m = 0; m < 2000; ++m) sum += poisson_pmf(m, 900.0);
  CHECK(sum == Catch::Approx(1.0).epsilon(1e-9));
  CHECK(std::isfinite(poisson_pmf(500, 500.0)));
}

TEST_CASE("awake row of the full-node kernel") {
  const ModelConfig cfg = make_config("techA", Protocol::P1, 0.2, 60.0);
  const auto row0 = awake_kernel_row_p1(0, cfg, 64);
  CHECK(row0[0] == Catch::Approx(0.9558700239995666).epsilon(1e-9));
  CHECK(row_sum(row0) == Catch::Approx(1.0).epsilon(1e-12));

  const auto row1 = awake_kernel_row_p1(1, cfg, 64);
  CHECK(row1[0] == Catch::Approx(std::exp(-0.0504 / 12.0)).epsilon(1e-12));

  ModelConfig slow = cfg;
  slow.blockchain.lambda_b = 1e-12;
  const auto quiet = awake_kernel_row_p1(0, slow, 16);
  CHECK(quiet[0] == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("sleep row marginalizes the blocks accumulated while sleeping") {
  const ModelConfig cfg = make_config("techA", Protocol::P1, 0.2, 60.0);
  const auto row0 = sleep_kernel_row_p1(0, cfg, 64);
  CHECK(row0[0] == Catch::Approx(0.9744920484117472).epsilon(1e-9));
  // probability conservation up to the truncated arrival tail
  CHECK(row_sum(row0) >= 1.0 - 1e-12);
  CHECK(row_sum(row0) <= 1.0 + 1e-12);

  ModelConfig no_sleep = cfg;
  no_sleep.device.t_s = 0.0;
  for (int n : {0, 2, 5}) {
    const auto row = sleep_kernel_row_p1(n, no_sleep, 32);
    const double wake_mean =
        no_sleep.blockchain.lambda_b * p1_catchup_duration(n, no_sleep, true);
    for (int m = 0; m < 32; ++m)
      CHECK(row[m] == Catch::Approx(poisson_pmf(m, wake_mean)).margin(1e-15));
  }
}

TEST_CASE("sleep series matches its closed-form collapse") {
  // sum_q Poisson(q; a) exp(-lambda (c + b q)) = exp(-lambda c) exp(a (exp(-lambda b) - 1))
  for (const char* preset : {"techA", "techB"}) {
    for (double t_s : {10.0, 60.0, 600.0}) {
      const ModelConfig cfg = make_config(preset, Protocol::P1, 0.5, t_s);
      const double lambda = cfg.blockchain.lambda_b;
      const double a = lambda * t_s;
      const double b = cfg.blockchain.l_b /
                       effective_goodput(cfg.link.rate_dl_bps, cfg.link.p_e_dl);
      for (int n : {0, 1, 4}) {
        const double c = p1_catchup_duration(n, cfg, true);
        const double closed = std::exp(-lambda * c) * std::exp(a * (std::exp(-lambda * b) - 1.0));
        const auto row = sleep_kernel_row_p1(n, cfg, 64);
        CHECK(row[0] == Catch::Approx(closed).margin(1e-12));
      }
    }
  }
}

TEST_CASE("full-node kernel mixes awake and sleep rows") {
  const ModelConfig cfg = make_config("techA", Protocol::P1, 0.2, 60.0);
  const TransitionKernel kernel = kernel_p1(cfg, 64);
  CHECK(kernel.at(0, 0) == Catch::Approx(0.9595944288820026).epsilon(1e-9));
  CHECK(kernel.truncation_mass <= cfg.eps_trunc);
  for (int n = 0; n <= kernel.n_max; ++n) {
    double sum = 0.0;
    for (int m = 0; m <= kernel.n_max; ++m) {
      const double v = kernel.at(n, m);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      sum += v;
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }

  const ModelConfig awake_only = make_config("techA", Protocol::P1, 0.0, 60.0);
  const TransitionKernel k0 = kernel_p1(awake_only, 16);
  for (int n = 0; n <= 16; ++n) {
    const auto row = awake_kernel_row_p1(n, awake_only, 16);
    for (int m = 0; m <= 16; ++m)
      CHECK(k0.at(n, m) == Catch::Approx(row[m]).margin(1e-15));
  }
}

TEST_CASE("light-node kernel with no matching events degenerates to headers-only") {
  struct Case { const char* preset; double t_s; };
  for (const Case c : {Case{"techA", 60.0}, Case{"techB", 60.0}, Case{"techB", 600.0}}) {
    const ModelConfig p2_cfg = make_config(c.preset, Protocol::P2, 0.2, c.t_s, 0.0);
    ModelConfig p1_cfg = make_config(c.preset, Protocol::P1, 0.2, c.t_s);
    p1_cfg.blockchain.l_b = p1_cfg.blockchain.l_h;  // headers in place of blocks
    const TransitionKernel a = kernel_p2(p2_cfg, 24);
    const TransitionKernel b = kernel_p1(p1_cfg, 24);
    for (int n = 0; n <= 24; ++n) {
      for (int m = 0; m <= 24; ++m)
        CHECK(a.at(n, m) == Catch::Approx(b.at(n, m)).margin(1e-12));
    }
  }
}

TEST_CASE("light-node synchronized row mixes over the trigger event") {
  const ModelConfig cfg = make_config("techA", Protocol::P2, 0.0, 0.0, 0.5);
  const TransitionKernel kernel = kernel_p2(cfg, 32);
  CHECK(kernel.at(0, 0) == Catch::Approx(0.9588963150233163).epsilon(1e-9));
  for (int n = 0; n <= 32; ++n) {
    double sum = 0.0;
    for (int m = 0; m <= 32; ++m) sum += kernel.at(n, m);
    CHECK(sum == Catch::Approx(1.0).margin(1e-12));
  }
}

TEST_CASE("kernels match a direct-summation oracle") {
  const int n_max = 3;
  for (const char* preset : {"techA", "techB"}) {
    for (Protocol proto : {Protocol::P1, Protocol::P2}) {
      const ModelConfig cfg = make_config(preset, proto, 0.2, 60.0, 0.3);
      const TransitionKernel kernel =
          proto == Protocol::P1 ? kernel_p1(cfg, n_max) : kernel_p2(cfg, n_max);
      for (int n = 0; n <= n_max; ++n) {
        const auto expected = oracle::kernel_row(cfg, proto, n, n_max);
        for (int m = 0; m <= n_max; ++m)
          CHECK(kernel.at(n, m) == Catch::Approx(expected[m]).margin(1e-9));
      }
    }
  }
}

TEST_CASE("stationary distribution of hand-solved chains") {
  TransitionKernel two_state;
  two_state.n_max = 1;
  two_state.protocol = Protocol::P1;
  two_state.p = {0.9, 0.1, 0.5, 0.5};
  const StationaryDistribution dist = stationary(two_state);
  CHECK(dist.pi[0] == Catch::Approx(5.0 / 6.0).margin(1e-12));
  CHECK(dist.pi[1] == Catch::Approx(1.0 / 6.0).margin(1e-12));
  CHECK(dist.residual <= 1e-10);

  TransitionKernel absorbing;
  absorbing.n_max = 3;
  absorbing.protocol = Protocol::P1;
  absorbing.p.assign(16, 0.0);
  for (int n = 0; n < 4; ++n) absorbing.p[static_cast<std::size_t>(n) * 4] = 1.0;
  const StationaryDistribution at_zero = stationary(absorbing);
  CHECK(at_zero.pi[0] == Catch::Approx(1.0).margin(1e-12));
  for (int n = 1; n < 4; ++n) CHECK(at_zero.pi[n] == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("stationary distributions of model kernels are valid fixed points") {
  for (const char* preset : {"techA", "techB"}) {
    for (Protocol proto : {Protocol::P1, Protocol::P2}) {
      for (double t_s : {0.0, 60.0, 600.0}) {
        const ModelConfig cfg = make_config(preset, proto, 0.2, t_s, 0.3);
        const TransitionKernel kernel = build_kernel(cfg);
        const StationaryDistribution dist = stationary(kernel);
        CHECK(dist.residual <= 1e-10);
        double sum = 0.0;
        for (double v : dist.pi) {
          CHECK(v >= 0.0);
          sum += v;
        }
        CHECK(sum == Catch::Approx(1.0).margin(1e-12));
      }
    }
  }
}

TEST_CASE("probability of staying synchronized falls with heavier load") {
  auto p_sync = [](const ModelConfig& cfg) { return prob_stay_synced(build_kernel(cfg)); };

  double last = 1.0;
  for (double t_s : {0.0, 60.0, 600.0, 1800.0}) {
    const double p = p_sync(make_config("techB", Protocol::P1, 0.2, t_s));
    CHECK(p <= last + 1e-15);
    last = p;
  }
  last = 1.0;
  for (double p_e : {0.0, 0.1, 0.3}) {
    ModelConfig cfg = make_config("techB", Protocol::P1, 0.2, 60.0);
    cfg.link.p_e_dl = p_e;
    const double p = p_sync(cfg);
    CHECK(p <= last + 1e-15);
    last = p;
  }
  last = 1.0;
  for (double l_b : {40e3, 400e3, 4000e3}) {
    ModelConfig cfg = make_config("techB", Protocol::P1, 0.2, 60.0);
    cfg.blockchain.l_b = l_b;
    const double p = p_sync(cfg);
    CHECK(p <= last + 1e-15);
    last = p;
  }
  last = 1.0;
  for (double lambda : {1.0 / 60.0, 1.0 / 12.0, 1.0 / 3.0}) {
    ModelConfig cfg = make_config("techB", Protocol::P1, 0.2, 60.0);
    cfg.blockchain.lambda_b = lambda;
    const double p = p_sync(cfg);
    CHECK(p <= last + 1e-15);
    last = p;
  }

  const ModelConfig quiet = [] {
    ModelConfig cfg;
    cfg.link = table_presets("techA");
    cfg.blockchain.lambda_b = 1e-9;
    return validate_config(cfg);
  }();
  CHECK(p_sync(quiet) == Catch::Approx(1.0).margin(1e-8));
}

TEST_CASE("mean idle time follows the stationary mass at zero") {
  ModelConfig cfg = make_config("techA", Protocol::P1, 0.0, 0.0);
  StationaryDistribution dist;
  dist.pi = {1.0};
  CHECK(mean_idle_time(dist, cfg) == Catch::Approx(12.0).epsilon(1e-12));

  cfg.device.p_s = 1.0;
  cfg.device.t_s = 60.0;
  CHECK(mean_idle_time(dist, cfg) == 0.0);

  cfg.device.p_s = 0.2;
  dist.pi = {0.9, 0.1};
  CHECK(mean_idle_time(dist, cfg) == Catch::Approx(8.64).epsilon(1e-12));
}

TEST_CASE("expected traffic per execution") {
  StationaryDistribution at_zero;
  at_zero.pi.assign(17, 0.0);
  at_zero.pi[0] = 1.0;

  const ModelConfig p1_cfg = make_config("techA", Protocol::P1, 0.0, 0.0);
  const TransitionKernel p1 = kernel_p1(p1_cfg, 16);
  CHECK(expected_dl_per_execution(p1, at_zero, p1_cfg) ==
        Catch::Approx(44800.0).epsilon(1e-12));

  const ModelConfig p2_cfg = make_config("techA", Protocol::P2, 0.0, 0.0, 0.0);
  const TransitionKernel p2 = kernel_p2(p2_cfg, 16);
  CHECK(expected_dl_per_execution(p2, at_zero, p2_cfg) ==
        Catch::Approx(5600.0).epsilon(1e-12));
  CHECK(44800.0 / 5600.0 == Catch::Approx(8.0).epsilon(1e-12));

  double last = 0.0;
  for (double p_m : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    const ModelConfig cfg = make_config("techA", Protocol::P2, 0.2, 60.0, p_m);
    const TransitionKernel kernel = kernel_p2(cfg, 16);
    const double dl = expected_dl_per_execution(kernel, stationary(kernel), cfg);
    CHECK(dl >= last - 1e-9);
    last = dl;
  }
}

TEST_CASE("expected traffic matches an explicit arrival-count summation") {
  const ModelConfig cfg = make_config("techB", Protocol::P2, 0.2, 60.0, 0.3);
  const TransitionKernel kernel = kernel_p2(cfg, 32);
  const StationaryDistribution dist = stationary(kernel);
  const DataUsage fast = expected_data_usage_per_execution(kernel, dist, cfg);

  // Same expectation, with the sleep contribution summed term by term.
  const auto& bc = cfg.blockchain;
  const double peers = cfg.link.n_peers;
  const double mean_q = bc.lambda_b * cfg.device.t_s;
  double ul = 0.0;
  double dl = 0.0;
  for (int n = 0; n <= kernel.n_max; ++n) {
    double awake_dl = n == 0 ? peers * bc.l_r + bc.l_h + bc.p_m * (bc.l_i + bc.l_poi)
                             : peers * bc.l_r + n * bc.l_h;
    double awake_ul = n == 0 ? bc.l_r : (peers + 1.0) * bc.l_n;
    double sleep_dl = 0.0;
    for (int q = 0; q < 400; ++q) {
      const double wq = oracle::poisson(q, mean_q);
      const double match = 1.0 - std::pow(1.0 - bc.p_m, q);
      sleep_dl += wq * (peers * bc.l_r + (n + q) * bc.l_h +
                        match * (bc.l_i + bc.l_poi));
    }
    const double sleep_ul = (peers + 1.0) * bc.l_n;
    ul += dist.pi[n] * (0.8 * awake_ul + 0.2 * sleep_ul);
    dl += dist.pi[n] * (0.8 * awake_dl + 0.2 * sleep_dl);
  }
  CHECK(fast.ul_bits == Catch::Approx(ul).epsilon(1e-9));
  CHECK(fast.dl_bits == Catch::Approx(dl).epsilon(1e-9));
}

TEST_CASE("kernel and stationary CSV exports") {
  const ModelConfig cfg = make_config("techA", Protocol::P1, 0.2, 60.0);
  const TransitionKernel kernel = kernel_p1(cfg, 4);
  std::ostringstream a;
  write_kernel_csv(a, kernel);
  std::ostringstream b;
  write_kernel_csv(b, kernel);
  const std::string kernel_csv = a.str();
  CHECK(kernel_csv == b.str());
  CHECK(kernel_csv.substr(0, 9) == "n,m,prob\n");
  CHECK(std::count(kernel_csv.begin(), kernel_csv.end(), '\n') == 1 + 5 * 5);

  std::ostringstream c;
  write_stationary_csv(c, stationary(kernel));
  const std::string pi_csv = c.str();
  CHECK(pi_csv.substr(0, 5) == "n,pi\n");
  CHECK(std::count(pi_csv.begin(), pi_csv.end(), '\n') == 1 + 5);
}
