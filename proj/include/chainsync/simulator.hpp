#pragma once

#include <cstdint>
#include <deque>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "chainsync/csv.hpp"
#include "chainsync/params.hpp"
#include "chainsync/rng.hpp"
#include "chainsync/timing.hpp"

namespace chainsync {

enum class DeviceState { Idle, Executing, Sleeping };

enum class TimingMode { Expected, Stochastic };

/// Seconds accumulated in each device state over a simulation run. The
/// three buckets are the primary clock: the current simulation time is
/// always their exact sum, so the sojourn accounting balances by
/// construction.
struct StateSojourns {
  double idle_s = 0.0;
  double sleep_s = 0.0;
  double exec_s = 0.0;

  double total() const { return idle_s + sleep_s + exec_s; }
  double of(DeviceState s) const {
    switch (s) {
      case DeviceState::Idle: return idle_s;
      case DeviceState::Sleeping: return sleep_s;
      case DeviceState::Executing: return exec_s;
    }
    return 0.0;
  }
};

/// One completed protocol execution. n_before counts the catch-up backlog at
/// the start (0 for a notification-triggered synchronized execution, whose
/// trigger block is downloaded but not part of the backlog); x_k is the lag
/// sampled at the end, i.e. the blocks created while the execution ran.
struct ExecutionRecord {
  long k = 0;
  double t_start = 0.0;
  double t_end = 0.0;
  int n_before = 0;
  long x_k = 0;
  bool waking = false;
  bool matched = false;
  double duration = 0.0;
  DataUsage data;
};

struct SimTrace {
  std::vector<ExecutionRecord> records;
  StateSojourns sojourns;
  std::uint64_t seed = 0;
  ModelConfig config;
  long warmup = 100;  // records to skip in occupancy-style estimates
};

/// Runs the device/blockchain interaction for exactly num_executions
/// protocol executions.
///
/// Blocks arrive as a Poisson process; each block carries an independent
/// event-match flag. After every execution the device sleeps with
/// probability p_s (waking always runs a catch-up execution, even with
/// nothing to fetch, since the device must query to learn that); otherwise a
/// positive lag starts the next catch-up immediately and a zero lag leaves
/// the device idle until the next block notification.
///
/// Four decoupled random streams (arrivals, sleep decisions, event matches,
/// link sampling) make traces reproducible and comparable across protocols
/// and timing modes for a fixed seed.
inline SimTrace run_simulation(const ModelConfig& raw_cfg, std::uint64_t seed,
                               long num_executions,
                               TimingMode mode = TimingMode::Expected,
                               const PacketizationPolicy& policy = {}) {
  const ModelConfig cfg = validate_config(raw_cfg);
  if (num_executions < 1)
    throw std::invalid_argument("num_executions must be >= 1");

  const double lambda = cfg.blockchain.lambda_b;
  const Protocol proto = cfg.device.protocol;
  RngStream arrival_rng(seed, 0);
  RngStream sleep_rng(seed, 1);
  RngStream match_rng(seed, 2);
  RngStream link_rng(seed, 3);

  SimTrace trace;
  trace.seed = seed;
  trace.config = cfg;
  trace.records.reserve(static_cast<std::size_t>(num_executions));
  StateSojourns& so = trace.sojourns;
  auto now = [&so] { return so.total(); };

  double next_arrival = arrival_rng.exponential(lambda);
  std::deque<bool> pending;  // match flags of blocks not yet downloaded
  auto advance_to = [&](double t) {
    long created = 0;
    while (next_arrival <= t) {
      pending.push_back(match_rng.bernoulli(cfg.blockchain.p_m));
      next_arrival += arrival_rng.exponential(lambda);
      ++created;
    }
    return created;
  };

  for (long k = 0; k < num_executions; ++k) {
    // Sleep decisions happen after an execution; the run starts awake.
    const bool sleeps = k > 0 && sleep_rng.bernoulli(cfg.device.p_s);
    ExecutionScenario sc;
    sc.protocol = proto;
    if (sleeps) {
      const double wake_at = now() + cfg.device.t_s;
      const long q = advance_to(wake_at);
      so.sleep_s += cfg.device.t_s;
      bool any_match = false;
      for (std::size_t i = pending.size() - static_cast<std::size_t>(q);
           i < pending.size(); ++i)
        any_match = any_match || pending[i];
      sc.missing_blocks = static_cast<int>(pending.size());
      sc.waking = true;
      sc.matched = proto == Protocol::P2 && any_match;
    } else if (!pending.empty()) {
      sc.missing_blocks = static_cast<int>(pending.size());
    } else {
      // Idle until the next block arrival triggers an execution.
      so.idle_s += next_arrival - now();
      advance_to(next_arrival);
      sc.missing_blocks = 0;
      sc.matched = proto == Protocol::P2 && pending.front();
    }

    const double t_start = now();
    const double duration =
        mode == TimingMode::Expected
            ? scenario_duration(sc, cfg)
            : sample_scenario_duration(sc, cfg, policy, link_rng);
    pending.clear();  // everything known at the start gets downloaded
    so.exec_s += duration;
    advance_to(now());

    ExecutionRecord rec;
    rec.k = k;
    rec.t_start = t_start;
    rec.t_end = now();
    rec.n_before = sc.missing_blocks;
    rec.x_k = static_cast<long>(pending.size());
    rec.waking = sc.waking;
    rec.matched = sc.matched;
    rec.duration = duration;
    rec.data = execution_data_usage(sc, cfg);
    trace.records.push_back(rec);
  }
  return trace;
}

/// Transition-count estimate of the kernel from consecutive record pairs,
/// with lags clamped to n_max to mirror the analytic saturation. Rows with
/// zero visits stay all-zero.
struct EmpiricalKernel {
  std::vector<double> p;      // (n_max+1) x (n_max+1), row-major
  std::vector<long> visits;   // transitions observed out of each state
  int n_max = 0;

  double at(int n, int m) const {
    return p[static_cast<std::size_t>(n) * (n_max + 1) + m];
  }
};

inline EmpiricalKernel empirical_kernel(const SimTrace& trace, int n_max) {
  if (trace.records.size() < 2)
    throw std::invalid_argument("empirical_kernel: need at least 2 records");
  const int size = n_max + 1;
  EmpiricalKernel est;
  est.n_max = n_max;
  est.p.assign(static_cast<std::size_t>(size) * size, 0.0);
  est.visits.assign(size, 0);
  auto clamp = [n_max](long x) {
    return static_cast<int>(x < n_max ? x : n_max);
  };
  for (std::size_t i = 0; i + 1 < trace.records.size(); ++i) {
    const int n = clamp(trace.records[i].x_k);
    const int m = clamp(trace.records[i + 1].x_k);
    est.p[static_cast<std::size_t>(n) * size + m] += 1.0;
    ++est.visits[n];
  }
  for (int n = 0; n < size; ++n) {
    if (est.visits[n] == 0) continue;
    for (int m = 0; m < size; ++m)
      est.p[static_cast<std::size_t>(n) * size + m] /= static_cast<double>(est.visits[n]);
  }
  return est;
}

struct TimeFractions {
  double idle = 0.0;
  double sleep = 0.0;
  double exec = 0.0;
};

/// Fraction of the simulated timeline spent in each state; sums to 1.
inline TimeFractions time_fractions(const SimTrace& trace) {
  if (trace.records.empty())
    throw std::invalid_argument("time_fractions: empty trace");
  const double total = trace.sojourns.total();
  return TimeFractions{trace.sojourns.of(DeviceState::Idle) / total,
                       trace.sojourns.of(DeviceState::Sleeping) / total,
                       trace.sojourns.of(DeviceState::Executing) / total};
}

/// Mean uplink/downlink bits per execution over the whole trace.
inline DataUsage trace_data_usage(const SimTrace& trace) {
  if (trace.records.empty())
    throw std::invalid_argument("trace_data_usage: empty trace");
  DataUsage mean;
  for (const auto& rec : trace.records) {
    mean.ul_bits += rec.data.ul_bits;
    mean.dl_bits += rec.data.dl_bits;
  }
  mean.ul_bits /= static_cast<double>(trace.records.size());
  mean.dl_bits /= static_cast<double>(trace.records.size());
  return mean;
}

/// Mean idle seconds preceding an execution, skipping the warm-up records
/// (occupancy estimates are biased by the synchronized start). The gap
/// before a waking execution is sleep, not idle.
inline double mean_idle_per_execution(const SimTrace& trace) {
  if (trace.records.empty())
    throw std::invalid_argument("mean_idle_per_execution: empty trace");
  const long n = static_cast<long>(trace.records.size());
  const long skip = n > 2 * trace.warmup ? trace.warmup : 0;
  double idle = 0.0;
  long count = 0;
  for (long k = skip; k < n; ++k) {
    const double prev_end = k == 0 ? 0.0 : trace.records[k - 1].t_end;
    double gap = trace.records[k].t_start - prev_end;
    if (trace.records[k].waking) gap -= trace.config.device.t_s;
    idle += gap;
    ++count;
  }
  return idle / static_cast<double>(count);
}

inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
  os << "k,t_start,t_end,n_before,x_k,waking,matched,ul_bits,dl_bits\n";
  for (const auto& rec : trace.records) {
    os << rec.k << ',' << csv_double(rec.t_start) << ',' << csv_double(rec.t_end)
       << ',' << rec.n_before << ',' << rec.x_k << ',' << (rec.waking ? 1 : 0)
       << ',' << (rec.matched ? 1 : 0) << ',' << csv_double(rec.data.ul_bits)
       << ',' << csv_double(rec.data.dl_bits) << '\n';
  }
}

}  // namespace chainsync
