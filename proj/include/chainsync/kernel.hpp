#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "chainsync/csv.hpp"
#include "chainsync/params.hpp"
#include "chainsync/timing.hpp"

namespace chainsync {

/// Row-stochastic transition matrix of the post-execution lag process,
/// truncated to states 0..n_max. Lag overflow saturates into state n_max;
/// the q-series over sleep-period arrivals is cut once its remaining tail is
/// below eps_trunc, and rows are renormalized afterwards. truncation_mass is
/// the largest per-row mass discarded before renormalization.
struct TransitionKernel {
  std::vector<double> p;  // (n_max+1) x (n_max+1), row-major
  int n_max = 0;
  double truncation_mass = 0.0;
  Protocol protocol = Protocol::P1;

  double at(int n, int m) const {
    return p[static_cast<std::size_t>(n) * (n_max + 1) + m];
  }
};

/// Stationary distribution of a kernel together with the fixed-point
/// residual max|piP - pi| of the returned vector.
struct StationaryDistribution {
  std::vector<double> pi;
  double residual = 0.0;
};

/// Poisson probability mass, evaluated in log-space so large means and
/// counts stay finite.
inline double poisson_pmf(int m, double mean) {
  if (m < 0) throw std::invalid_argument("poisson_pmf: m must be >= 0");
  if (!(mean >= 0.0)) throw std::invalid_argument("poisson_pmf: mean must be >= 0");
  if (mean == 0.0) return m == 0 ? 1.0 : 0.0;
  if (m == 0) return std::exp(-mean);
  return std::exp(m * std::log(mean) - mean - std::lgamma(static_cast<double>(m) + 1.0));
}

namespace detail {

/// Poisson row over states 0..n_max with all mass from m >= n_max folded
/// into the last entry; sums to 1.
inline std::vector<double> saturated_poisson_row(double mean, int n_max) {
  std::vector<double> row(static_cast<std::size_t>(n_max) + 1, 0.0);
  double head = 0.0;
  for (int m = 0; m < n_max; ++m) {
    row[m] = poisson_pmf(m, mean);
    head += row[m];
  }
  row[n_max] = std::max(0.0, 1.0 - head);
  return row;
}

inline void add_scaled(std::vector<double>& acc, const std::vector<double>& row,
                       double w) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * row[i];
}

/// Smallest q_max whose Poisson(mean) tail mass is <= eps.
inline int sleep_arrival_cutoff(double mean, double eps) {
  if (mean == 0.0) return 0;
  const int cap = static_cast<int>(mean + 60.0 * std::sqrt(mean + 1.0) + 100.0);
  double cum = 0.0;
  for (int q = 0; q < cap; ++q) {
    cum += poisson_pmf(q, mean);
    if (cum >= 1.0 - eps) return q;
  }
  return cap;
}

}  // namespace detail

// -- P1 rows ------------------------------------------------------------

/// Distribution of the next lag when the device stays awake in state n:
/// Poisson arrivals over the (deterministic) execution duration.
inline std::vector<double> awake_kernel_row_p1(int n, const ModelConfig& cfg,
                                               int n_max) {
  const double duration =
      n == 0 ? p1_sync_duration(cfg) : p1_catchup_duration(n, cfg, false);
  return detail::saturated_poisson_row(cfg.blockchain.lambda_b * duration, n_max);
}

/// Distribution of the next lag when the device sleeps after state n,
/// marginalized over the q blocks created during sleep. The row sums to
/// 1 - (discarded q-tail); callers renormalize.
inline std::vector<double> sleep_kernel_row_p1(int n, const ModelConfig& cfg,
                                               int n_max) {
  const double lambda = cfg.blockchain.lambda_b;
  const double mean_q = lambda * cfg.device.t_s;
  const int q_max = detail::sleep_arrival_cutoff(mean_q, cfg.eps_trunc);
  std::vector<double> row(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int q = 0; q <= q_max; ++q) {
    const double w = poisson_pmf(q, mean_q);
    const double wake = p1_catchup_duration(n + q, cfg, true);
    detail::add_scaled(row, detail::saturated_poisson_row(lambda * wake, n_max), w);
  }
  return row;
}

// -- P2 rows ------------------------------------------------------------

/// As the P1 awake row, but header downloads set the durations, and in the
/// synchronized state the duration is a two-point mixture over whether the
/// trigger block carries an event of interest.
inline std::vector<double> awake_kernel_row_p2(int n, const ModelConfig& cfg,
                                               int n_max) {
  const double lambda = cfg.blockchain.lambda_b;
  if (n > 0) {
    const double duration = p2_catchup_duration(n, cfg, false, false);
    return detail::saturated_poisson_row(lambda * duration, n_max);
  }
  const double p_m = cfg.blockchain.p_m;
  auto row = detail::saturated_poisson_row(lambda * p2_sync_duration(cfg, true), n_max);
  for (auto& v : row) v *= p_m;
  detail::add_scaled(
      row, detail::saturated_poisson_row(lambda * p2_sync_duration(cfg, false), n_max),
      1.0 - p_m);
  return row;
}

/// Sleep row for P2. Each q-term mixes the matched wake execution (an event
/// occurred in one of the q sleep-period blocks, probability 1-(1-p_M)^q)
/// with the plain one; both durations are evaluated at n + q missing blocks.
inline std::vector<double> sleep_kernel_row_p2(int n, const ModelConfig& cfg,
                                               int n_max) {
  const double lambda = cfg.blockchain.lambda_b;
  const double p_m = cfg.blockchain.p_m;
  const double mean_q = lambda * cfg.device.t_s;
  const int q_max = detail::sleep_arrival_cutoff(mean_q, cfg.eps_trunc);
  std::vector<double> row(static_cast<std::size_t>(n_max) + 1, 0.0);
  for (int q = 0; q <= q_max; ++q) {
    const double w = poisson_pmf(q, mean_q);
    const double p_no_match = std::pow(1.0 - p_m, q);
    const double t_plain = p2_catchup_duration(n + q, cfg, true, false);
    detail::add_scaled(row, detail::saturated_poisson_row(lambda * t_plain, n_max),
                       w * p_no_match);
    if (p_no_match < 1.0) {
      const double t_match = p2_catchup_duration(n + q, cfg, true, true);
      detail::add_scaled(row, detail::saturated_poisson_row(lambda * t_match, n_max),
                         w * (1.0 - p_no_match));
    }
  }
  return row;
}

namespace detail {

template <typename AwakeRow, typename SleepRow>
TransitionKernel build_kernel_rows(const ModelConfig& cfg, int n_max, Protocol proto,
                                   AwakeRow&& awake_row, SleepRow&& sleep_row) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  const double p_s = cfg.device.p_s;
  TransitionKernel kernel;
  kernel.n_max = n_max;
  kernel.protocol = proto;
  kernel.p.assign(static_cast<std::size_t>(n_max + 1) * (n_max + 1), 0.0);
  for (int n = 0; n <= n_max; ++n) {
    std::vector<double> row(static_cast<std::size_t>(n_max) + 1, 0.0);
    if (p_s < 1.0) add_scaled(row, awake_row(n, cfg, n_max), 1.0 - p_s);
    if (p_s > 0.0) add_scaled(row, sleep_row(n, cfg, n_max), p_s);
    double sum = 0.0;
    for (double v : row) sum += v;
    kernel.truncation_mass = std::max(kernel.truncation_mass, 1.0 - sum);
    for (int m = 0; m <= n_max; ++m)
      kernel.p[static_cast<std::size_t>(n) * (n_max + 1) + m] = row[m] / sum;
  }
  return kernel;
}

}  // namespace detail

/// Full-node transition kernel: the p_s-weighted mixture of the awake and
/// sleep rows, renormalized after tail truncation.
inline TransitionKernel kernel_p1(const ModelConfig& cfg, int n_max) {
  return detail::build_kernel_rows(
      cfg, n_max, Protocol::P1,
      [](int n, const ModelConfig& c, int nm) { return awake_kernel_row_p1(n, c, nm); },
      [](int n, const ModelConfig& c, int nm) { return sleep_kernel_row_p1(n, c, nm); });
}

/// Light-node transition kernel.
inline TransitionKernel kernel_p2(const ModelConfig& cfg, int n_max) {
  return detail::build_kernel_rows(
      cfg, n_max, Protocol::P2,
      [](int n, const ModelConfig& c, int nm) { return awake_kernel_row_p2(n, c, nm); },
      [](int n, const ModelConfig& c, int nm) { return sleep_kernel_row_p2(n, c, nm); });
}

/// Kernel for the protocol selected in the config, sized by cfg.n_max.
inline TransitionKernel build_kernel(const ModelConfig& cfg) {
  return cfg.device.protocol == Protocol::P1 ? kernel_p1(cfg, cfg.n_max)
                                             : kernel_p2(cfg, cfg.n_max);
}

/// Solves pi P = pi, sum(pi) = 1 by dense elimination on (P^T - I) with the
/// normalization constraint replacing the (redundant) last balance equation.
/// A few fixed-point sweeps polish the solution; residuals above 1e-10
/// indicate an invalid kernel and throw.
inline StationaryDistribution stationary(const TransitionKernel& kernel) {
  const int size = kernel.n_max + 1;
  std::vector<double> a(static_cast<std::size_t>(size) * size, 0.0);
  std::vector<double> pi(size, 0.0);
  for (int r = 0; r < size - 1; ++r) {
    for (int c = 0; c < size; ++c)
      a[static_cast<std::size_t>(r) * size + c] = kernel.at(c, r) - (r == c ? 1.0 : 0.0);
  }
  for (int c = 0; c < size; ++c) a[static_cast<std::size_t>(size - 1) * size + c] = 1.0;
  pi[size - 1] = 1.0;

  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < size; ++col) {
    int pivot = col;
    for (int r = col + 1; r < size; ++r) {
      if (std::abs(a[static_cast<std::size_t>(r) * size + col]) >
          std::abs(a[static_cast<std::size_t>(pivot) * size + col]))
        pivot = r;
    }
    if (a[static_cast<std::size_t>(pivot) * size + col] == 0.0)
      throw std::runtime_error("stationary: singular transition matrix");
    if (pivot != col) {
      for (int c = 0; c < size; ++c)
        std::swap(a[static_cast<std::size_t>(pivot) * size + c],
                  a[static_cast<std::size_t>(col) * size + c]);
      std::swap(pi[pivot], pi[col]);
    }
    const double d = a[static_cast<std::size_t>(col) * size + col];
    for (int r = col + 1; r < size; ++r) {
      const double f = a[static_cast<std::size_t>(r) * size + col] / d;
      if (f == 0.0) continue;
      for (int c = col; c < size; ++c)
        a[static_cast<std::size_t>(r) * size + c] -=
            f * a[static_cast<std::size_t>(col) * size + c];
      pi[r] -= f * pi[col];
    }
  }
  for (int r = size - 1; r >= 0; --r) {
    double v = pi[r];
    for (int c = r + 1; c < size; ++c)
      v -= a[static_cast<std::size_t>(r) * size + c] * pi[c];
    pi[r] = v / a[static_cast<std::size_t>(r) * size + r];
  }

  auto normalize = [&](std::vector<double>& v) {
    double sum = 0.0;
    for (auto& x : v) {
      if (x < 0.0 && x > -1e-13) x = 0.0;  // elimination round-off
      sum += x;
    }
    for (auto& x : v) x /= sum;
  };
  auto residual_of = [&](const std::vector<double>& v) {
    double res = 0.0;
    for (int m = 0; m < size; ++m) {
      double pm = 0.0;
      for (int n = 0; n < size; ++n) pm += v[n] * kernel.at(n, m);
      res = std::max(res, std::abs(pm - v[m]));
    }
    return res;
  };

  normalize(pi);
  double residual = residual_of(pi);
  for (int iter = 0; iter < 200 && residual > 1e-12; ++iter) {
    std::vector<double> next(size, 0.0);
    for (int n = 0; n < size; ++n) {
      for (int m = 0; m < size; ++m) next[m] += pi[n] * kernel.at(n, m);
    }
    normalize(next);
    const double next_residual = residual_of(next);
    if (next_residual >= residual) break;
    pi = std::move(next);
    residual = next_residual;
  }
  if (!(residual <= 1e-10))
    throw std::runtime_error("stationary: solve did not reach residual 1e-10");
  return StationaryDistribution{std::move(pi), residual};
}

/// P[next lag = 0 | current lag = 0]: the probability of staying
/// synchronized across one execution cycle.
inline double prob_stay_synced(const TransitionKernel& kernel) {
  return kernel.at(0, 0);
}

/// Mean idle time per execution cycle: the device idles only when it ends an
/// execution synchronized and does not sleep, and then waits one block
/// inter-arrival time.
inline double mean_idle_time(const StationaryDistribution& dist,
                             const ModelConfig& cfg) {
  return dist.pi[0] * (1.0 - cfg.device.p_s) / cfg.blockchain.lambda_b;
}

/// Stationary per-execution traffic expectation. Awake scenarios are
/// weighted by 1-p_s (with the P2 synchronized case mixed over the trigger
/// block's event match); sleep scenarios add the expected lambda_b*t_s
/// blocks accumulated while sleeping and, for P2, the event transfer with
/// probability 1 - exp(-p_M lambda_b t_s) (the chance any sleep-period block
/// matched).
inline DataUsage expected_data_usage_per_execution(const TransitionKernel& kernel,
                                                   const StationaryDistribution& dist,
                                                   const ModelConfig& cfg) {
  const Protocol proto = kernel.protocol;
  const auto& bc = cfg.blockchain;
  const double p_s = cfg.device.p_s;
  const double mean_q = bc.lambda_b * cfg.device.t_s;
  const double l_block = proto == Protocol::P1 ? bc.l_b : bc.l_h;
  const double p_any_match = 1.0 - std::exp(-bc.p_m * mean_q);
  DataUsage total;
  for (int n = 0; n <= kernel.n_max; ++n) {
    const double weight = dist.pi[n];
    if (weight == 0.0) continue;
    double ul = 0.0;
    double dl = 0.0;
    if (p_s < 1.0) {
      DataUsage awake;
      if (n == 0 && proto == Protocol::P2) {
        const DataUsage hit =
            execution_data_usage({proto, 0, false, true}, cfg);
        const DataUsage miss =
            execution_data_usage({proto, 0, false, false}, cfg);
        awake.ul_bits = bc.p_m * hit.ul_bits + (1.0 - bc.p_m) * miss.ul_bits;
        awake.dl_bits = bc.p_m * hit.dl_bits + (1.0 - bc.p_m) * miss.dl_bits;
      } else {
        awake = execution_data_usage({proto, n, false, false}, cfg);
      }
      ul += (1.0 - p_s) * awake.ul_bits;
      dl += (1.0 - p_s) * awake.dl_bits;
    }
    if (p_s > 0.0) {
      DataUsage wake = execution_data_usage({proto, n, true, false}, cfg);
      wake.dl_bits += mean_q * l_block;
      if (proto == Protocol::P2) wake.dl_bits += p_any_match * (bc.l_i + bc.l_poi);
      ul += p_s * wake.ul_bits;
      dl += p_s * wake.dl_bits;
    }
    total.ul_bits += weight * ul;
    total.dl_bits += weight * dl;
  }
  return total;
}

inline double expected_dl_per_execution(const TransitionKernel& kernel,
                                        const StationaryDistribution& dist,
                                        const ModelConfig& cfg) {
  return expected_data_usage_per_execution(kernel, dist, cfg).dl_bits;
}

inline void write_kernel_csv(std::ostream& os, const TransitionKernel& kernel) {
  os << "n,m,prob\n";
  for (int n = 0; n <= kernel.n_max; ++n) {
    for (int m = 0; m <= kernel.n_max; ++m)
      os << n << ',' << m << ',' << csv_double(kernel.at(n, m)) << '\n';
  }
}

inline void write_stationary_csv(std::ostream& os, const StationaryDistribution& dist) {
  os << "n,pi\n";
  for (std::size_t n = 0; n < dist.pi.size(); ++n)
    os << n << ',' << csv_double(dist.pi[n]) << '\n';
}

}  // namespace chainsync
