#pragma once

#include <stdexcept>

#include "chainsync/link.hpp"
#include "chainsync/params.hpp"

namespace chainsync {

/// One protocol execution, classified by what the device has to fetch.
///
///   missing_blocks == 0 && !waking  -- notification-triggered execution of a
///       synchronized, connected device (the trigger block itself is not
///       counted in missing_blocks).
///   otherwise                       -- catch-up execution fetching
///       missing_blocks accumulated blocks; `waking` adds the connection
///       setup time after a sleep period.
///
/// `matched` marks an event-of-interest transfer and is meaningful for P2
/// only: the trigger block's event for synchronized executions, any
/// sleep-period event for waking ones.
struct ExecutionScenario {
  Protocol protocol = Protocol::P1;
  int missing_blocks = 0;
  bool waking = false;
  bool matched = false;
};

/// Total bits moved in each direction during one execution.
struct DataUsage {
  double ul_bits = 0.0;
  double dl_bits = 0.0;
};

// -- P1 durations -----------------------------------------------------------

/// Execution time of a synchronized full node: one notification, the t_w
/// collection window, the block request, and the full-block download.
inline double p1_sync_duration(const ModelConfig& cfg) {
  const double g_ul = effective_goodput(cfg.link.rate_ul_bps, cfg.link.p_e_ul);
  const double g_dl = effective_goodput(cfg.link.rate_dl_bps, cfg.link.p_e_dl);
  const auto& bc = cfg.blockchain;
  return bc.l_r / g_dl + cfg.link.t_w + bc.l_r / g_ul + bc.l_b / g_dl;
}

/// Catch-up time for n missing blocks: height requests and responses with
/// all peers, one block request, and the n-block download. Waking after a
/// sleep period adds the connection setup time t_c.
inline double p1_catchup_duration(int n, const ModelConfig& cfg, bool waking) {
  if (n < 0) throw std::invalid_argument("missing block count must be >= 0");
  const double g_ul = effective_goodput(cfg.link.rate_ul_bps, cfg.link.p_e_ul);
  const double g_dl = effective_goodput(cfg.link.rate_dl_bps, cfg.link.p_e_dl);
  const auto& bc = cfg.blockchain;
  const double peers = static_cast<double>(cfg.link.n_peers);
  const double t = peers * bc.l_n / g_ul + peers * bc.l_r / g_dl + bc.l_n / g_ul +
                   static_cast<double>(n) * bc.l_b / g_dl;
  return t + (waking ? cfg.link.t_c : 0.0);
}

// -- P2 durations -----------------------------------------------------------

/// Synchronized light node: as P1 but the download is a header; a matched
/// event additionally transfers the event payload and its inclusion proof.
inline double p2_sync_duration(const ModelConfig& cfg, bool matched) {
  const double g_ul = effective_goodput(cfg.link.rate_ul_bps, cfg.link.p_e_ul);
  const double g_dl = effective_goodput(cfg.link.rate_dl_bps, cfg.link.p_e_dl);
  const auto& bc = cfg.blockchain;
  double t = bc.l_r / g_dl + cfg.link.t_w + bc.l_r / g_ul + bc.l_h / g_dl;
  if (matched) t += (bc.l_i + bc.l_poi) / g_dl;
  return t;
}

/// Light-node catch-up for n missing headers. `any_match` transfers one
/// event payload + proof and is only raised for waking executions whose
/// sleep period saw a matching event.
inline double p2_catchup_duration(int n, const ModelConfig& cfg, bool waking,
                                  bool any_match) {
  if (n < 0) throw std::invalid_argument("missing block count must be >= 0");
  const double g_ul = effective_goodput(cfg.link.rate_ul_bps, cfg.link.p_e_ul);
  const double g_dl = effective_goodput(cfg.link.rate_dl_bps, cfg.link.p_e_dl);
  const auto& bc = cfg.blockchain;
  const double peers = static_cast<double>(cfg.link.n_peers);
  double t = peers * bc.l_n / g_ul + peers * bc.l_r / g_dl + bc.l_n / g_ul +
             static_cast<double>(n) * bc.l_h / g_dl;
  if (waking) t += cfg.link.t_c;
  if (any_match) t += (bc.l_i + bc.l_poi) / g_dl;
  return t;
}

/// Expected duration of an arbitrary scenario.
inline double scenario_duration(const ExecutionScenario& sc, const ModelConfig& cfg) {
  const bool synchronized = sc.missing_blocks == 0 && !sc.waking;
  if (sc.protocol == Protocol::P1) {
    return synchronized ? p1_sync_duration(cfg)
                        : p1_catchup_duration(sc.missing_blocks, cfg, sc.waking);
  }
  return synchronized ? p2_sync_duration(cfg, sc.matched)
                      : p2_catchup_duration(sc.missing_blocks, cfg, sc.waking,
                                            sc.waking && sc.matched);
}

/// Stochastic duration: every message of the scenario is sampled through the
/// stop-and-wait link model; the fixed waits (t_w, t_c) stay deterministic.
/// Matches scenario_duration in expectation.
inline double sample_scenario_duration(const ExecutionScenario& sc,
                                       const ModelConfig& cfg,
                                       const PacketizationPolicy& policy,
                                       RngStream& rng) {
  const DirectionalLink ul = uplink(cfg.link);
  const DirectionalLink dl = downlink(cfg.link);
  const auto& bc = cfg.blockchain;
  const double l_block = sc.protocol == Protocol::P1 ? bc.l_b : bc.l_h;
  const bool synchronized = sc.missing_blocks == 0 && !sc.waking;
  double t = 0.0;
  if (synchronized) {
    // Timing bills the first notification; the t_w window absorbs the rest.
    t += sample_transfer_time(bc.l_r, dl, policy, rng);
    t += cfg.link.t_w;
    t += sample_transfer_time(bc.l_r, ul, policy, rng);
    t += sample_transfer_time(l_block, dl, policy, rng);
    if (sc.protocol == Protocol::P2 && sc.matched)
      t += sample_transfer_time(bc.l_i + bc.l_poi, dl, policy, rng);
    return t;
  }
  for (int i = 0; i < cfg.link.n_peers; ++i)
    t += sample_transfer_time(bc.l_n, ul, policy, rng);
  for (int i = 0; i < cfg.link.n_peers; ++i)
    t += sample_transfer_time(bc.l_r, dl, policy, rng);
  t += sample_transfer_time(bc.l_n, ul, policy, rng);
  t += sample_transfer_time(static_cast<double>(sc.missing_blocks) * l_block, dl,
                            policy, rng);
  if (sc.waking) t += cfg.link.t_c;
  if (sc.protocol == Protocol::P2 && sc.waking && sc.matched)
    t += sample_transfer_time(bc.l_i + bc.l_poi, dl, policy, rng);
  return t;
}

/// Bits exchanged in one execution. Unlike the timing formulas, which bill a
/// single notification plus the t_w window, the accounting counts every copy
/// that traverses the link: all n_peers notifications and responses.
inline DataUsage execution_data_usage(const ExecutionScenario& sc,
                                      const ModelConfig& cfg) {
  if (sc.missing_blocks < 0)
    throw std::invalid_argument("missing block count must be >= 0");
  const auto& bc = cfg.blockchain;
  const double peers = static_cast<double>(cfg.link.n_peers);
  const double l_block = sc.protocol == Protocol::P1 ? bc.l_b : bc.l_h;
  const bool synchronized = sc.missing_blocks == 0 && !sc.waking;
  DataUsage usage;
  if (synchronized) {
    usage.ul_bits = bc.l_r;
    usage.dl_bits = peers * bc.l_r + l_block;
    if (sc.protocol == Protocol::P2 && sc.matched)
      usage.dl_bits += bc.l_i + bc.l_poi;
    return usage;
  }
  usage.ul_bits = peers * bc.l_n + bc.l_n;
  usage.dl_bits = peers * bc.l_r + static_cast<double>(sc.missing_blocks) * l_block;
  if (sc.protocol == Protocol::P2 && sc.waking && sc.matched)
    usage.dl_bits += bc.l_i + bc.l_poi;
  return usage;
}

}  // namespace chainsync
