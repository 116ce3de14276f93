#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chainsync {

/// Synchronization protocol run by the device.
///   P1 -- full node: downloads complete blocks.
///   P2 -- light node: downloads headers, plus event data with inclusion
///         proofs on demand.
enum class Protocol { P1, P2 };

inline const char* to_string(Protocol p) { return p == Protocol::P1 ? "P1" : "P2"; }

/// Thrown when a configuration violates a model invariant. The message names
/// the first offending field.
class config_error : public std::runtime_error {
 public:
  explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

/// Block process and message sizes. Units: bits and seconds throughout.
struct BlockchainParams {
  double lambda_b = 1.0 / 12.0;  // block generation rate, 1/s
  double l_b = 40000.0;          // full block, bits
  double l_h = 800.0;            // block header, bits
  double l_n = 800.0;            // request, bits
  double l_r = 800.0;            // response / notification, bits
  double l_i = 1000.0;           // event information payload, bits
  double l_poi = 1536.0;         // proof of inclusion, bits
  double p_m = 0.0;              // per-block event match probability
};

/// Wireless link between the device and its blockchain-network peers.
struct LinkParams {
  double rate_ul_bps = 1e6;  // uplink bit-rate
  double rate_dl_bps = 1e6;  // downlink bit-rate
  double p_e_ul = 0.0;       // uplink packet-error probability
  double p_e_dl = 0.0;       // downlink packet-error probability
  double t_c = 0.1;          // connection establishment time, s
  double t_w = 0.5;          // notification collection wait, s
  int n_peers = 6;           // number of connected peers
};

/// Device duty-cycle behavior.
struct DeviceParams {
  double p_s = 0.0;                   // sleep probability after an execution
  double t_s = 0.0;                   // sleep duration, s
  Protocol protocol = Protocol::P1;
};

/// Full model configuration shared by the analytic and simulation engines.
/// n_max caps the lag state space of the transition kernel; eps_trunc bounds
/// the probability mass discarded when truncating the infinite sleep sums.
struct ModelConfig {
  BlockchainParams blockchain;
  LinkParams link;
  DeviceParams device;
  int n_max = 64;
  double eps_trunc = 1e-12;
};

namespace detail {

inline void require(bool ok, const std::string& msg) {
  if (!ok) throw config_error(msg);
}

inline bool finite_pos(double v) { return std::isfinite(v) && v > 0.0; }
inline bool prob(double v) { return std::isfinite(v) && v >= 0.0 && v <= 1.0; }

}  // namespace detail

/// Checks every invariant and returns the config unchanged. Throws
/// config_error naming the first violated field. Idempotent.
inline ModelConfig validate_config(const ModelConfig& raw) {
  using detail::require;
  const auto& bc = raw.blockchain;
  require(detail::finite_pos(bc.lambda_b), "lambda_b must be > 0");
  require(detail::finite_pos(bc.l_b), "l_b must be > 0");
  require(detail::finite_pos(bc.l_h), "l_h must be > 0");
  require(detail::finite_pos(bc.l_n), "l_n must be > 0");
  require(detail::finite_pos(bc.l_r), "l_r must be > 0");
  require(detail::finite_pos(bc.l_i), "l_i must be > 0");
  require(detail::finite_pos(bc.l_poi), "l_poi must be > 0");
  require(bc.l_h <= bc.l_b, "l_h <= l_b violated: header cannot exceed block");
  require(detail::prob(bc.p_m), "p_m must be in [0, 1]");

  const auto& lk = raw.link;
  require(detail::finite_pos(lk.rate_ul_bps), "rate_ul_bps must be > 0");
  require(detail::finite_pos(lk.rate_dl_bps), "rate_dl_bps must be > 0");
  require(lk.p_e_ul >= 0.0 && lk.p_e_ul < 1.0,
          lk.p_e_ul >= 1.0 ? "degenerate link: zero goodput (p_e_ul >= 1)"
                           : "p_e_ul must be in [0, 1)");
  require(lk.p_e_dl >= 0.0 && lk.p_e_dl < 1.0,
          lk.p_e_dl >= 1.0 ? "degenerate link: zero goodput (p_e_dl >= 1)"
                           : "p_e_dl must be in [0, 1)");
  require(std::isfinite(lk.t_c) && lk.t_c >= 0.0, "t_c must be >= 0");
  require(std::isfinite(lk.t_w) && lk.t_w >= 0.0, "t_w must be >= 0");
  require(lk.n_peers >= 1, "n_peers must be >= 1");

  const auto& dev = raw.device;
  require(detail::prob(dev.p_s), "p_s must be in [0, 1]");
  require(std::isfinite(dev.t_s) && dev.t_s >= 0.0, "t_s must be >= 0");

  require(raw.n_max >= 1, "n_max must be >= 1");
  require(raw.eps_trunc > 0.0 && raw.eps_trunc < 1e-3,
          "eps_trunc must be in (0, 1e-3)");
  return raw;
}

/// Link presets for the two reference radio technologies. Error
/// probabilities default to 0; t_w and n_peers carry the standard
/// evaluation values (0.5 s wait, 6 peers).
///   techA: 1 Mbps symmetric, 100 ms connection setup (LTE Cat M1 class)
///   techB: 100 kbps up / 150 kbps down, 1 s setup (BLE class)
inline LinkParams table_presets(std::string_view name) {
  LinkParams lk;
  if (name == "techA") {
    lk.rate_ul_bps = 1e6;
    lk.rate_dl_bps = 1e6;
    lk.t_c = 0.1;
  } else if (name == "techB") {
    lk.rate_ul_bps = 1e5;
    lk.rate_dl_bps = 1.5e5;
    lk.t_c = 1.0;
  } else {
    throw config_error("unknown link preset: " + std::string(name));
  }
  return lk;
}

/// Ethereum-style defaults: 12 s block period, 40 kbit blocks, 800 bit
/// control messages, 1000 bit event payloads with 1536 bit proofs.
inline BlockchainParams default_blockchain() { return BlockchainParams{}; }

/// Resolves a dotted parameter path ("device.t_s", "link.p_e_dl",
/// "blockchain.l_b", ...) and assigns `value`. Throws config_error for
/// unknown paths. Integer fields reject non-integral values.
inline void set_parameter(ModelConfig& cfg, std::string_view path, double value) {
  auto& bc = cfg.blockchain;
  auto& lk = cfg.link;
  auto& dev = cfg.device;
  if (path == "blockchain.lambda_b") bc.lambda_b = value;
  else if (path == "blockchain.l_b") bc.l_b = value;
  else if (path == "blockchain.l_h") bc.l_h = value;
  else if (path == "blockchain.l_n") bc.l_n = value;
  else if (path == "blockchain.l_r") bc.l_r = value;
  else if (path == "blockchain.l_i") bc.l_i = value;
  else if (path == "blockchain.l_poi") bc.l_poi = value;
  else if (path == "blockchain.p_m") bc.p_m = value;
  else if (path == "link.rate_ul_bps") lk.rate_ul_bps = value;
  else if (path == "link.rate_dl_bps") lk.rate_dl_bps = value;
  else if (path == "link.p_e_ul") lk.p_e_ul = value;
  else if (path == "link.p_e_dl") lk.p_e_dl = value;
  else if (path == "link.t_c") lk.t_c = value;
  else if (path == "link.t_w") lk.t_w = value;
  else if (path == "link.n_peers") {
    if (value != std::floor(value))
      throw config_error("link.n_peers requires an integer value");
    lk.n_peers = static_cast<int>(value);
  } else if (path == "device.p_s") dev.p_s = value;
  else if (path == "device.t_s") dev.t_s = value;
  else throw config_error("unresolvable parameter path: " + std::string(path));
}

}  // namespace chainsync
