#pragma once

#include <cmath>
#include <stdexcept>

#include "chainsync/params.hpp"
#include "chainsync/rng.hpp"

namespace chainsync {

/// One direction of the stop-and-wait link. Feedback is instant and
/// error-free, so the expected goodput is rate * (1 - p_e).
struct DirectionalLink {
  double rate_bps;
  double p_e;
  double goodput_bps;
};

/// Expected goodput of a stop-and-wait link with unlimited retransmissions.
inline double effective_goodput(double rate_bps, double p_e) {
  if (!(rate_bps > 0.0)) throw std::invalid_argument("rate_bps must be > 0");
  if (!(p_e >= 0.0 && p_e < 1.0))
    throw std::invalid_argument("p_e must be in [0, 1): p_e = 1 means zero goodput");
  return rate_bps * (1.0 - p_e);
}

inline DirectionalLink make_link(double rate_bps, double p_e) {
  return DirectionalLink{rate_bps, p_e, effective_goodput(rate_bps, p_e)};
}

inline DirectionalLink uplink(const LinkParams& lk) {
  return make_link(lk.rate_ul_bps, lk.p_e_ul);
}

inline DirectionalLink downlink(const LinkParams& lk) {
  return make_link(lk.rate_dl_bps, lk.p_e_dl);
}

/// Expected time to deliver a message over a link with the given goodput.
inline double transfer_time(double length_bits, double goodput_bps) {
  if (!(length_bits >= 0.0)) throw std::invalid_argument("length_bits must be >= 0");
  if (!(goodput_bps > 0.0)) throw std::invalid_argument("goodput_bps must be > 0");
  return length_bits / goodput_bps;
}

/// Packet size used only when sampling transfer times; the analytic model is
/// packet-size independent.
struct PacketizationPolicy {
  double packet_bits = 8000.0;
};

/// Samples the stop-and-wait delivery time of one message. The message is
/// split into full packets plus a final partial packet carrying the
/// remainder, and each packet is retransmitted a geometric number of times.
/// The sample mean equals transfer_time(length_bits, goodput).
inline double sample_transfer_time(double length_bits, const DirectionalLink& link,
                                   const PacketizationPolicy& policy, RngStream& rng) {
  if (!(length_bits >= 0.0)) throw std::invalid_argument("length_bits must be >= 0");
  if (!(policy.packet_bits > 0.0)) throw std::invalid_argument("packet_bits must be > 0");
  double total = 0.0;
  double remaining = length_bits;
  while (remaining > 0.0) {
    const double bits = std::min(remaining, policy.packet_bits);
    const double attempts = static_cast<double>(rng.geometric_attempts(link.p_e));
    total += attempts * bits / link.rate_bps;
    remaining -= bits;
  }
  return total;
}

}  // namespace chainsync
