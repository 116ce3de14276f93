#pragma once

#include <cstdio>
#include <string>

namespace chainsync {

/// Shortest-round-trip decimal rendering used by every CSV writer, so that
/// repeated runs with identical inputs produce byte-identical files.
inline std::string csv_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace chainsync
