#pragma once

// Umbrella header for the blockchain-synchronization traffic model:
// validated parameters, the stop-and-wait link abstraction, closed-form
// protocol timing, the lag-process transition kernel with its stationary
// metrics, and the discrete-event simulator.

#include "chainsync/config_io.hpp"
#include "chainsync/csv.hpp"
#include "chainsync/kernel.hpp"
#include "chainsync/link.hpp"
#include "chainsync/params.hpp"
#include "chainsync/rng.hpp"
#include "chainsync/simulator.hpp"
#include "chainsync/timing.hpp"
