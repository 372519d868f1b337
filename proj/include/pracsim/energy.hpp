#pragma once

#include <cstdint>
#include <stdexcept>

#include "pracsim/errors.hpp"

namespace pracsim {

/// Dynamic-energy parameters in normalized units (e_act = 1 by default).
///
/// A counter-row activation, its precharge and the first 1-byte RMW together
/// cost `counter_act_factor` x e_act. Each further byte serviced by the same
/// activation costs `e_extra_rmw`, by default 1/8 of an 8-byte column access.
struct EnergyParams {
  double e_act = 1.0;
  double e_col = 0.5;
  double counter_act_factor = 0.19;
  double e_extra_rmw = 0.5 / 8.0;

  void validate() const {
    if (!(e_act > 0 && e_col > 0 && e_extra_rmw > 0)) {
      throw ConfigError("energy parameters must be > 0");
    }
    if (!(counter_act_factor > 0 && counter_act_factor < 1)) {
      throw ConfigError("energy.counter_act_factor must be in (0, 1)");
    }
  }
};

struct EnergyLedger {
  std::uint64_t data_acts = 0;
  std::uint64_t data_cols = 0;
  std::uint64_t counter_acts = 0;
  std::uint64_t counter_rmw_bytes = 0;
  std::uint64_t mitigation_acts = 0;

  friend bool operator==(const EnergyLedger&, const EnergyLedger&) = default;
};

struct EnergyBreakdown {
  double baseline = 0;         // data activations + column accesses
  double activation_term = 0;  // counter-row ACT + PRE + first RMW
  double rmw_term = 0;         // additional bytes per batch
  double mitigation_term = 0;
  double extra = 0;
  double overhead = 0;         // extra / baseline
};

inline EnergyBreakdown energy_breakdown(const EnergyLedger& l, const EnergyParams& p) {
  if (l.data_acts == 0) throw std::domain_error("energy overhead undefined without data activations");
  if (l.counter_rmw_bytes < l.counter_acts) {
    throw std::logic_error("ledger has fewer RMW bytes than counter activations");
  }
  EnergyBreakdown b;
  b.baseline = static_cast<double>(l.data_acts) * p.e_act + static_cast<double>(l.data_cols) * p.e_col;
  b.activation_term = static_cast<double>(l.counter_acts) * p.counter_act_factor * p.e_act;
  b.rmw_term = static_cast<double>(l.counter_rmw_bytes - l.counter_acts) * p.e_extra_rmw;
  b.mitigation_term = static_cast<double>(l.mitigation_acts) * p.counter_act_factor * p.e_act;
  b.extra = b.activation_term + b.rmw_term + b.mitigation_term;
  b.overhead = b.extra / b.baseline;
  return b;
}

/// Extra dynamic energy as a fraction of the non-secure baseline.
inline double overhead(const EnergyLedger& l, const EnergyParams& p) {
  return energy_breakdown(l, p).overhead;
}

}  // namespace pracsim
