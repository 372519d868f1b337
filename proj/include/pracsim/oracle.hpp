#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "pracsim/batch_log.hpp"
#include "pracsim/counter_store.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/trace.hpp"

namespace pracsim {

/// Rules checked by the reference replay.
enum class OracleRule : int {
  none = 0,
  staleness = 1,       // no counter lags its activations by more than the bound
  batch_legality = 2,  // <= M distinct bytes of one counter row per batch
  one_per_shadow = 3,  // at most one batch per data activation, in its bank
  final_state = 4,     // post-drain counters equal the reference
  accounting = 5,      // reported counter activations equal logged batches
};

struct OracleParams {
  DramGeometry geometry;
  std::uint32_t m_batch = 4;
  std::uint32_t staleness_bound = 4;
  std::optional<std::uint64_t> reported_counter_acts;
  const CounterState* final_counters = nullptr;  // rule 4 is skipped when null
};

struct Verdict {
  bool pass = true;
  OracleRule rule = OracleRule::none;
  std::uint64_t slot = 0;
  std::string message;

  static Verdict fail(OracleRule rule, std::uint64_t slot, std::string message) {
    return Verdict{false, rule, slot, std::move(message)};
  }
};

struct OracleReplay {
  Verdict verdict;
  CounterState expected;      // reference counter state after the run
  std::uint64_t batches = 0;  // counter-row activations seen in the log
  std::uint32_t max_staleness = 0;  // largest unapplied count after a shadow
};

/// Brute-force replay of a trace against a policy's batch log.
///
/// The replay never looks inside a buffer. Per counter it tracks `unapplied`,
/// the activations not yet visible in the array or cache, and `since_reset`,
/// the value the counter must end with. A batch or cache hit naming a counter
/// makes all of its activations visible; a mitigation resets the visible part.
inline OracleReplay replay(std::span<const ActivationEvent> trace, std::span<const LogRecord> log,
                           const OracleParams& p) {
  struct Track {
    std::uint32_t unapplied = 0;
    std::uint64_t since_reset = 0;
  };
  const DramGeometry& g = p.geometry;
  std::unordered_map<std::uint64_t, Track> tracks;
  OracleReplay out;
  const std::uint64_t n = trace.size();

  auto key_of = [&](BankId bank, std::uint16_t row, std::uint16_t byte) {
    return global_counter_key(g, CounterRef{bank, row, byte});
  };

  auto check_coords = [&](const LogRecord& r) -> std::optional<Verdict> {
    if (r.bank >= g.banks || r.row_id >= g.counter_rows_per_bank) {
      return Verdict::fail(OracleRule::batch_legality, r.slot, "record outside the geometry");
    }
    for (auto b : r.byte_ids) {
      if (b >= g.counters_per_counter_row) {
        return Verdict::fail(OracleRule::batch_legality, r.slot, "byte id outside the counter row");
      }
    }
    return std::nullopt;
  };

  // Returns a failure for one record, given the activation of its slot.
  auto apply = [&](const LogRecord& r, const ActivationEvent* ev,
                   std::uint32_t& shadow_batches) -> std::optional<Verdict> {
    if (auto bad = check_coords(r)) return bad;
    if (is_batch(r.trigger)) {
      ++out.batches;
      if (r.byte_ids.empty() || r.byte_ids.size() > p.m_batch) {
        return Verdict::fail(OracleRule::batch_legality, r.slot,
                             "batch of " + std::to_string(r.byte_ids.size()) + " items with M = " +
                                 std::to_string(p.m_batch));
      }
      std::unordered_set<std::uint16_t> seen;
      for (auto b : r.byte_ids) {
        if (!seen.insert(b).second) {
          return Verdict::fail(OracleRule::batch_legality, r.slot, "duplicate byte id in batch");
        }
      }
      if (ev) {
        if (r.trigger == LogTrigger::drain) {
          return Verdict::fail(OracleRule::one_per_shadow, r.slot, "drain batch inside the trace");
        }
        if (++shadow_batches > 1) {
          return Verdict::fail(OracleRule::one_per_shadow, r.slot, "two batches in one activation shadow");
        }
        if (r.bank != ev->bank) {
          return Verdict::fail(OracleRule::one_per_shadow, r.slot, "batch outside the activated bank");
        }
      } else if (r.trigger != LogTrigger::drain) {
        return Verdict::fail(OracleRule::one_per_shadow, r.slot, "non-drain batch after the trace");
      }
      for (auto b : r.byte_ids) tracks[key_of(r.bank, r.row_id, b)].unapplied = 0;
      return std::nullopt;
    }

    if (r.byte_ids.size() != 1) {
      return Verdict::fail(OracleRule::batch_legality, r.slot, "event record must name one counter");
    }
    const auto key = key_of(r.bank, r.row_id, r.byte_ids.front());
    if (r.trigger == LogTrigger::cache_hit) {
      if (!ev || key != global_counter_key(g, map_row(g, ev->bank, ev->data_row))) {
        return Verdict::fail(OracleRule::one_per_shadow, r.slot, "cache hit for a counter not activated");
      }
      tracks[key].unapplied = 0;
    } else {
      auto& t = tracks[key];
      t.since_reset = t.unapplied;
    }
    return std::nullopt;
  };

  std::size_t li = 0;
  for (std::uint64_t s = 0; s < n; ++s) {
    const ActivationEvent& ev = trace[s];
    const CounterRef ref = map_row(g, ev.bank, ev.data_row);
    auto& t = tracks[global_counter_key(g, ref)];
    ++t.unapplied;
    ++t.since_reset;
    if (li < log.size() && log[li].slot < s) {
      out.verdict = Verdict::fail(OracleRule::one_per_shadow, log[li].slot, "log record out of order");
      return out;
    }
    std::uint32_t shadow_batches = 0;
    for (; li < log.size() && log[li].slot == s; ++li) {
      if (auto bad = apply(log[li], &ev, shadow_batches)) {
        out.verdict = *bad;
        return out;
      }
    }
    // Staleness is judged once the activation's shadow is over; only the
    // activated counter can have grown.
    out.max_staleness = std::max(out.max_staleness, t.unapplied);
    if (t.unapplied > p.staleness_bound) {
      out.verdict = Verdict::fail(OracleRule::staleness, s,
                                  "counter " + std::to_string(ref.row_id) + ":" +
                                      std::to_string(ref.byte_id) + " is " +
                                      std::to_string(t.unapplied) + " activations stale");
      return out;
    }
  }
  std::uint32_t unused = 0;
  for (; li < log.size(); ++li) {
    if (log[li].slot != n) {
      out.verdict = Verdict::fail(OracleRule::one_per_shadow, log[li].slot,
                                  "log record outside the trace and drain slot");
      return out;
    }
    if (auto bad = apply(log[li], nullptr, unused)) {
      out.verdict = *bad;
      return out;
    }
  }

  for (const auto& [key, t] : tracks) {
    const auto v = static_cast<std::uint8_t>(std::min<std::uint64_t>(t.since_reset, 255));
    if (v) out.expected.emplace(key, v);
  }

  if (p.final_counters) {
    for (const auto& [key, t] : tracks) {
      if (t.unapplied != 0) {
        out.verdict = Verdict::fail(OracleRule::final_state, n, "counter left unserviced after drain");
        return out;
      }
    }
    if (*p.final_counters != out.expected) {
      std::uint64_t bad_key = 0;
      for (const auto& [key, v] : out.expected) {
        const auto it = p.final_counters->find(key);
        if (it == p.final_counters->end() || it->second != v) {
          bad_key = key;
          break;
        }
      }
      out.verdict = Verdict::fail(OracleRule::final_state, n,
                                  "final counters differ from the reference (first key " +
                                      std::to_string(bad_key) + ")");
      return out;
    }
  }

  if (p.reported_counter_acts && *p.reported_counter_acts != out.batches) {
    out.verdict = Verdict::fail(OracleRule::accounting, n,
                                "reported " + std::to_string(*p.reported_counter_acts) +
                                    " counter activations, log has " + std::to_string(out.batches));
  }
  return out;
}

inline Verdict verify(std::span<const ActivationEvent> trace, std::span<const LogRecord> log,
                      const OracleParams& p) {
  return replay(trace, log, p).verdict;
}

/// Counter state after servicing every activation immediately and without
/// mitigations: the Chronus reference.
inline CounterState chronus_reference(std::span<const ActivationEvent> trace, const DramGeometry& g) {
  std::unordered_map<std::uint64_t, std::uint64_t> counts;
  for (const auto& ev : trace) ++counts[global_counter_key(g, map_row(g, ev.bank, ev.data_row))];
  CounterState out;
  for (const auto& [key, c] : counts) {
    out.emplace(key, static_cast<std::uint8_t>(std::min<std::uint64_t>(c, 255)));
  }
  return out;
}

}  // namespace pracsim
