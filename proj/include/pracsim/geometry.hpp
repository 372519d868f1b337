#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "pracsim/errors.hpp"

namespace pracsim {

using BankId = std::uint32_t;
using RowIndex = std::uint32_t;

/// DRAM organization seen by the counter sub-array.
///
/// Every bank owns a small counter sub-array with `counter_rows_per_bank` rows,
/// each holding `counters_per_counter_row` one-byte activation counters, one
/// per data row. The entry layout of the request buffer fixes the widths of
/// the two coordinates (6-bit RowID, 10-bit ByteID).
struct DramGeometry {
  static constexpr std::uint32_t kMaxCounterRows = 64;
  static constexpr std::uint32_t kMaxCountersPerRow = 1024;

  std::uint32_t banks = 64;  // 32 banks x 2 ranks x 1 channel
  std::uint32_t rows_per_bank = 65536;
  std::uint32_t counter_rows_per_bank = 64;
  std::uint32_t counters_per_counter_row = 1024;

  void validate() const {
    if (banks == 0 || banks > 65536) {
      throw ConfigError("geometry.banks must be in [1, 65536]");
    }
    if (counter_rows_per_bank == 0 || counter_rows_per_bank > kMaxCounterRows) {
      throw ConfigError("geometry.counter_rows_per_bank must be in [1, 64]");
    }
    if (counters_per_counter_row == 0 || counters_per_counter_row > kMaxCountersPerRow) {
      throw ConfigError("geometry.counters_per_counter_row must be in [1, 1024]");
    }
    if (static_cast<std::uint64_t>(counter_rows_per_bank) * counters_per_counter_row !=
        rows_per_bank) {
      throw ConfigError(
          "geometry.rows_per_bank must equal counter_rows_per_bank * counters_per_counter_row");
    }
  }

  friend bool operator==(const DramGeometry&, const DramGeometry&) = default;
};

/// One 1-byte activation counter: (bank, counter RowID, ByteID).
struct CounterRef {
  BankId bank = 0;
  std::uint16_t row_id = 0;
  std::uint16_t byte_id = 0;

  friend auto operator<=>(const CounterRef&, const CounterRef&) = default;
};

inline void check_bank(const DramGeometry& g, BankId bank) {
  if (bank >= g.banks) {
    throw RangeError("bank " + std::to_string(bank) + " outside [0, " + std::to_string(g.banks) +
                     ")");
  }
}

/// Blocked layout: consecutive data rows share a counter row.
inline CounterRef map_row(const DramGeometry& g, BankId bank, RowIndex data_row) {
  check_bank(g, bank);
  if (data_row >= g.rows_per_bank) {
    throw RangeError("data row " + std::to_string(data_row) + " outside [0, " +
                     std::to_string(g.rows_per_bank) + ")");
  }
  return CounterRef{bank, static_cast<std::uint16_t>(data_row / g.counters_per_counter_row),
                    static_cast<std::uint16_t>(data_row % g.counters_per_counter_row)};
}

/// Position of a counter inside its bank's counter sub-array. With the blocked
/// layout this is also the data row the counter belongs to.
inline std::uint32_t counter_index(const DramGeometry& g, const CounterRef& ref) {
  return static_cast<std::uint32_t>(ref.row_id) * g.counters_per_counter_row + ref.byte_id;
}

inline CounterRef counter_at(const DramGeometry& g, BankId bank, std::uint32_t index) {
  return CounterRef{bank, static_cast<std::uint16_t>(index / g.counters_per_counter_row),
                    static_cast<std::uint16_t>(index % g.counters_per_counter_row)};
}

/// Key unique across the whole memory, used by maps keyed on counters.
inline std::uint64_t global_counter_key(const DramGeometry& g, const CounterRef& ref) {
  return static_cast<std::uint64_t>(ref.bank) * g.rows_per_bank + counter_index(g, ref);
}

inline void check_counter(const DramGeometry& g, const CounterRef& ref) {
  check_bank(g, ref.bank);
  if (ref.row_id >= g.counter_rows_per_bank || ref.byte_id >= g.counters_per_counter_row) {
    throw RangeError("counter (" + std::to_string(ref.row_id) + ", " +
                     std::to_string(ref.byte_id) + ") outside the counter sub-array");
  }
}

}  // namespace pracsim
