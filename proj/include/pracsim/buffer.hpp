#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "pracsim/errors.hpp"

namespace pracsim {

enum class Design { chronus, perrow, unified_fcfs, unified_sorted, unified_approxmax };

inline std::string_view to_string(Design d) {
  switch (d) {
    case Design::chronus: return "chronus";
    case Design::perrow: return "perrow";
    case Design::unified_fcfs: return "unified_fcfs";
    case Design::unified_sorted: return "unified_sorted";
    case Design::unified_approxmax: return "unified_approxmax";
  }
  return "?";
}

inline Design parse_design(std::string_view name) {
  if (name == "fcfs") return Design::unified_fcfs;
  if (name == "sorted") return Design::unified_sorted;
  if (name == "approxmax" || name == "unified") return Design::unified_approxmax;
  for (auto d : {Design::chronus, Design::perrow, Design::unified_fcfs, Design::unified_sorted,
                 Design::unified_approxmax}) {
    if (to_string(d) == name) return d;
  }
  throw ConfigError("unknown buffer design '" + std::string(name) + "'");
}

/// When a repeated counter is forced out of the buffer.
///  pending:  when its pending increments (RepCount + 1) reach K, so no
///            counter is ever more than K activations stale.
///  repcount: when RepCount itself reaches K (staleness up to K + 1).
enum class KTrigger { pending, repcount };

inline std::string_view to_string(KTrigger k) {
  return k == KTrigger::pending ? "pending" : "repcount";
}

inline KTrigger parse_k_trigger(std::string_view name) {
  if (name == "pending") return KTrigger::pending;
  if (name == "repcount") return KTrigger::repcount;
  throw ConfigError("buffer.k_trigger must be pending or repcount");
}

struct BufferConfig {
  Design design = Design::unified_approxmax;
  std::uint32_t capacity = 64;  // unified designs; perrow always holds M per counter row
  std::uint32_t m_batch = 4;
  std::uint32_t k_limit = 4;
  KTrigger k_trigger = KTrigger::pending;
  bool writeback_flag = false;  // set when a counter cache sits in front

  /// Worst-case activations a counter can lag behind its stored value.
  std::uint32_t staleness_bound() const {
    if (design == Design::chronus) return 0;
    return k_trigger == KTrigger::pending ? k_limit : k_limit + 1;
  }

  std::uint32_t rep_count_max() const { return writeback_flag ? 127 : 255; }

  void validate() const {
    if (m_batch < 1) throw ConfigError("buffer.m_batch must be >= 1");
    if (k_limit < 1) throw ConfigError("buffer.k_limit must be >= 1");
    if (design != Design::chronus && design != Design::perrow && capacity < m_batch) {
      throw ConfigError("buffer.capacity must be >= buffer.m_batch");
    }
    const std::uint32_t max_rep = k_trigger == KTrigger::pending ? k_limit - 1 : k_limit;
    if (max_rep > rep_count_max()) {
      throw ConfigError("buffer.k_limit does not fit the RepCount field");
    }
  }
};

enum class EntryKind : std::uint8_t { increment, writeback };

struct BufferEntry {
  std::uint16_t row_id = 0;
  std::uint16_t byte_id = 0;
  std::uint8_t rep_count = 0;
  EntryKind kind = EntryKind::increment;
  std::uint8_t wb_value = 0;
  std::uint64_t arrival = 0;

  std::uint32_t pending() const {
    return kind == EntryKind::increment ? std::uint32_t{rep_count} + 1 : 0;
  }
};

enum class Trigger : std::uint8_t { m_ready, buffer_full, k_limit, drain, immediate };

inline constexpr std::size_t kTriggerCount = 5;

inline std::string_view to_string(Trigger t) {
  switch (t) {
    case Trigger::m_ready: return "m_ready";
    case Trigger::buffer_full: return "buffer_full";
    case Trigger::k_limit: return "k_limit";
    case Trigger::drain: return "drain";
    case Trigger::immediate: return "immediate";
  }
  return "?";
}

struct BatchItem {
  std::uint16_t byte_id = 0;
  EntryKind kind = EntryKind::increment;
  std::uint32_t increments = 0;  // increment items
  std::uint8_t wb_value = 0;     // writeback items
};

/// Requests serviced by one counter-row activation.
struct ServiceBatch {
  std::uint16_t row_id = 0;
  Trigger trigger = Trigger::m_ready;
  std::vector<BatchItem> items;
};

/// Buffer contents as seen by a victim-selection policy.
struct BufferState {
  std::vector<BufferEntry> entries;        // arrival order, oldest first
  std::vector<std::uint32_t> row_counts;   // entries per counter row
};

// ---------------------------------------------------------------------------
// Victim selection for buffer_full removals

/// Row of the oldest entry.
struct FcfsVictim {
  void on_insert(const BufferState&, std::uint16_t) {}
  void on_remove(const BufferState&, std::uint16_t) {}
  void reset() {}
  std::uint16_t select(const BufferState& s) const { return s.entries.front().row_id; }
};

/// Row holding the most entries, smallest row_id on ties.
struct SortedVictim {
  void on_insert(const BufferState&, std::uint16_t) {}
  void on_remove(const BufferState&, std::uint16_t) {}
  void reset() {}
  std::uint16_t select(const BufferState& s) const {
    const auto it = std::max_element(s.row_counts.begin(), s.row_counts.end());
    return static_cast<std::uint16_t>(it - s.row_counts.begin());
  }
};

/// Single (row, count) register updated by one CAM lookup per insertion. Once
/// the tracked row is removed it falls back to the row of the oldest entry.
struct ApproxMaxVictim {
  struct Tracked {
    std::uint16_t row = 0;
    std::uint32_t count = 0;
  };

  void on_insert(const BufferState& s, std::uint16_t row) {
    const std::uint32_t count = s.row_counts[row];
    if (!tracked || tracked->row == row || count > tracked->count) tracked = Tracked{row, count};
  }

  void on_remove(const BufferState& s, std::uint16_t row) {
    if (!tracked || tracked->row != row) return;
    if (s.entries.empty()) {
      tracked.reset();
      return;
    }
    const auto first = s.entries.front().row_id;
    tracked = Tracked{first, s.row_counts[first]};
  }

  void reset() { tracked.reset(); }

  std::uint16_t select(const BufferState& s) const {
    return tracked ? tracked->row : s.entries.front().row_id;
  }

  std::optional<Tracked> tracked;
};

/// Dedicated M-entry buffer per counter row. Realized as a unified buffer
/// large enough that it never fills: a row is flushed when it reaches M
/// entries, so there is always room for one more row's request.
struct PerRowVictim : SortedVictim {};

// ---------------------------------------------------------------------------

/// Counter request buffer of one bank.
///
/// All designs share the same triggers: m_ready when a counter row holds M
/// entries, k_limit when a repeated counter reaches its staleness limit, and
/// buffer_full when a new entry finds no room. At most one batch leaves per
/// insert (one counter-row activation in the shadow of the data activation),
/// with priority k_limit > buffer_full > m_ready. A request that completes its
/// own row's batch is served by that m_ready batch even when the buffer is
/// full. Designs differ only in the row chosen for buffer_full.
template <class Victim>
class CoalescingBuffer {
 public:
  CoalescingBuffer(const BufferConfig& config, std::uint32_t counter_rows)
      : config_(config) {
    config_.validate();
    if (config_.design == Design::perrow) config_.capacity = counter_rows * config_.m_batch;
    state_.row_counts.assign(counter_rows, 0);
    state_.entries.reserve(config_.capacity + config_.m_batch);
  }

  /// Buffers the counter request of one data-row activation.
  std::optional<ServiceBatch> insert(std::uint16_t row_id, std::uint16_t byte_id) {
    check_row(row_id);
    auto& entries = state_.entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      auto& e = entries[i];
      if (e.row_id != row_id || e.byte_id != byte_id) continue;
      if (e.kind == EntryKind::writeback) {
        throw std::logic_error("increment inserted over a buffered writeback");
      }
      ++e.rep_count;
      victim_.on_insert(state_, row_id);
      if (k_reached(e)) return take_row(row_id, Trigger::k_limit, e.arrival);
      if (state_.row_counts[row_id] >= config_.m_batch) return take_row(row_id, Trigger::m_ready);
      return std::nullopt;
    }

    std::optional<ServiceBatch> out;
    if (state_.row_counts[row_id] >= config_.m_batch) {
      // Row pushed to M entries by writebacks, which never trigger a batch.
      out = take_row(row_id, Trigger::m_ready);
    } else if (entries.size() >= config_.capacity && !new_entry_flushes_now()) {
      // A request that completes its row's batch needs no room: the batch
      // leaves in this shadow. Otherwise a victim row makes room.
      if (state_.row_counts[row_id] + 1 < config_.m_batch) out = take_row(victim_.select(state_), Trigger::buffer_full);
    }

    const std::uint64_t stamp = next_arrival_++;
    entries.push_back(BufferEntry{row_id, byte_id, 0, EntryKind::increment, 0, stamp});
    ++state_.row_counts[row_id];
    victim_.on_insert(state_, row_id);

    if (!out) {
      if (k_reached(entries.back())) {
        out = take_row(row_id, Trigger::k_limit, stamp);
      } else if (state_.row_counts[row_id] >= config_.m_batch) {
        out = take_row(row_id, Trigger::m_ready);
      }
    }
    return out;
  }

  /// Queues a dirty counter evicted from the cache. Never emits a batch: the
  /// eviction happens while a batch is already being serviced. The caller
  /// keeps room: fills that could evict are skipped while the buffer is full.
  /// Only the final flush of dirty lines may exceed the capacity.
  void insert_writeback(std::uint16_t row_id, std::uint16_t byte_id, std::uint8_t value) {
    check_row(row_id);
    state_.entries.push_back(
        BufferEntry{row_id, byte_id, 0, EntryKind::writeback, value, next_arrival_++});
    ++state_.row_counts[row_id];
    victim_.on_insert(state_, row_id);
  }

  /// Removes and returns a buffered writeback for the counter, if any.
  std::optional<BufferEntry> take_writeback(std::uint16_t row_id, std::uint16_t byte_id) {
    auto& entries = state_.entries;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (entries[i].row_id == row_id && entries[i].byte_id == byte_id &&
          entries[i].kind == EntryKind::writeback) {
        const BufferEntry e = entries[i];
        entries.erase(entries.begin() + static_cast<std::ptrdiff_t>(i));
        --state_.row_counts[row_id];
        victim_.on_remove(state_, row_id);
        return e;
      }
    }
    return std::nullopt;
  }

  /// Overwrites the value of a buffered writeback (after its counter was
  /// mitigated). Returns false when there is none.
  bool reset_writeback(std::uint16_t row_id, std::uint16_t byte_id, std::uint8_t value) {
    for (auto& e : state_.entries) {
      if (e.row_id == row_id && e.byte_id == byte_id && e.kind == EntryKind::writeback) {
        e.wb_value = value;
        return true;
      }
    }
    return false;
  }

  /// Empties the buffer: ascending row_id, arrival order within a row, at
  /// most M items per batch.
  std::vector<ServiceBatch> drain() {
    std::vector<ServiceBatch> out;
    auto sorted = state_.entries;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const BufferEntry& a, const BufferEntry& b) { return a.row_id < b.row_id; });
    for (const auto& e : sorted) {
      if (out.empty() || out.back().row_id != e.row_id || out.back().items.size() >= config_.m_batch) {
        out.push_back(ServiceBatch{e.row_id, Trigger::drain, {}});
      }
      out.back().items.push_back(to_item(e));
    }
    state_.entries.clear();
    std::fill(state_.row_counts.begin(), state_.row_counts.end(), 0u);
    victim_.reset();
    return out;
  }

  std::uint16_t victim_row() const {
    if (state_.entries.empty()) throw std::logic_error("victim_row on an empty buffer");
    return victim_.select(state_);
  }

  std::span<const BufferEntry> entries() const { return state_.entries; }
  std::size_t size() const { return state_.entries.size(); }
  bool empty() const { return state_.entries.empty(); }
  std::uint32_t row_entries(std::uint16_t row_id) const { return state_.row_counts.at(row_id); }
  const BufferConfig& config() const { return config_; }
  const Victim& victim() const { return victim_; }

 private:
  void check_row(std::uint16_t row_id) const {
    if (row_id >= state_.row_counts.size()) throw RangeError("counter row outside the buffer");
  }

  bool k_reached(const BufferEntry& e) const {
    if (e.kind != EntryKind::increment) return false;
    return config_.k_trigger == KTrigger::pending ? e.pending() >= config_.k_limit
                                                  : e.rep_count >= config_.k_limit;
  }

  // With K = 1 under pending semantics a new entry leaves immediately, so a
  // full buffer needs no eviction to accept it.
  bool new_entry_flushes_now() const {
    return config_.k_trigger == KTrigger::pending && config_.k_limit == 1;
  }

  static BatchItem to_item(const BufferEntry& e) {
    return BatchItem{e.byte_id, e.kind, e.pending(), e.wb_value};
  }

  /// Removes up to M entries of `row_id`, oldest first; the entry stamped
  /// `must_include` is always taken.
  ServiceBatch take_row(std::uint16_t row_id, Trigger trigger,
                        std::optional<std::uint64_t> must_include = std::nullopt) {
    auto& entries = state_.entries;
    ServiceBatch batch{row_id, trigger, {}};
    batch.items.reserve(config_.m_batch);

    std::uint32_t budget = config_.m_batch;
    const std::uint64_t pinned = must_include.value_or(0);
    const bool pin = must_include.has_value() && state_.row_counts[row_id] > config_.m_batch;
    if (pin) {
      for (const auto& e : entries) {
        if (e.arrival == pinned) {
          batch.items.push_back(to_item(e));
          --budget;
          break;
        }
      }
    }

    std::size_t kept = 0;
    for (std::size_t i = 0; i < entries.size(); ++i) {
      const auto& e = entries[i];
      bool take = false;
      if (e.row_id == row_id) {
        if (pin && e.arrival == pinned) {
          take = true;  // already emitted above
        } else if (budget > 0) {
          batch.items.push_back(to_item(e));
          --budget;
          take = true;
        }
      }
      if (!take) entries[kept++] = e;
    }
    const auto removed = entries.size() - kept;
    entries.resize(kept);
    state_.row_counts[row_id] -= static_cast<std::uint32_t>(removed);
    victim_.on_remove(state_, row_id);
    return batch;
  }

  BufferConfig config_;
  BufferState state_;
  Victim victim_;
  std::uint64_t next_arrival_ = 0;
};

/// Chronus baseline: every counter request is serviced at once by its own
/// counter-row activation.
class PassThroughBuffer {
 public:
  explicit PassThroughBuffer(const BufferConfig& config) : config_(config) {}

  std::optional<ServiceBatch> insert(std::uint16_t row_id, std::uint16_t byte_id) {
    return ServiceBatch{row_id, Trigger::immediate, {BatchItem{byte_id, EntryKind::increment, 1, 0}}};
  }
  void insert_writeback(std::uint16_t, std::uint16_t, std::uint8_t) {
    throw std::logic_error("the pass-through buffer does not take writebacks");
  }
  std::optional<BufferEntry> take_writeback(std::uint16_t, std::uint16_t) { return std::nullopt; }
  bool reset_writeback(std::uint16_t, std::uint16_t, std::uint8_t) { return false; }
  std::vector<ServiceBatch> drain() { return {}; }
  std::span<const BufferEntry> entries() const { return {}; }
  std::size_t size() const { return 0; }
  bool empty() const { return true; }
  const BufferConfig& config() const { return config_; }

 private:
  BufferConfig config_;
};

/// Chronus step as a free function: a single-item batch for every request.
inline ServiceBatch chronus_step(std::uint16_t row_id, std::uint16_t byte_id) {
  return ServiceBatch{row_id, Trigger::immediate, {BatchItem{byte_id, EntryKind::increment, 1, 0}}};
}

using FcfsBuffer = CoalescingBuffer<FcfsVictim>;
using SortedBuffer = CoalescingBuffer<SortedVictim>;
using ApproxMaxBuffer = CoalescingBuffer<ApproxMaxVictim>;
using PerRowBuffer = CoalescingBuffer<PerRowVictim>;

/// Any of the designs, chosen at run time.
class RequestBuffer {
 public:
  RequestBuffer(const BufferConfig& config, std::uint32_t counter_rows)
      : impl_(make(config, counter_rows)) {}

  std::optional<ServiceBatch> insert(std::uint16_t row_id, std::uint16_t byte_id) {
    return std::visit([&](auto& b) { return b.insert(row_id, byte_id); }, impl_);
  }
  void insert_writeback(std::uint16_t row_id, std::uint16_t byte_id, std::uint8_t value) {
    std::visit([&](auto& b) { b.insert_writeback(row_id, byte_id, value); }, impl_);
  }
  std::optional<BufferEntry> take_writeback(std::uint16_t row_id, std::uint16_t byte_id) {
    return std::visit([&](auto& b) { return b.take_writeback(row_id, byte_id); }, impl_);
  }
  bool reset_writeback(std::uint16_t row_id, std::uint16_t byte_id, std::uint8_t value) {
    return std::visit([&](auto& b) { return b.reset_writeback(row_id, byte_id, value); }, impl_);
  }
  std::vector<ServiceBatch> drain() {
    return std::visit([](auto& b) { return b.drain(); }, impl_);
  }
  std::span<const BufferEntry> entries() const {
    return std::visit([](const auto& b) { return b.entries(); }, impl_);
  }
  std::size_t size() const {
    return std::visit([](const auto& b) { return b.size(); }, impl_);
  }
  const BufferConfig& config() const {
    return std::visit([](const auto& b) -> const BufferConfig& { return b.config(); }, impl_);
  }

 private:
  using Impl = std::variant<PassThroughBuffer, FcfsBuffer, SortedBuffer, ApproxMaxBuffer, PerRowBuffer>;

  static Impl make(const BufferConfig& config, std::uint32_t counter_rows) {
    switch (config.design) {
      case Design::chronus: return PassThroughBuffer(config);
      case Design::unified_fcfs: return FcfsBuffer(config, counter_rows);
      case Design::unified_sorted: return SortedBuffer(config, counter_rows);
      case Design::unified_approxmax: return ApproxMaxBuffer(config, counter_rows);
      case Design::perrow: return PerRowBuffer(config, counter_rows);
    }
    throw std::logic_error("unhandled design");
  }

  Impl impl_;
};

}  // namespace pracsim
