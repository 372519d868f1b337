#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pracsim/batch_log.hpp"
#include "pracsim/buffer.hpp"
#include "pracsim/counter_cache.hpp"
#include "pracsim/counter_store.hpp"
#include "pracsim/energy.hpp"
#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/metrics.hpp"
#include "pracsim/trace.hpp"

namespace pracsim {

enum class TraceFormat { automatic, text, binary };

inline std::string_view to_string(TraceFormat f) {
  switch (f) {
    case TraceFormat::automatic: return "auto";
    case TraceFormat::text: return "text";
    case TraceFormat::binary: return "binary";
  }
  return "?";
}

inline TraceFormat parse_trace_format(std::string_view name) {
  if (name == "auto") return TraceFormat::automatic;
  if (name == "text") return TraceFormat::text;
  if (name == "binary") return TraceFormat::binary;
  throw ConfigError("trace.format must be auto, text or binary");
}

/// Mitigation settings as configured. The effective back-off threshold of a
/// buffered design is lowered by its staleness bound unless set explicitly.
struct MitigationSettings {
  bool enabled = true;
  std::uint32_t n_bo = 32;
  std::uint32_t n_bo_effective = 0;  // 0 = n_bo minus the design's staleness bound
  std::uint32_t rfms_per_alert = 1;
  std::uint64_t proactive_interval = 168;  // slots; 0 disables

  MitigationPolicy resolve(const BufferConfig& buffer) const {
    MitigationPolicy p;
    p.enabled = enabled;
    p.rfms_per_alert = rfms_per_alert;
    p.proactive_interval_slots = enabled ? proactive_interval : 0;
    if (n_bo_effective) {
      p.n_bo_effective = n_bo_effective;
    } else {
      const auto bound = buffer.staleness_bound();
      if (enabled && n_bo <= bound) throw ConfigError("mitigation.n_bo must exceed the staleness bound");
      p.n_bo_effective = n_bo > bound ? n_bo - bound : 1;
    }
    return p;
  }
};

struct SimConfig {
  std::uint64_t seed = 1;
  DramGeometry geometry;
  std::string trace_path;  // empty: generate from `trace`
  TraceFormat trace_format = TraceFormat::automatic;
  TraceSpec trace;
  BufferConfig buffer;
  CacheConfig cache;
  MitigationSettings mitigation;
  EnergyParams energy;
  MetricsConfig metrics;
  bool record_log = false;

  void validate() const {
    geometry.validate();
    buffer.validate();
    cache.validate();
    energy.validate();
    metrics.validate();
    if (trace_path.empty()) trace.validate(geometry);
    if (cache.enabled() && buffer.design == Design::chronus) {
      throw ConfigError("a counter cache needs a buffered design, not chronus");
    }
    BufferConfig b = buffer;
    b.writeback_flag = cache.enabled();
    b.validate();
    const auto policy = mitigation.resolve(buffer);
    if (policy.enabled) policy.validate();
  }

  /// Identifies the policy in reports, e.g. `unified_approxmax`,
  /// `unified_approxmax:32` or `perrow+lru4way`.
  std::string policy_id() const {
    std::string id(to_string(buffer.design));
    const bool unified = buffer.design != Design::chronus && buffer.design != Design::perrow;
    if (unified && buffer.capacity != 64) id += ":" + std::to_string(buffer.capacity);
    if (cache.enabled()) id += "+" + std::string(to_string(cache.kind));
    return id;
  }
};

inline Trace load_trace(const SimConfig& config) {
  if (config.trace_path.empty()) {
    TraceSpec spec = config.trace;
    spec.seed = config.seed;
    return generate(spec, config.geometry);
  }
  auto format = config.trace_format;
  if (format == TraceFormat::automatic) {
    const auto& p = config.trace_path;
    const bool bin = p.size() >= 4 && (p.ends_with(".bin") || p.ends_with(".btrace"));
    format = bin ? TraceFormat::binary : TraceFormat::text;
  }
  std::ifstream in(config.trace_path, format == TraceFormat::binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open trace '" + config.trace_path + "'");
  return format == TraceFormat::binary ? read_binary_trace(in, config.geometry)
                                       : read_trace(in, config.geometry);
}

struct SimReport {
  static constexpr int kSchemaVersion = 1;

  std::string policy;
  BufferConfig buffer;
  CacheKind cache = CacheKind::none;
  std::uint32_t n_bo_effective = 0;
  bool mitigations_enabled = true;
  std::uint64_t events = 0;
  EnergyLedger ledger;
  std::optional<EnergyBreakdown> energy;
  double normalized_acts = 0;
  std::uint64_t alerts = 0;
  std::uint64_t mitigations = 0;
  std::uint64_t proactive_mitigations = 0;
  std::array<std::uint64_t, kTriggerCount> batches_by_trigger{};
  CacheStats cache_stats;
  std::optional<TraceCharacterization> metrics;
};

/// One simulation instance: per-bank request buffers (and caches) in front
/// of the counter sub-arrays. Events must arrive in slot order.
class Simulation {
 public:
  explicit Simulation(const SimConfig& config)
      : config_(config),
        policy_(config.mitigation.resolve(config.buffer)),
        store_(config.geometry, policy_),
        profile_(config.geometry) {
    config_.validate();
    config_.buffer.writeback_flag = config_.cache.enabled();
    banks_.reserve(config_.geometry.banks);
    for (BankId b = 0; b < config_.geometry.banks; ++b) {
      Bank bank{RequestBuffer(config_.buffer, config_.geometry.counter_rows_per_bank), {}};
      if (config_.cache.enabled()) {
        bank.cache.emplace(config_.cache, splitmix64(config_.seed ^ (0xcac4eULL + b)));
      }
      banks_.push_back(std::move(bank));
    }
  }

  void step(const ActivationEvent& ev) {
    if (finished_) throw std::logic_error("step after finish");
    const auto& g = config_.geometry;
    const CounterRef ref = map_row(g, ev.bank, ev.data_row);
    const std::uint64_t slot = next_slot_++;
    if (config_.metrics.enabled) profile_.observe(ref);
    ++ledger_.data_acts;
    ++ledger_.data_cols;

    Bank& bank = banks_[ev.bank];
    if (!(bank.cache && serve_from_cache(bank, ref, slot))) {
      if (auto batch = bank.buffer.insert(ref.row_id, ref.byte_id)) {
        service(bank, ev.bank, *batch, slot, true);
      }
    }

    const auto interval = policy_.proactive_interval_slots;
    if (interval && (slot + 1) % interval == 0) {
      for (BankId b = 0; b < g.banks; ++b) proactive(b, slot);
    }
  }

  /// Drains every buffer and flushes dirty cache lines back to the array.
  void finish() {
    if (finished_) return;
    finished_ = true;
    const std::uint64_t slot = next_slot_;
    for (BankId b = 0; b < banks_.size(); ++b) {
      for (auto& batch : banks_[b].buffer.drain()) service(banks_[b], b, batch, slot, false);
    }
    if (!config_.cache.enabled()) return;
    for (BankId b = 0; b < banks_.size(); ++b) {
      Bank& bank = banks_[b];
      for (const auto& line : bank.cache->flush_dirty()) {
        const auto ref = counter_at(config_.geometry, b, line.tag);
        bank.buffer.insert_writeback(ref.row_id, ref.byte_id, line.value);
      }
      for (auto& batch : bank.buffer.drain()) service(bank, b, batch, slot, false);
    }
  }

  SimReport report() const {
    SimReport r;
    r.policy = config_.policy_id();
    r.buffer = config_.buffer;
    r.cache = config_.cache.kind;
    r.n_bo_effective = policy_.n_bo_effective;
    r.mitigations_enabled = policy_.enabled;
    r.events = next_slot_;
    r.ledger = ledger_;
    if (ledger_.data_acts) {
      r.energy = energy_breakdown(ledger_, config_.energy);
      r.normalized_acts = static_cast<double>(ledger_.counter_acts) / static_cast<double>(ledger_.data_acts);
    }
    r.alerts = store_.alerts();
    r.mitigations = store_.mitigations();
    r.proactive_mitigations = store_.proactive_mitigations();
    r.batches_by_trigger = batches_by_trigger_;
    for (const auto& bank : banks_) {
      if (bank.cache) r.cache_stats += bank.cache->stats();
    }
    if (config_.metrics.enabled) r.metrics = profile_.summarize(config_.metrics);
    return r;
  }

  const CounterStore& counters() const { return store_; }
  const RequestBuffer& buffer(BankId bank) const { return banks_.at(bank).buffer; }
  const BatchLog& log() const { return log_; }
  const MitigationPolicy& mitigation_policy() const { return policy_; }
  const SimConfig& config() const { return config_; }

 private:
  struct Bank {
    RequestBuffer buffer;
    std::optional<CounterCache> cache;
  };

  void log_event(std::uint64_t slot, const CounterRef& ref, LogTrigger t) {
    if (config_.record_log) log_.push_back({slot, ref.bank, ref.row_id, t, {ref.byte_id}});
  }

  bool serve_from_cache(Bank& bank, const CounterRef& ref, std::uint64_t slot) {
    const auto& g = config_.geometry;
    const auto tag = counter_index(g, ref);
    CacheLine* line = bank.cache->access(tag);
    if (!line) {
      // A dirty line evicted earlier may still wait in the buffer; it moves
      // back into the cache with this activation applied.
      const auto wb = bank.buffer.take_writeback(ref.row_id, ref.byte_id);
      if (!wb) return false;
      ++bank.cache->stats().writeback_rehits;
      const auto v = static_cast<std::uint8_t>(std::min(255, wb->wb_value + 1));
      if (const auto evicted = bank.cache->install_dirty(tag, v)) {
        const auto victim = counter_at(g, ref.bank, evicted->tag);
        bank.buffer.insert_writeback(victim.row_id, victim.byte_id, evicted->value);
      }
      line = bank.cache->find(tag);
    }
    log_event(slot, ref, LogTrigger::cache_hit);
    if (store_.alert_due(line->value)) {
      store_.raise_alert(ref, line->value);
      settle_mitigations(slot);
    }
    return true;
  }

  void service(Bank& bank, BankId bank_id, const ServiceBatch& batch, std::uint64_t slot, bool fill) {
    const auto& g = config_.geometry;
    ++ledger_.counter_acts;
    // Every buffered request is one counter RMW whether or not it shares an
    // entry, so RMW work is the same under every design.
    for (const auto& item : batch.items) {
      ledger_.counter_rmw_bytes += item.kind == EntryKind::increment ? item.increments : 1;
    }
    ++batches_by_trigger_[static_cast<std::size_t>(batch.trigger)];
    if (config_.record_log) {
      LogRecord rec{slot, bank_id, batch.row_id, to_log_trigger(batch.trigger), {}};
      rec.byte_ids.reserve(batch.items.size());
      for (const auto& item : batch.items) rec.byte_ids.push_back(item.byte_id);
      log_.push_back(std::move(rec));
    }
    for (const auto& item : batch.items) {
      const CounterRef ref{bank_id, batch.row_id, item.byte_id};
      if (item.kind == EntryKind::increment) {
        store_.apply_rmw(ref, item.increments);
      } else {
        store_.apply_writeback(ref, item.wb_value);
      }
      if (!store_.journal_empty()) settle_mitigations(slot);
      // A fill may evict a dirty line into the buffer, so it needs a free
      // entry. Without one the counter is simply not cached.
      const bool room = bank.buffer.size() < bank.buffer.config().capacity;
      if (fill && room && bank.cache && item.kind == EntryKind::increment) {
        if (const auto evicted = bank.cache->fill_clean(counter_index(g, ref), store_.value(ref))) {
          const auto victim = counter_at(g, bank_id, evicted->tag);
          bank.buffer.insert_writeback(victim.row_id, victim.byte_id, evicted->value);
        }
      }
    }
  }

  /// Logs and accounts mitigations, and clears copies of the mitigated
  /// counters held outside the array.
  void settle_mitigations(std::uint64_t slot) {
    for (const auto& m : store_.take_journal()) {
      ++ledger_.mitigation_acts;
      log_event(slot, m.ref, m.cause == MitigationCause::alert ? LogTrigger::alert : LogTrigger::proactive);
      Bank& bank = banks_[m.ref.bank];
      if (!bank.cache) continue;
      if (CacheLine* line = bank.cache->find(counter_index(config_.geometry, m.ref))) {
        line->value = 0;
        line->dirty = false;
      }
      bank.buffer.reset_writeback(m.ref.row_id, m.ref.byte_id, 0);
    }
  }

  /// Mitigates the bank's largest visible counter. With a cache the visible
  /// value of a counter may sit in a dirty line or a buffered writeback.
  void proactive(BankId b, std::uint64_t slot) {
    auto best = store_.argmax(b);
    Bank& bank = banks_[b];
    if (bank.cache) {
      const auto& g = config_.geometry;
      auto consider = [&](const CounterRef& ref, std::uint8_t v) {
        if (v == 0) return;
        if (!best || v > best->second ||
            (v == best->second && counter_index(g, ref) < counter_index(g, best->first))) {
          best = std::pair{ref, v};
        }
      };
      for (const auto& line : bank.cache->lines()) {
        if (line.valid && line.dirty) consider(counter_at(g, b, line.tag), line.value);
      }
      for (const auto& e : bank.buffer.entries()) {
        if (e.kind == EntryKind::writeback) consider(CounterRef{b, e.row_id, e.byte_id}, e.wb_value);
      }
    }
    if (!best) return;
    store_.mitigate(best->first, MitigationCause::proactive, best->second);
    settle_mitigations(slot);
  }

  SimConfig config_;
  MitigationPolicy policy_;
  CounterStore store_;
  TraceProfile profile_;
  std::vector<Bank> banks_;
  EnergyLedger ledger_;
  std::array<std::uint64_t, kTriggerCount> batches_by_trigger_{};
  BatchLog log_;
  std::uint64_t next_slot_ = 0;
  bool finished_ = false;
};

struct RunResult {
  SimReport report;
  BatchLog log;
  CounterState final_counters;
};

/// Runs one configuration over an already loaded trace.
inline RunResult simulate(const SimConfig& config, std::span<const ActivationEvent> trace) {
  Simulation sim(config);
  for (const auto& ev : trace) sim.step(ev);
  sim.finish();
  return RunResult{sim.report(), sim.log(), sim.counters().snapshot()};
}

inline SimReport run(const SimConfig& config) {
  config.validate();
  const auto trace = load_trace(config);
  return simulate(config, trace).report;
}

struct ComparisonRow {
  SimReport report;
  double normalized_acts = 0;  // relative to the Chronus row
};

struct Comparison {
  std::uint64_t events = 0;
  std::vector<ComparisonRow> rows;  // Chronus first
};

inline bool same_trace_source(const SimConfig& a, const SimConfig& b) {
  if (!(a.geometry == b.geometry)) return false;
  if (a.trace_path != b.trace_path) return false;
  if (!a.trace_path.empty()) return a.trace_format == b.trace_format;
  return a.seed == b.seed && a.trace == b.trace;
}

/// Runs every configuration on one shared trace plus an implicit Chronus
/// baseline, normalizing counter-row activations to it.
inline Comparison compare(std::span<const SimConfig> configs) {
  if (configs.empty()) throw ConfigError("compare needs at least one configuration");
  for (const auto& c : configs) {
    c.validate();
    if (!same_trace_source(configs.front(), c)) {
      throw ConfigError("compared configurations must share one trace and geometry");
    }
  }
  const auto trace = load_trace(configs.front());

  SimConfig baseline = configs.front();
  baseline.buffer.design = Design::chronus;
  baseline.cache.kind = CacheKind::none;
  baseline.record_log = false;

  Comparison out;
  out.events = trace.size();
  auto add = [&](const SimConfig& c, double denominator) {
    ComparisonRow row{simulate(c, trace).report, 0.0};
    if (denominator > 0) row.normalized_acts = static_cast<double>(row.report.ledger.counter_acts) / denominator;
    out.rows.push_back(std::move(row));
  };
  add(baseline, 0);
  const double chronus_acts = static_cast<double>(out.rows.front().report.ledger.counter_acts);
  out.rows.front().normalized_acts = chronus_acts > 0 ? 1.0 : 0.0;
  for (const auto& c : configs) {
    if (c.buffer.design == Design::chronus && !c.cache.enabled()) continue;
    add(c, chronus_acts);
  }
  return out;
}

}  // namespace pracsim
