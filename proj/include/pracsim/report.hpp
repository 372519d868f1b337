#pragma once

#include <charconv>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "pracsim/engine.hpp"

namespace pracsim {

using Json = nlohmann::ordered_json;

namespace detail {
inline std::string percentile_label(double p) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return "p" + std::string(buf, ptr);
}
}  // namespace detail

inline Json to_json(const TraceCharacterization& m) {
  Json skew_banks = Json::object();
  for (const auto& [bank, s] : m.skew_per_bank) skew_banks[std::to_string(bank)] = s;
  Json footprint = Json::object();
  for (std::size_t i = 0; i < m.percentiles.size() && i < m.footprint_rows.size(); ++i) {
    footprint[detail::percentile_label(m.percentiles[i])] = m.footprint_rows[i];
  }
  Json j;
  j["skew_mean"] = m.skew_mean ? Json(*m.skew_mean) : Json(nullptr);
  j["skew_per_bank"] = std::move(skew_banks);
  j["window"] = m.window;
  j["window_mode"] = to_string(m.window_mode);
  j["window_locality"] = m.window_locality ? Json(*m.window_locality) : Json(nullptr);
  j["distinct_rows"] = m.distinct_rows;
  j["footprint_rows"] = std::move(footprint);
  return j;
}

/// Stable report layout; bump `schema_version` on any change.
inline Json to_json(const SimReport& r) {
  Json j;
  j["schema_version"] = SimReport::kSchemaVersion;
  j["policy"] = r.policy;
  j["buffer"] = {{"design", to_string(r.buffer.design)},
                 {"capacity", r.buffer.capacity},
                 {"m_batch", r.buffer.m_batch},
                 {"k_limit", r.buffer.k_limit},
                 {"k_trigger", to_string(r.buffer.k_trigger)}};
  j["cache"] = to_string(r.cache);
  j["events"] = r.events;
  j["counter_acts"] = r.ledger.counter_acts;
  j["normalized_acts"] = r.normalized_acts;
  j["ledger"] = {{"data_acts", r.ledger.data_acts},
                 {"data_cols", r.ledger.data_cols},
                 {"counter_acts", r.ledger.counter_acts},
                 {"counter_rmw_bytes", r.ledger.counter_rmw_bytes},
                 {"mitigation_acts", r.ledger.mitigation_acts}};
  Json batches;
  for (std::size_t t = 0; t < kTriggerCount; ++t) {
    batches[std::string(to_string(static_cast<Trigger>(t)))] = r.batches_by_trigger[t];
  }
  j["batches_by_trigger"] = std::move(batches);
  if (r.energy) {
    j["energy"] = {{"baseline", r.energy->baseline},
                   {"activation_term", r.energy->activation_term},
                   {"rmw_term", r.energy->rmw_term},
                   {"mitigation_term", r.energy->mitigation_term},
                   {"extra", r.energy->extra},
                   {"overhead", r.energy->overhead}};
  } else {
    j["energy"] = nullptr;
  }
  j["mitigation"] = {{"enabled", r.mitigations_enabled},
                     {"n_bo_effective", r.n_bo_effective},
                     {"alerts", r.alerts},
                     {"mitigations", r.mitigations},
                     {"proactive_mitigations", r.proactive_mitigations}};
  j["cache_stats"] = {{"hits", r.cache_stats.hits},
                      {"misses", r.cache_stats.misses},
                      {"hit_rate", r.cache_stats.hit_rate()},
                      {"fills", r.cache_stats.fills},
                      {"rejected_fills", r.cache_stats.rejected_fills},
                      {"dirty_evictions", r.cache_stats.dirty_evictions},
                      {"writeback_rehits", r.cache_stats.writeback_rehits}};
  j["metrics"] = r.metrics ? to_json(*r.metrics) : Json(nullptr);
  return j;
}

inline Json to_json(const Comparison& c) {
  Json rows = Json::array();
  for (const auto& row : c.rows) {
    Json j = to_json(row.report);
    j["normalized_to_chronus"] = row.normalized_acts;
    rows.push_back(std::move(j));
  }
  return Json{{"schema_version", SimReport::kSchemaVersion}, {"events", c.events}, {"rows", std::move(rows)}};
}

// CSV tables. Column order is part of the interface.

inline constexpr std::string_view kReportCsvHeader =
    "policy,events,counter_acts,normalized_acts,counter_rmw_bytes,mitigation_acts,alerts,"
    "mitigations,energy_overhead,activation_energy,cache_hit_rate,cache_writebacks";

namespace detail {
inline std::string fmt_double(double v) { return Json(v).dump(); }
}  // namespace detail

inline void write_csv_row(std::ostream& out, const SimReport& r, double normalized) {
  out << r.policy << ',' << r.events << ',' << r.ledger.counter_acts << ','
      << detail::fmt_double(normalized) << ',' << r.ledger.counter_rmw_bytes << ','
      << r.ledger.mitigation_acts << ',' << r.alerts << ',' << r.mitigations << ','
      << (r.energy ? detail::fmt_double(r.energy->overhead) : "") << ','
      << (r.energy ? detail::fmt_double(r.energy->activation_term) : "") << ','
      << detail::fmt_double(r.cache_stats.hit_rate()) << ',' << r.cache_stats.dirty_evictions << '\n';
}

inline void write_csv(std::ostream& out, const SimReport& r) {
  out << kReportCsvHeader << '\n';
  write_csv_row(out, r, r.normalized_acts);
}

inline void write_csv(std::ostream& out, const Comparison& c) {
  out << kReportCsvHeader << '\n';
  for (const auto& row : c.rows) write_csv_row(out, row.report, row.normalized_acts);
}

inline constexpr std::string_view kAnalysisCsvHeader = "metric,value";

inline void write_csv(std::ostream& out, const TraceCharacterization& m, std::uint64_t events) {
  out << kAnalysisCsvHeader << '\n';
  out << "events," << events << '\n';
  out << "skew_mean," << (m.skew_mean ? detail::fmt_double(*m.skew_mean) : "") << '\n';
  for (const auto& [bank, s] : m.skew_per_bank) out << "skew_bank_" << bank << ',' << detail::fmt_double(s) << '\n';
  out << "window_locality," << (m.window_locality ? detail::fmt_double(*m.window_locality) : "") << '\n';
  out << "distinct_rows," << m.distinct_rows << '\n';
  for (std::size_t i = 0; i < m.percentiles.size() && i < m.footprint_rows.size(); ++i) {
    out << "footprint_" << detail::percentile_label(m.percentiles[i]) << ',' << m.footprint_rows[i] << '\n';
  }
}

}  // namespace pracsim
