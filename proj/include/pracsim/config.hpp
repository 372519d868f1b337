#pragma once

#include <charconv>
#include <cstdint>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "pracsim/engine.hpp"
#include "pracsim/errors.hpp"

namespace pracsim {

// Config files are flat `key = value` lines with dotted section prefixes
// (`buffer.design = perrow`). `#` starts a comment line. Every key is also a
// command-line flag `--key value`.

using ConfigMap = std::map<std::string, std::string>;

inline ConfigMap parse_config(std::istream& in) {
  ConfigMap out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = detail::trim(view.substr(0, eq));
    const auto value = detail::trim(view.substr(eq + 1));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (!out.emplace(std::string(key), std::string(value)).second) {
      throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
    }
  }
  return out;
}

inline void write_config(std::ostream& out, const ConfigMap& config) {
  for (const auto& [k, v] : config) out << k << " = " << v << '\n';
}

namespace detail {

inline std::uint64_t parse_u64(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError(std::string(key) + ": expected an unsigned integer, got '" + std::string(v) + "'");
  }
  return out;
}

inline std::uint32_t parse_u32(std::string_view key, std::string_view v) {
  const auto out = parse_u64(key, v);
  if (out > std::numeric_limits<std::uint32_t>::max()) throw ConfigError(std::string(key) + ": value too large");
  return static_cast<std::uint32_t>(out);
}

inline double parse_double(std::string_view key, std::string_view v) {
  double out = 0;
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (v.empty() || ec != std::errc{} || ptr != end) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

inline bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true or false");
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

inline std::vector<std::string_view> split_list(std::string_view v) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos <= v.size()) {
    const auto comma = v.find(',', pos);
    const auto item = trim(v.substr(pos, comma == std::string_view::npos ? v.size() - pos : comma - pos));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace detail

/// One configuration key bound to a field of `Settings`.
template <class Settings>
struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(Settings&, std::string_view)> set;
  std::function<std::string(const Settings&)> get;
};

template <class Settings>
using ConfigSchema = std::vector<ConfigKey<Settings>>;

/// Keys that configure one simulation.
inline const ConfigSchema<SimConfig>& sim_config_schema() {
  using detail::format_double;
  using detail::parse_bool;
  using detail::parse_double;
  using detail::parse_u32;
  using detail::parse_u64;
  using K = ConfigKey<SimConfig>;
  static const ConfigSchema<SimConfig> schema = [] {
    ConfigSchema<SimConfig> s;
    auto add = [&](std::string name, std::string help, auto set, auto get) {
      s.push_back(K{std::move(name), std::move(help), set, get});
    };
#define PRACSIM_U32(key, field, help)                                                       \
  add(key, help, [](SimConfig& c, std::string_view v) { c.field = parse_u32(key, v); }, \
      [](const SimConfig& c) { return std::to_string(c.field); })
#define PRACSIM_U64(key, field, help)                                                       \
  add(key, help, [](SimConfig& c, std::string_view v) { c.field = parse_u64(key, v); }, \
      [](const SimConfig& c) { return std::to_string(c.field); })
#define PRACSIM_F64(key, field, help)                                                          \
  add(key, help, [](SimConfig& c, std::string_view v) { c.field = parse_double(key, v); }, \
      [](const SimConfig& c) { return format_double(c.field); })
#define PRACSIM_BOOL(key, field, help)                                                       \
  add(key, help, [](SimConfig& c, std::string_view v) { c.field = parse_bool(key, v); }, \
      [](const SimConfig& c) { return std::string(c.field ? "true" : "false"); })

    PRACSIM_U64("seed", seed, "seed of every random choice");

    PRACSIM_U32("geometry.banks", geometry.banks, "banks in the system");
    PRACSIM_U32("geometry.rows_per_bank", geometry.rows_per_bank, "data rows per bank");
    PRACSIM_U32("geometry.counter_rows_per_bank", geometry.counter_rows_per_bank, "rows of the counter sub-array");
    PRACSIM_U32("geometry.counters_per_counter_row", geometry.counters_per_counter_row, "1-byte counters per counter row");

    add("trace.path", "trace file to replay (empty: generate one)",
        [](SimConfig& c, std::string_view v) { c.trace_path = std::string(v); },
        [](const SimConfig& c) { return c.trace_path; });
    add("trace.format", "auto|text|binary",
        [](SimConfig& c, std::string_view v) { c.trace_format = parse_trace_format(v); },
        [](const SimConfig& c) { return std::string(to_string(c.trace_format)); });
    add("trace.generator", "uniform|zipf|sequential|hotset|hammer|roundrobin",
        [](SimConfig& c, std::string_view v) { c.trace.generator = parse_generator(v); },
        [](const SimConfig& c) { return std::string(to_string(c.trace.generator)); });
    PRACSIM_U64("trace.length", trace.length, "generated events");
    PRACSIM_U32("trace.banks", trace.banks, "banks the random generators spread over");
    PRACSIM_U32("trace.first_bank", trace.first_bank, "first bank used by the generator");
    PRACSIM_U32("trace.start_row", trace.start_row, "first row of the sequential generator");
    PRACSIM_U32("trace.footprint", trace.footprint, "rows eligible for uniform/zipf/hotset (0: all)");
    PRACSIM_F64("trace.zipf_exponent", trace.zipf_exponent, "zipf exponent");
    PRACSIM_U32("trace.hot_rows", trace.hot_rows, "hot rows of the hotset generator");
    PRACSIM_F64("trace.hot_fraction", trace.hot_fraction, "share of hotset events sent to hot rows");
    PRACSIM_U32("trace.target_row", trace.target_row, "row hammered by the hammer generator");
    PRACSIM_U32("trace.gap", trace.gap, "filler events between hammer hits");

    add("buffer.design", "chronus|perrow|unified_fcfs|unified_sorted|unified_approxmax",
        [](SimConfig& c, std::string_view v) { c.buffer.design = parse_design(v); },
        [](const SimConfig& c) { return std::string(to_string(c.buffer.design)); });
    PRACSIM_U32("buffer.capacity", buffer.capacity, "entries of a unified buffer");
    PRACSIM_U32("buffer.m_batch", buffer.m_batch, "RMWs per counter-row activation (M)");
    PRACSIM_U32("buffer.k_limit", buffer.k_limit, "buffered increments per counter (K)");
    add("buffer.k_trigger", "pending|repcount",
        [](SimConfig& c, std::string_view v) { c.buffer.k_trigger = parse_k_trigger(v); },
        [](const SimConfig& c) { return std::string(to_string(c.buffer.k_trigger)); });

    add("cache.kind", "none|lru4way|tinylfu",
        [](SimConfig& c, std::string_view v) { c.cache.kind = parse_cache_kind(v); },
        [](const SimConfig& c) { return std::string(to_string(c.cache.kind)); });
    PRACSIM_U32("cache.entries", cache.entries, "cache lines per bank");
    PRACSIM_U32("cache.sketch_width", cache.sketch_width, "counters per count-min row (tinylfu)");
    PRACSIM_U64("cache.halving_period", cache.halving_period, "accesses between sketch halvings (0: 10 x entries)");

    PRACSIM_BOOL("mitigation.enabled", mitigation.enabled, "Alerts and proactive mitigations");
    PRACSIM_U32("mitigation.n_bo", mitigation.n_bo, "back-off threshold before the staleness adjustment");
    PRACSIM_U32("mitigation.n_bo_effective", mitigation.n_bo_effective, "explicit effective threshold (0: derived)");
    PRACSIM_U32("mitigation.rfms_per_alert", mitigation.rfms_per_alert, "RFMs served per Alert");
    PRACSIM_U64("mitigation.proactive_interval", mitigation.proactive_interval, "slots between proactive mitigations (0: off)");

    PRACSIM_F64("energy.e_act", energy.e_act, "data row activation + precharge");
    PRACSIM_F64("energy.e_col", energy.e_col, "data column access");
    PRACSIM_F64("energy.counter_act_factor", energy.counter_act_factor, "counter-row activation cost / e_act");
    PRACSIM_F64("energy.e_extra_rmw", energy.e_extra_rmw, "additional 1-byte RMW in a batch");

    PRACSIM_BOOL("metrics.enabled", metrics.enabled, "collect trace characterization");
    PRACSIM_U32("metrics.window", metrics.window, "requests per locality window");
    add("metrics.window_mode", "tumbling|sliding",
        [](SimConfig& c, std::string_view v) { c.metrics.window_mode = parse_window_mode(v); },
        [](const SimConfig& c) { return std::string(to_string(c.metrics.window_mode)); });
    add("metrics.percentiles", "comma-separated footprint percentiles",
        [](SimConfig& c, std::string_view v) {
          c.metrics.percentiles.clear();
          for (auto item : detail::split_list(v)) c.metrics.percentiles.push_back(parse_double("metrics.percentiles", item));
        },
        [](const SimConfig& c) {
          std::string out;
          for (double p : c.metrics.percentiles) out += (out.empty() ? "" : ",") + format_double(p);
          return out;
        });
#undef PRACSIM_U32
#undef PRACSIM_U64
#undef PRACSIM_F64
#undef PRACSIM_BOOL
    return s;
  }();
  return schema;
}

template <class Settings>
void apply_config(const ConfigSchema<Settings>& schema, Settings& settings, const ConfigMap& values) {
  for (const auto& [key, value] : values) {
    bool found = false;
    for (const auto& k : schema) {
      if (k.name == key) {
        k.set(settings, value);
        found = true;
        break;
      }
    }
    if (!found) throw ConfigError("unknown configuration key '" + key + "'");
  }
}

template <class Settings>
ConfigMap dump_config(const ConfigSchema<Settings>& schema, const Settings& settings) {
  ConfigMap out;
  for (const auto& k : schema) out[k.name] = k.get(settings);
  return out;
}

inline void apply_config(SimConfig& config, const ConfigMap& values) {
  apply_config(sim_config_schema(), config, values);
}

inline ConfigMap dump_config(const SimConfig& config) { return dump_config(sim_config_schema(), config); }

}  // namespace pracsim
