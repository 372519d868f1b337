// pracsim: command-line front end for the counter-buffer simulator.
//
//   pracsim gen      --generator zipf --length 100000 --out t.trace
//   pracsim run      --policy perrow --trace t.trace --batch-log b.csv
//   pracsim compare  --designs unified_fcfs,unified_approxmax:32,perrow+lru4way
//   pracsim analyze  --trace t.trace --format csv
//   pracsim verify   --trace t.trace --log b.csv --counters c.csv --report r.json
//
// Exit codes: 0 ok, 1 usage, 2 verification failure, 3 runtime error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pracsim/config.hpp"
#include "pracsim/oracle.hpp"
#include "pracsim/pracsim.hpp"
#include "pracsim/report.hpp"

namespace {

using namespace pracsim;

enum Exit : int { kOk = 0, kUsage = 1, kVerifyFailed = 2, kRuntime = 3 };

struct Failure {
  int exit;
  std::string code;
  std::string message;
};

/// Options shared by every subcommand.
struct Common {
  std::string config_path;
  std::map<std::string, std::string> flags;  // schema key -> raw value
  std::string policy;
  std::string trace;
  std::string generator;
  std::string length;
  std::string out;
  std::string format = "json";
  bool dump_config = false;
};

void add_common(CLI::App& app, Common& c, bool with_format) {
  app.add_option("--config", c.config_path, "key = value configuration file")->check(CLI::ExistingFile);
  for (const auto& key : sim_config_schema()) {
    app.add_option_function<std::string>(
           "--" + key.name, [&c, name = key.name](const std::string& v) { c.flags[name] = v; }, key.help)
        ->group("Configuration keys");
  }
  app.add_option("--policy", c.policy, "design[:capacity][+cache]; sets buffer.design and friends");
  app.add_option("--trace", c.trace, "alias of --trace.path");
  app.add_option("--generator", c.generator, "alias of --trace.generator");
  app.add_option("--length", c.length, "alias of --trace.length");
  app.add_option("--out,-o", c.out, "output file (default: stdout)");
  if (with_format) app.add_option("--format", c.format, "json|csv")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--dump-config", c.dump_config, "print the resolved configuration and exit");
}

/// Applies `design[:capacity][+cache]` to a configuration.
void apply_policy(SimConfig& config, std::string_view spec) {
  auto plus = spec.find('+');
  if (plus != std::string_view::npos) {
    config.cache.kind = parse_cache_kind(spec.substr(plus + 1));
    spec = spec.substr(0, plus);
  } else {
    config.cache.kind = CacheKind::none;
  }
  auto colon = spec.find(':');
  if (colon != std::string_view::npos) {
    config.buffer.capacity = detail::parse_u32("capacity", spec.substr(colon + 1));
    spec = spec.substr(0, colon);
  }
  config.buffer.design = parse_design(spec);
}

SimConfig resolve(const Common& c) {
  ConfigMap values;
  if (!c.config_path.empty()) {
    std::ifstream in(c.config_path);
    if (!in) throw IoError("cannot open config '" + c.config_path + "'");
    values = parse_config(in);
  }
  auto alias = [&](const std::string& raw, const char* key) {
    if (!raw.empty()) values[key] = raw;
  };
  alias(c.trace, "trace.path");
  alias(c.generator, "trace.generator");
  alias(c.length, "trace.length");
  for (const auto& [k, v] : c.flags) values[k] = v;

  SimConfig config;
  apply_config(config, values);
  if (!c.policy.empty()) apply_policy(config, c.policy);
  return config;
}

/// Writes to `path`, or stdout when empty.
template <class Fn>
void emit(const std::string& path, Fn&& fn, bool binary = false) {
  if (path.empty() || path == "-") {
    fn(std::cout);
    std::cout.flush();
    return;
  }
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw Failure{kRuntime, "io", "cannot write '" + path + "'"};
  fn(out);
  if (!out) throw Failure{kRuntime, "io", "write to '" + path + "' failed"};
}

bool maybe_dump(const Common& c, const SimConfig& config) {
  if (!c.dump_config) return false;
  emit(c.out, [&](std::ostream& o) { write_config(o, dump_config(config)); });
  return true;
}

int cmd_gen(const Common& c) {
  SimConfig config = resolve(c);
  if (maybe_dump(c, config)) return kOk;
  if (c.out.empty()) throw Failure{kUsage, "usage", "gen needs --out"};
  config.trace_path.clear();
  config.validate();
  const auto trace = load_trace(config);
  auto format = config.trace_format;
  if (format == TraceFormat::automatic) {
    format = c.out.ends_with(".bin") || c.out.ends_with(".btrace") ? TraceFormat::binary : TraceFormat::text;
  }
  const bool binary = format == TraceFormat::binary;
  emit(c.out, [&](std::ostream& o) { binary ? write_binary_trace(o, trace) : write_trace(o, trace); }, binary);
  return kOk;
}

int cmd_run(const Common& c, const std::string& log_path, const std::string& dump_path) {
  SimConfig config = resolve(c);
  if (maybe_dump(c, config)) return kOk;
  config.record_log = !log_path.empty();
  config.validate();
  const auto trace = load_trace(config);
  const auto result = simulate(config, trace);
  if (!log_path.empty()) emit(log_path, [&](std::ostream& o) { write_batch_log(o, result.log); });
  if (!dump_path.empty()) {
    emit(dump_path, [&](std::ostream& o) { write_counter_dump(o, result.final_counters, config.geometry); });
  }
  emit(c.out, [&](std::ostream& o) {
    if (c.format == "csv") {
      write_csv(o, result.report);
    } else {
      o << to_json(result.report).dump(2) << '\n';
    }
  });
  return kOk;
}

int cmd_compare(const Common& c, const std::vector<std::string>& designs) {
  const SimConfig base = resolve(c);
  if (maybe_dump(c, base)) return kOk;
  std::vector<SimConfig> configs;
  for (const auto& d : designs) {
    SimConfig config = base;
    apply_policy(config, d);
    configs.push_back(std::move(config));
  }
  const auto table = compare(configs);
  emit(c.out, [&](std::ostream& o) {
    if (c.format == "csv") {
      write_csv(o, table);
    } else {
      o << to_json(table).dump(2) << '\n';
    }
  });
  return kOk;
}

int cmd_analyze(const Common& c) {
  SimConfig config = resolve(c);
  if (maybe_dump(c, config)) return kOk;
  config.validate();
  const auto trace = load_trace(config);
  TraceProfile profile(config.geometry);
  for (const auto& ev : trace) profile.observe(map_row(config.geometry, ev.bank, ev.data_row));
  const auto summary = profile.summarize(config.metrics);
  emit(c.out, [&](std::ostream& o) {
    if (c.format == "csv") {
      write_csv(o, summary, trace.size());
    } else {
      Json j{{"events", trace.size()}};
      j.update(to_json(summary));
      o << j.dump(2) << '\n';
    }
  });
  return kOk;
}

int cmd_verify(const Common& c, const std::string& log_path, const std::string& counters_path,
               const std::string& report_path) {
  SimConfig config = resolve(c);
  if (maybe_dump(c, config)) return kOk;
  if (config.trace_path.empty()) throw Failure{kUsage, "usage", "verify needs --trace"};
  if (log_path.empty()) throw Failure{kUsage, "usage", "verify needs --log"};

  OracleParams params;
  params.geometry = config.geometry;
  BufferConfig buffer = config.buffer;
  if (!report_path.empty()) {
    std::ifstream in(report_path);
    if (!in) throw Failure{kRuntime, "io", "cannot open '" + report_path + "'"};
    const Json report = Json::parse(in);
    const auto& b = report.at("buffer");
    buffer.design = parse_design(b.at("design").get<std::string>());
    buffer.capacity = b.at("capacity").get<std::uint32_t>();
    buffer.m_batch = b.at("m_batch").get<std::uint32_t>();
    buffer.k_limit = b.at("k_limit").get<std::uint32_t>();
    buffer.k_trigger = parse_k_trigger(b.at("k_trigger").get<std::string>());
    params.reported_counter_acts = report.at("counter_acts").get<std::uint64_t>();
  }
  params.m_batch = buffer.m_batch;
  params.staleness_bound = buffer.staleness_bound();

  config.validate();
  const auto trace = load_trace(config);
  std::ifstream log_in(log_path);
  if (!log_in) throw Failure{kRuntime, "io", "cannot open '" + log_path + "'"};
  const auto log = read_batch_log(log_in);

  CounterState final_counters;
  if (!counters_path.empty()) {
    std::ifstream in(counters_path);
    if (!in) throw Failure{kRuntime, "io", "cannot open '" + counters_path + "'"};
    final_counters = read_counter_dump(in, config.geometry);
    params.final_counters = &final_counters;
  }

  const auto verdict = verify(trace, log, params);
  Json j{{"pass", verdict.pass}, {"rule", static_cast<int>(verdict.rule)}};
  if (!verdict.pass) {
    j["slot"] = verdict.slot;
    j["message"] = verdict.message;
  }
  emit(c.out, [&](std::ostream& o) { o << j.dump() << '\n'; });
  if (!verdict.pass) {
    throw Failure{kVerifyFailed, "verification",
                  "rule " + std::to_string(static_cast<int>(verdict.rule)) + " at slot " +
                      std::to_string(verdict.slot) + ": " + verdict.message};
  }
  return kOk;
}

void report_failure(const Failure& f, bool machine) {
  if (machine) {
    std::cerr << Json{{"error", f.code}, {"exit", f.exit}, {"message", f.message}}.dump() << '\n';
  } else {
    std::cerr << "pracsim: " << f.message << '\n';
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counter request buffering simulator"};
  app.require_subcommand(1);
  bool machine = false;
  app.add_flag("--machine", machine, "errors as JSON on stderr");

  Common common;
  auto* gen = app.add_subcommand("gen", "write a synthetic trace");
  add_common(*gen, common, false);

  std::string log_path, dump_path;
  auto* run = app.add_subcommand("run", "simulate one configuration");
  add_common(*run, common, true);
  run->add_option("--batch-log", log_path, "write the batch log (CSV)");
  run->add_option("--counter-dump", dump_path, "write final counters (CSV)");

  std::vector<std::string> designs{"unified_fcfs", "unified_approxmax", "unified_sorted", "perrow"};
  auto* cmp = app.add_subcommand("compare", "run several designs on one trace against Chronus");
  add_common(*cmp, common, true);
  cmp->add_option("--designs", designs, "comma-separated design[:capacity][+cache] list")->delimiter(',');

  auto* analyze = app.add_subcommand("analyze", "characterize a trace without simulating");
  add_common(*analyze, common, true);

  std::string verify_log, verify_counters, verify_report;
  auto* ver = app.add_subcommand("verify", "check a batch log against the reference replay");
  add_common(*ver, common, false);
  ver->add_option("--log", verify_log, "batch log (CSV)");
  ver->add_option("--counters", verify_counters, "final counter dump (CSV); enables the final-state check");
  ver->add_option("--report", verify_report, "JSON report of the run; supplies buffer settings and counter_acts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report_failure({kUsage, "usage", e.what()}, machine);
    if (!machine) std::cerr << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kUsage;
  }

  try {
    if (gen->parsed()) return cmd_gen(common);
    if (run->parsed()) return cmd_run(common, log_path, dump_path);
    if (cmp->parsed()) return cmd_compare(common, designs);
    if (analyze->parsed()) return cmd_analyze(common);
    if (ver->parsed()) return cmd_verify(common, verify_log, verify_counters, verify_report);
  } catch (const Failure& f) {
    report_failure(f, machine);
    return f.exit;
  } catch (const ConfigError& e) {
    report_failure({kUsage, "config", e.what()}, machine);
    return kUsage;
  } catch (const IoError& e) {
    report_failure({kRuntime, "io", e.what()}, machine);
    return kRuntime;
  } catch (const LogFormatError& e) {
    report_failure({kRuntime, "log_format", e.what()}, machine);
    return kRuntime;
  } catch (const ParseError& e) {
    report_failure({kRuntime, "parse", e.what()}, machine);
    return kRuntime;
  } catch (const RangeError& e) {
    report_failure({kRuntime, "range", e.what()}, machine);
    return kRuntime;
  } catch (const Json::exception& e) {
    report_failure({kRuntime, "report_format", e.what()}, machine);
    return kRuntime;
  } catch (const std::exception& e) {
    report_failure({kRuntime, "internal", e.what()}, machine);
    return kRuntime;
  }
  return kUsage;
}
