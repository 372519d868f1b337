// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Each criterion also fails when it exceeds its time budget.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pracsim/pracsim.hpp"

using namespace pracsim;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

const Design kBuffered[] = {Design::unified_fcfs, Design::unified_approxmax, Design::unified_sorted,
                            Design::perrow};

std::string name(Design d) { return std::string(to_string(d)); }

SimConfig quiet(const SimConfig& base, Design d) {
  SimConfig c = base;
  c.buffer.design = d;
  c.mitigation.enabled = false;
  c.metrics.enabled = false;
  return c;
}

// 50 traces of 10,000 events cycling through every generator.
std::vector<SimConfig> mixed_suite() {
  const Generator gens[] = {Generator::zipf, Generator::uniform, Generator::hotset,
                            Generator::roundrobin, Generator::sequential, Generator::hammer};
  std::vector<SimConfig> out;
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SimConfig c;
    c.seed = seed;
    c.trace.generator = gens[seed % 6];
    c.trace.length = 10000;
    c.trace.banks = 1 + static_cast<std::uint32_t>(seed % 4);
    c.trace.start_row = static_cast<RowIndex>(seed * 997);
    c.trace.target_row = static_cast<RowIndex>(seed * 131);
    c.trace.gap = static_cast<std::uint32_t>(seed % 5);
    c.trace.hot_rows = 16 + static_cast<std::uint32_t>(seed % 3) * 48;
    out.push_back(c);
  }
  return out;
}

OracleParams oracle_params(const SimConfig& c, const RunResult& r) {
  OracleParams p;
  p.geometry = c.geometry;
  p.m_batch = c.buffer.m_batch;
  p.staleness_bound = c.buffer.staleness_bound();
  p.reported_counter_acts = r.report.ledger.counter_acts;
  p.final_counters = &r.final_counters;
  return p;
}

Outcome conservation() {
  Outcome o;
  std::size_t runs = 0;
  for (const auto& base : mixed_suite()) {
    const auto trace = load_trace(base);
    const auto reference = chronus_reference(trace, base.geometry);
    for (auto d : kBuffered) {
      const auto r = simulate(quiet(base, d), trace);
      ++runs;
      o.require(r.final_counters == reference,
                name(d) + " differs from the reference on seed " + std::to_string(base.seed));
    }
  }
  if (o.pass) o.detail = std::to_string(runs) + " runs match the reference exactly";
  return o;
}

Outcome staleness() {
  Outcome o;
  std::uint32_t worst = 0;
  for (const auto& base : mixed_suite()) {
    const auto trace = load_trace(base);
    for (auto d : kBuffered) {
      SimConfig c = quiet(base, d);
      c.record_log = true;
      const auto r = simulate(c, trace);
      auto p = oracle_params(c, r);
      p.staleness_bound = 4;
      const auto replay = pracsim::replay(trace, r.log, p);
      worst = std::max(worst, replay.max_staleness);
      o.require(replay.verdict.pass, name(d) + " seed " + std::to_string(base.seed) + ": " +
                                         replay.verdict.message);
    }
  }
  if (o.pass) o.detail = "largest lag " + std::to_string(worst) + " <= 4, all oracle rules hold";
  return o;
}

Outcome coalescing() {
  Outcome o;
  SimConfig base;
  base.trace.generator = Generator::sequential;
  base.trace.length = 4096;
  const auto trace = load_trace(base);
  const auto perrow = simulate(quiet(base, Design::perrow), trace).report;
  o.require(perrow.ledger.counter_acts == 1024,
            "perrow: " + std::to_string(perrow.ledger.counter_acts) + " activations, expected 1024");
  o.require(perrow.normalized_acts == 0.25, "perrow normalized " + fmt("%.6f", perrow.normalized_acts));
  std::string detail = "perrow 1024 (0.25)";
  for (auto d : {Design::unified_fcfs, Design::unified_approxmax, Design::unified_sorted}) {
    SimConfig c = quiet(base, d);
    c.buffer.capacity = 64;
    const auto r = simulate(c, trace).report;
    o.require(r.normalized_acts <= 0.30, name(d) + " normalized " + fmt("%.4f", r.normalized_acts));
    detail += ", " + name(d) + fmt(" %.4f", r.normalized_acts);
  }
  if (o.pass) o.detail = detail;
  return o;
}

// Ten seeds, each contributing one zipf(1.0) and one hotset trace over four
// banks, generator parameters at their defaults.
std::vector<SimConfig> policy_suite() {
  std::vector<SimConfig> out;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    for (auto g : {Generator::zipf, Generator::hotset}) {
      SimConfig c;
      c.seed = seed;
      c.trace.generator = g;
      c.trace.zipf_exponent = 1.0;
      c.trace.banks = 4;
      c.trace.length = 40000;
      out.push_back(c);
    }
  }
  return out;
}

std::map<std::string, double> mean_normalized(const std::vector<SimConfig>& suite) {
  std::map<std::string, double> sums;
  for (const auto& base : suite) {
    std::vector<SimConfig> configs;
    for (auto d : kBuffered) configs.push_back(quiet(base, d));
    for (std::uint32_t cap : {16u, 32u}) {
      SimConfig c = quiet(base, Design::unified_approxmax);
      c.buffer.capacity = cap;
      configs.push_back(c);
    }
    const auto table = compare(configs);
    for (const auto& row : table.rows) sums[row.report.policy] += row.normalized_acts;
  }
  for (auto& [k, v] : sums) v /= static_cast<double>(suite.size());
  return sums;
}

const std::map<std::string, double>& policy_means() {
  static const auto means = mean_normalized(policy_suite());
  return means;
}

Outcome ordering() {
  Outcome o;
  const auto& m = policy_means();
  const double fcfs = m.at("unified_fcfs"), amax = m.at("unified_approxmax");
  const double sorted = m.at("unified_sorted"), perrow = m.at("perrow");
  o.require(perrow <= sorted, "perrow above sorted");
  o.require(sorted <= amax, "sorted above approxmax");
  o.require(amax <= fcfs, "approxmax above fcfs");
  o.require(fcfs <= 1.0, "fcfs above chronus");
  const double gap = std::abs(amax - sorted) / sorted;
  o.require(gap <= 0.10, "approxmax differs from sorted by " + fmt("%.3f", gap));
  o.detail = "perrow " + fmt("%.4f", perrow) + " <= sorted " + fmt("%.4f", sorted) + " <= approxmax " +
             fmt("%.4f", amax) + " <= fcfs " + fmt("%.4f", fcfs) + " <= 1; approxmax/sorted gap " +
             fmt("%.3f", gap) + (o.pass ? "" : "; " + o.detail);
  return o;
}

Outcome capacity() {
  Outcome o;
  const auto& m = policy_means();
  const double c16 = m.at("unified_approxmax:16"), c32 = m.at("unified_approxmax:32");
  const double c64 = m.at("unified_approxmax");
  o.require(c16 > c32 && c32 > c64, "not strictly decreasing");
  o.detail = "(suite shared with criterion 4) capacity 16 " + fmt("%.4f", c16) + " > 32 " + fmt("%.4f", c32) + " > 64 " + fmt("%.4f", c64);
  return o;
}

std::vector<std::uint16_t> round_robin(std::size_t n, std::uint16_t rows) {
  std::vector<std::uint16_t> s(n);
  for (std::size_t i = 0; i < n; ++i) s[i] = static_cast<std::uint16_t>(i % rows);
  return s;
}

double brute_sliding(const std::vector<std::uint16_t>& s, std::size_t w) {
  std::uint64_t sum = 0, windows = 0;
  for (std::size_t start = 0; start + w <= s.size(); ++start) {
    std::map<std::uint16_t, std::uint32_t> counts;
    std::uint32_t best = 0;
    for (std::size_t i = start; i < start + w; ++i) best = std::max(best, ++counts[s[i]]);
    sum += best;
    ++windows;
  }
  return static_cast<double>(sum) / static_cast<double>(windows);
}

Outcome metric_correctness() {
  Outcome o;
  const std::vector<std::uint64_t> uniform(64, 10);
  std::vector<std::uint64_t> single(64, 0);
  single[5] = 1000;
  o.require(skew(uniform) == 1.0, "skew of uniform counts");
  o.require(skew(single) == 64.0, "skew of a single row");
  const std::vector<std::uint16_t> one_row(640, 7);
  o.require(window_locality(one_row) == 64.0, "locality of a single-row stream");
  o.require(window_locality(round_robin(640, 64)) == 1.0, "locality of round robin");
  std::vector<std::uint16_t> half(64, 9);
  const auto rr = round_robin(64, 64);
  half.insert(half.end(), rr.begin(), rr.end());
  o.require(window_locality(half) == 32.5, "locality of the half/half stream");
  Rng rng(2024);
  int streams = 0;
  for (std::uint64_t i = 0; i < 20; ++i) {
    const auto rows = static_cast<std::uint16_t>(1 + uniform_below(rng, 64));
    std::vector<std::uint16_t> s(1000);
    std::uint16_t current = 0;
    for (auto& r : s) {
      if (uniform_below(rng, 4) == 0) current = static_cast<std::uint16_t>(uniform_below(rng, rows));
      r = uniform_below(rng, 3) == 0 ? static_cast<std::uint16_t>(uniform_below(rng, rows)) : current;
    }
    o.require(window_locality(s, 64, WindowMode::sliding) == brute_sliding(s, 64),
              "sliding locality differs from brute force on stream " + std::to_string(i));
    ++streams;
  }
  if (o.pass) o.detail = "all examples exact; sliding equals brute force on " + std::to_string(streams) + " streams";
  return o;
}

Outcome cache_finding() {
  Outcome o;
  std::string detail;
  double worst_hit = 0, worst_red = 0, min_hot_hit = 1;
  for (auto kind : {CacheKind::lru4way, CacheKind::tinylfu}) {
    for (auto d : {Design::perrow, Design::unified_approxmax}) {
      for (int hot = 0; hot < 2; ++hot) {
        SimConfig base = quiet(SimConfig{}, d);
        base.trace.banks = 4;
        base.trace.length = 100000;
        if (hot) {
          base.trace.generator = Generator::hotset;
          base.trace.hot_rows = 48;
        } else {
          base.trace.generator = Generator::uniform;
          base.trace.footprint = 8192;
        }
        const auto trace = load_trace(base);
        const auto none = simulate(base, trace).report;
        SimConfig c = base;
        c.cache.kind = kind;
        c.cache.entries = 64;
        const auto with = simulate(c, trace).report;
        const double hit = with.cache_stats.hit_rate();
        const double reduction = 1.0 - static_cast<double>(with.ledger.counter_acts) /
                                           static_cast<double>(none.ledger.counter_acts);
        const std::string id = std::string(to_string(kind)) + "/" + name(d);
        if (hot) {
          o.require(hit > 0.5, id + " hotset hit rate " + fmt("%.4f", hit));
          o.require(with.ledger.counter_acts < none.ledger.counter_acts, id + " hotset activations did not drop");
          min_hot_hit = std::min(min_hot_hit, hit);
        } else {
          o.require(hit < 0.05, id + " uniform hit rate " + fmt("%.4f", hit));
          o.require(reduction < 0.03, id + " uniform reduction " + fmt("%.4f", reduction));
          worst_hit = std::max(worst_hit, hit);
          worst_red = std::max(worst_red, reduction);
        }
      }
    }
  }
  if (o.pass) {
    o.detail = "uniform: hit <= " + fmt("%.4f", worst_hit) + ", reduction <= " + fmt("%.4f", worst_red) +
               "; hotset: hit >= " + fmt("%.4f", min_hot_hit) + " with fewer activations";
  }
  return o;
}

Outcome alert_threshold() {
  Outcome o;
  std::string detail;
  for (auto d : {Design::perrow, Design::unified_approxmax, Design::chronus}) {
    SimConfig c;
    c.buffer.design = d;
    c.buffer.k_limit = 4;
    c.mitigation.proactive_interval = 0;
    c.metrics.enabled = false;
    c.record_log = true;
    c.trace.generator = Generator::hammer;
    c.trace.target_row = 5000;
    c.trace.gap = 3;
    c.trace.length = 400;
    const auto trace = load_trace(c);
    const auto r = simulate(c, trace);
    const auto verdict = verify(trace, r.log, oracle_params(c, r));
    o.require(verdict.pass, name(d) + " oracle: " + verdict.message);
    const auto target = map_row(c.geometry, 0, 5000);
    std::uint64_t count = 0, at = 0;
    std::size_t li = 0;
    for (const auto& ev : trace) {
      if (ev.data_row == 5000) ++count;
      for (; li < r.log.size() && r.log[li].slot == ev.slot; ++li) {
        const auto& rec = r.log[li];
        if (!at && rec.trigger == LogTrigger::alert && rec.row_id == target.row_id &&
            rec.byte_ids.front() == target.byte_id) {
          at = count;
        }
      }
    }
    const std::uint64_t expected = d == Design::chronus ? 32 : 28;
    o.require(r.report.n_bo_effective == expected, name(d) + " effective threshold " +
                                                       std::to_string(r.report.n_bo_effective));
    o.require(at == expected, name(d) + " first mitigation at count " + std::to_string(at));
    detail += (detail.empty() ? "" : ", ") + name(d) + " at " + std::to_string(at);
  }
  if (o.pass) o.detail = "first mitigation: " + detail;
  return o;
}

Outcome energy_linearity() {
  Outcome o;
  double worst_term = 0, worst_affine = 0, literal_min = 1e9, literal_max = 0;
  int pairs = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    SimConfig base;
    base.seed = seed;
    base.trace.generator = seed % 2 ? Generator::zipf : Generator::hotset;
    base.trace.banks = 2;
    base.trace.length = 20000;
    const auto trace = load_trace(base);
    std::vector<SimReport> reports;
    reports.push_back(simulate(quiet(base, Design::chronus), trace).report);
    for (auto d : kBuffered) reports.push_back(simulate(quiet(base, d), trace).report);
    for (std::size_t i = 0; i < reports.size(); ++i) {
      for (std::size_t j = 0; j < reports.size(); ++j) {
        if (i == j) continue;
        const auto& a = reports[i];
        const auto& b = reports[j];
        o.require(a.ledger.counter_rmw_bytes == b.ledger.counter_rmw_bytes, "rmw bytes differ");
        o.require(a.ledger.mitigation_acts == b.ledger.mitigation_acts, "mitigations differ");
        const double acts = static_cast<double>(a.ledger.counter_acts) / static_cast<double>(b.ledger.counter_acts);
        const double term = a.energy->activation_term / b.energy->activation_term;
        // With rmw bytes and mitigations shared, extra = acts * (f e_act - e_extra_rmw) + C.
        const double shared = static_cast<double>(a.ledger.counter_rmw_bytes) * base.energy.e_extra_rmw +
                              static_cast<double>(a.ledger.mitigation_acts) * base.energy.counter_act_factor *
                                  base.energy.e_act;
        const double affine = (a.energy->extra - shared) / (b.energy->extra - shared);
        worst_term = std::max(worst_term, std::abs(term - acts));
        worst_affine = std::max(worst_affine, std::abs(affine - acts));
        const double literal = (a.energy->extra / b.energy->extra) / acts;
        literal_min = std::min(literal_min, literal);
        literal_max = std::max(literal_max, literal);
        ++pairs;
      }
    }
  }
  o.require(worst_term <= 1e-12, "activation-term ratio off by " + fmt("%.3g", worst_term));
  o.require(worst_affine <= 1e-12, "extra minus shared terms off by " + fmt("%.3g", worst_affine));
  const std::string detail = std::to_string(pairs) + " pairs: |term ratio - act ratio| <= " +
                             fmt("%.2g", worst_term) + ", |(extra-C) ratio - act ratio| <= " +
                             fmt("%.2g", worst_affine) + "; total-extra ratio / act ratio in [" +
                             fmt("%.3f", literal_min) + ", " + fmt("%.3f", literal_max) + "] (shared rmw term)";
  o.detail = o.pass ? detail : o.detail + "; " + detail;
  return o;
}

std::string serialize(const SimConfig& c) {
  const auto trace = load_trace(c);
  const auto r = simulate(c, trace);
  std::ostringstream out;
  out << to_json(r.report).dump(2) << '\n';
  write_csv(out, r.report);
  write_batch_log(out, r.log);
  write_counter_dump(out, r.final_counters, c.geometry);
  return out.str();
}

Outcome determinism() {
  Outcome o;
  int configs = 0;
  for (auto d : {Design::chronus, Design::unified_fcfs, Design::unified_approxmax, Design::unified_sorted,
                 Design::perrow}) {
    for (auto kind : {CacheKind::none, CacheKind::lru4way, CacheKind::tinylfu}) {
      if (d == Design::chronus && kind != CacheKind::none) continue;
      SimConfig c;
      c.seed = 77;
      c.buffer.design = d;
      c.cache.kind = kind;
      c.trace.generator = Generator::zipf;
      c.trace.banks = 4;
      c.trace.length = 20000;
      c.metrics.window_mode = WindowMode::sliding;
      c.record_log = true;
      o.require(serialize(c) == serialize(c), c.policy_id() + " output differs between runs");
      ++configs;
    }
  }
  if (o.pass) o.detail = std::to_string(configs) + " configurations byte-identical (report, csv, log, counters)";
  return o;
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {1, "conservation", 30, conservation},
      {2, "staleness bound", 30, staleness},
      {3, "sequential coalescing", 1, coalescing},
      {4, "policy ordering", 120, ordering},
      {5, "buffer-size monotonicity", 60, capacity},
      {6, "metric correctness", 5, metric_correctness},
      {7, "cache finding", 60, cache_finding},
      {8, "alert threshold", 1, alert_threshold},
      {9, "energy linearity", 10, energy_linearity},
      {10, "determinism", 10, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && secs > c.budget_s) {
      o.pass = false;
      o.detail = "took " + fmt("%.2f", secs) + " s, budget " + fmt("%.0f", c.budget_s) + " s";
    }
    if (!o.pass) ++failed;
    std::printf("%s criterion %d (%s) [%.2fs]: %s\n", o.pass ? "PASS" : "FAIL", c.id, c.title, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed ? 1 : 0;
}
