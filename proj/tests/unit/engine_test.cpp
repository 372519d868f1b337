#include <gtest/gtest.h>

#include <algorithm>

#include "pracsim/engine.hpp"
#include "pracsim/oracle.hpp"
#include "pracsim/report.hpp"
#include "test_support.hpp"

namespace pracsim {
namespace {

const Design kBuffered[] = {Design::unified_fcfs, Design::unified_sorted, Design::unified_approxmax,
                            Design::perrow};

SimConfig sequential_config(Design d) {
  SimConfig c;
  c.buffer.design = d;
  c.trace.generator = Generator::sequential;
  c.trace.length = 4096;
  return c;
}

TEST(Engine, SequentialPerRowCoalescesFourToOne) {
  const auto r = run(sequential_config(Design::perrow));
  EXPECT_EQ(r.ledger.counter_acts, 1024u);
  EXPECT_EQ(r.normalized_acts, 0.25);
  EXPECT_EQ(r.batches_by_trigger[static_cast<int>(Trigger::m_ready)], 1024u);
}

TEST(Engine, SequentialChronusIsOnePerActivation) {
  const auto r = run(sequential_config(Design::chronus));
  EXPECT_EQ(r.ledger.counter_acts, 4096u);
  EXPECT_EQ(r.normalized_acts, 1.0);
}

TEST(Engine, LedgerCountsEveryActivation) {
  const auto r = run(sequential_config(Design::unified_fcfs));
  EXPECT_EQ(r.ledger.data_acts, 4096u);
  EXPECT_EQ(r.ledger.data_cols, 4096u);
  EXPECT_EQ(r.ledger.counter_rmw_bytes, 4096u);
  EXPECT_EQ(r.events, 4096u);
}

// Counter row of the hammered row is never touched by fillers, so the k_limit
// flushes apply the target's increments in groups of K.
std::uint64_t true_count_at_first_alert(Design d, std::uint32_t k, std::uint32_t* alerts_out = nullptr) {
  SimConfig c;
  c.buffer.design = d;
  c.buffer.k_limit = k;
  c.mitigation.proactive_interval = 0;
  c.record_log = true;
  c.trace.generator = Generator::hammer;
  c.trace.target_row = 5000;
  c.trace.gap = 3;
  c.trace.length = 400;
  const auto trace = load_trace(c);
  const auto result = simulate(c, trace);
  const auto target = map_row(c.geometry, 0, 5000);
  std::uint64_t count = 0;
  std::size_t li = 0;
  for (const auto& ev : trace) {
    if (ev.data_row == 5000) ++count;
    for (; li < result.log.size() && result.log[li].slot == ev.slot; ++li) {
      const auto& rec = result.log[li];
      if (rec.trigger == LogTrigger::alert && rec.row_id == target.row_id &&
          rec.byte_ids[0] == target.byte_id) {
        if (alerts_out) *alerts_out = static_cast<std::uint32_t>(result.report.alerts);
        return count;
      }
    }
  }
  return 0;
}

TEST(Engine, HammerAlertsAtEffectiveThreshold) {
  EXPECT_EQ(true_count_at_first_alert(Design::perrow, 4), 28u);
  EXPECT_EQ(true_count_at_first_alert(Design::unified_approxmax, 4), 28u);
  EXPECT_EQ(true_count_at_first_alert(Design::chronus, 4), 32u);
}

TEST(Engine, EffectiveThresholdFollowsStalenessBound) {
  SimConfig c;
  EXPECT_EQ(c.mitigation.resolve(c.buffer).n_bo_effective, 28u);
  c.buffer.k_trigger = KTrigger::repcount;
  EXPECT_EQ(c.mitigation.resolve(c.buffer).n_bo_effective, 27u);
  c.buffer.design = Design::chronus;
  EXPECT_EQ(c.mitigation.resolve(c.buffer).n_bo_effective, 32u);
  c.mitigation.n_bo_effective = 20;
  EXPECT_EQ(c.mitigation.resolve(c.buffer).n_bo_effective, 20u);
}

TEST(Engine, ProactiveMitigationEveryInterval) {
  SimConfig c;
  c.geometry.banks = 2;
  c.trace.generator = Generator::uniform;
  c.trace.banks = 2;
  c.trace.length = 1680;
  c.buffer.design = Design::chronus;
  c.mitigation.n_bo = 255;
  const auto r = run(c);
  // Ten ticks, one per bank each, every bank has non-zero counters by then.
  EXPECT_EQ(r.proactive_mitigations, 20u);
  EXPECT_EQ(r.alerts, 0u);
  EXPECT_EQ(r.ledger.mitigation_acts, r.mitigations);
}

struct Variant {
  Design design;
  CacheKind cache;
  std::uint32_t capacity;
};

std::vector<Variant> all_variants() {
  std::vector<Variant> out{{Design::chronus, CacheKind::none, 64}};
  for (auto d : kBuffered) {
    for (auto k : {CacheKind::none, CacheKind::lru4way, CacheKind::tinylfu}) {
      for (std::uint32_t cap : {8u, 64u}) {
        if (d == Design::perrow && cap != 64) continue;
        out.push_back({d, k, cap});
      }
    }
  }
  return out;
}

SimConfig variant_config(const Variant& v, const DramGeometry& g, bool mitigations) {
  SimConfig c;
  c.geometry = g;
  c.buffer.design = v.design;
  c.buffer.capacity = v.capacity;
  c.cache.kind = v.cache;
  c.cache.entries = 16;
  c.mitigation.enabled = mitigations;
  c.mitigation.n_bo = 20;
  c.mitigation.proactive_interval = 37;
  c.metrics.enabled = false;
  c.record_log = true;
  return c;
}

// Every design, with and without caches, matches the Chronus reference after
// drain when mitigations are off, and passes every oracle rule.
TEST(EngineProperties, ConservationAndOracleWithoutMitigations) {
  const auto g = testing::toy_geometry(2);
  for (std::uint64_t seed = 1; seed <= 12; ++seed) {
    Rng rng(seed);
    const auto trace = testing::random_trace(rng, g, 2500);
    const auto reference = chronus_reference(trace, g);
    for (const auto& v : all_variants()) {
      const auto c = variant_config(v, g, false);
      const auto r = simulate(c, trace);
      SCOPED_TRACE(c.policy_id() + " seed " + std::to_string(seed));
      ASSERT_EQ(r.final_counters, reference);
      OracleParams p;
      p.geometry = g;
      p.m_batch = c.buffer.m_batch;
      p.staleness_bound = c.buffer.staleness_bound();
      p.reported_counter_acts = r.report.ledger.counter_acts;
      p.final_counters = &r.final_counters;
      const auto replay = pracsim::replay(trace, r.log, p);
      ASSERT_TRUE(replay.verdict.pass) << replay.verdict.message << " at slot " << replay.verdict.slot;
      if (v.cache == CacheKind::none) {
        ASSERT_EQ(r.report.ledger.counter_rmw_bytes, trace.size());
      }
    }
  }
}

// With alerts and proactive mitigations the oracle still accepts every log,
// and final counters equal the mitigation-aware reference.
TEST(EngineProperties, OracleWithMitigations) {
  const auto g = testing::toy_geometry(2);
  for (std::uint64_t seed = 21; seed <= 30; ++seed) {
    Rng rng(seed);
    const auto trace = testing::random_trace(rng, g, 2500);
    for (const auto& v : all_variants()) {
      const auto c = variant_config(v, g, true);
      const auto r = simulate(c, trace);
      SCOPED_TRACE(c.policy_id() + " seed " + std::to_string(seed));
      OracleParams p;
      p.geometry = g;
      p.m_batch = c.buffer.m_batch;
      p.staleness_bound = c.buffer.staleness_bound();
      p.reported_counter_acts = r.report.ledger.counter_acts;
      p.final_counters = &r.final_counters;
      const auto verdict = verify(trace, r.log, p);
      ASSERT_TRUE(verdict.pass) << verdict.message << " at slot " << verdict.slot;
      ASSERT_GT(r.report.mitigations, 0u);
    }
  }
}

// Pending-mode flushes keep at most K-1 increments buffered once a shadow is
// over; repcount mode allows one more.
TEST(EngineProperties, StalenessBoundIsTight) {
  const auto g = testing::toy_geometry(1);
  for (auto kt : {KTrigger::pending, KTrigger::repcount}) {
    std::uint32_t worst = 0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      Rng rng(seed);
      const auto trace = testing::random_trace(rng, g, 3000);
      SimConfig c = variant_config({Design::unified_sorted, CacheKind::none, 64}, g, false);
      c.buffer.k_trigger = kt;
      const auto r = simulate(c, trace);
      OracleParams p;
      p.geometry = g;
      p.staleness_bound = c.buffer.staleness_bound();
      const auto replay = pracsim::replay(trace, r.log, p);
      ASSERT_TRUE(replay.verdict.pass);
      worst = std::max(worst, replay.max_staleness);
    }
    EXPECT_EQ(worst, kt == KTrigger::pending ? 3u : 4u);
  }
}

// Cache evictions add writebacks during a shadow; occupancy between
// activations must still respect the capacity.
TEST(EngineProperties, BufferNeverExceedsCapacity) {
  const auto g = testing::toy_geometry(2);
  for (std::uint64_t seed = 41; seed <= 50; ++seed) {
    Rng rng(seed);
    const auto trace = testing::random_trace(rng, g, 3000);
    for (const auto& v : all_variants()) {
      if (v.design == Design::chronus) continue;
      for (bool mitigations : {false, true}) {
        Simulation sim(variant_config(v, g, mitigations));
        for (const auto& ev : trace) {
          sim.step(ev);
          for (BankId b = 0; b < g.banks; ++b) {
            const auto& buf = sim.buffer(b);
            ASSERT_LE(buf.size(), buf.config().capacity) << sim.config().policy_id() << " slot " << ev.slot;
          }
        }
      }
    }
  }
}

TEST(EngineProperties, NormalizedActivationsWithinUnitInterval) {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (auto d : kBuffered) {
      SimConfig c;
      c.seed = seed;
      c.buffer.design = d;
      c.trace.generator = Generator::zipf;
      c.trace.length = 5000;
      const auto r = run(c);
      EXPECT_GT(r.normalized_acts, 0.0);
      EXPECT_LE(r.normalized_acts, 1.0);
    }
  }
}

TEST(Engine, CacheHitsAvoidCounterActivations) {
  SimConfig c;
  c.buffer.design = Design::perrow;
  c.cache.kind = CacheKind::lru4way;
  c.trace.generator = Generator::hotset;
  c.trace.hot_rows = 16;
  c.trace.hot_fraction = 1.0;
  c.trace.length = 20000;
  c.mitigation.enabled = false;
  const auto with_cache = run(c);
  c.cache.kind = CacheKind::none;
  const auto without = run(c);
  EXPECT_GT(with_cache.cache_stats.hit_rate(), 0.5);
  EXPECT_LT(with_cache.ledger.counter_acts, without.ledger.counter_acts);
}

TEST(Engine, CacheHitAtThresholdRaisesAlert) {
  // One row hammered through a cache: after the first serviced batch its
  // counter lives in the cache and later alerts come from cache hits.
  SimConfig c;
  c.buffer.design = Design::perrow;
  c.cache.kind = CacheKind::lru4way;
  c.mitigation.proactive_interval = 0;
  c.record_log = true;
  c.trace.generator = Generator::hammer;
  c.trace.target_row = 9;
  c.trace.length = 100;
  const auto trace = load_trace(c);
  const auto r = simulate(c, trace);
  EXPECT_EQ(r.report.alerts, 3u);  // at true counts 28, 56 and 84
  std::uint64_t count = 0;
  std::size_t li = 0;
  std::vector<std::uint64_t> alert_counts;
  for (const auto& ev : trace) {
    ++count;
    for (; li < r.log.size() && r.log[li].slot == ev.slot; ++li) {
      if (r.log[li].trigger == LogTrigger::alert) alert_counts.push_back(count);
    }
  }
  EXPECT_EQ(alert_counts, (std::vector<std::uint64_t>{28, 56, 84}));
}

TEST(Engine, RejectsCacheWithChronus) {
  SimConfig c;
  c.buffer.design = Design::chronus;
  c.cache.kind = CacheKind::lru4way;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Engine, RejectsTraceOutsideGeometry) {
  SimConfig c;
  c.trace.banks = 65;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Engine, PolicyIds) {
  SimConfig c;
  EXPECT_EQ(c.policy_id(), "unified_approxmax");
  c.buffer.capacity = 32;
  EXPECT_EQ(c.policy_id(), "unified_approxmax:32");
  c.buffer.design = Design::perrow;
  c.cache.kind = CacheKind::tinylfu;
  EXPECT_EQ(c.policy_id(), "perrow+tinylfu");
}

TEST(Compare, FiveRowTableWithChronusFirst) {
  std::vector<SimConfig> configs;
  for (auto d : kBuffered) {
    SimConfig c;
    c.buffer.design = d;
    c.trace.length = 5000;
    configs.push_back(c);
  }
  const auto table = compare(configs);
  ASSERT_EQ(table.rows.size(), 5u);
  EXPECT_EQ(table.rows[0].report.policy, "chronus");
  EXPECT_EQ(table.rows[0].normalized_acts, 1.0);
  for (std::size_t i = 1; i < 5; ++i) {
    EXPECT_EQ(table.rows[i].report.policy, to_string(kBuffered[i - 1]));
    EXPECT_DOUBLE_EQ(table.rows[i].normalized_acts, table.rows[i].report.normalized_acts);
  }
}

TEST(Compare, RejectsMismatchedTraces) {
  SimConfig a, b;
  b.seed = 2;
  const std::vector<SimConfig> configs{a, b};
  EXPECT_THROW(compare(configs), ConfigError);
}

TEST(Engine, DeterministicReports) {
  for (auto d : kBuffered) {
    SimConfig c;
    c.buffer.design = d;
    c.cache.kind = d == Design::perrow ? CacheKind::tinylfu : CacheKind::none;
    c.trace.generator = Generator::zipf;
    c.trace.banks = 8;
    c.trace.length = 8000;
    EXPECT_EQ(to_json(run(c)).dump(), to_json(run(c)).dump());
  }
}

TEST(Engine, StepAfterFinishIsAnError) {
  Simulation sim(SimConfig{});
  sim.step({0, 0, 0});
  sim.finish();
  EXPECT_THROW(sim.step({1, 0, 0}), std::logic_error);
}

}  // namespace
}  // namespace pracsim
