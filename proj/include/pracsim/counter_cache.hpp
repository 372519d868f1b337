#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pracsim/errors.hpp"
#include "pracsim/random.hpp"

namespace pracsim {

enum class CacheKind { none, lru4way, tinylfu };

inline std::string_view to_string(CacheKind k) {
  switch (k) {
    case CacheKind::none: return "none";
    case CacheKind::lru4way: return "lru4way";
    case CacheKind::tinylfu: return "tinylfu";
  }
  return "?";
}

inline CacheKind parse_cache_kind(std::string_view name) {
  if (name == "none") return CacheKind::none;
  if (name == "lru4way" || name == "lru") return CacheKind::lru4way;
  if (name == "tinylfu") return CacheKind::tinylfu;
  throw ConfigError("unknown cache kind '" + std::string(name) + "'");
}

struct CacheConfig {
  static constexpr std::uint32_t kWays = 4;

  CacheKind kind = CacheKind::none;
  std::uint32_t entries = 64;          // per bank
  std::uint32_t sketch_width = 256;    // counters per count-min row
  std::uint64_t halving_period = 0;    // accesses between sketch halvings; 0 = 10 x entries

  bool enabled() const { return kind != CacheKind::none; }

  std::uint64_t effective_halving_period() const {
    return halving_period ? halving_period : 10ULL * entries;
  }

  void validate() const {
    if (!enabled()) return;
    if (entries < kWays || entries % kWays != 0) {
      throw ConfigError("cache.entries must be a positive multiple of 4");
    }
    if (kind == CacheKind::tinylfu && sketch_width == 0) {
      throw ConfigError("cache.sketch_width must be > 0");
    }
  }
};

/// Count-min sketch with two rows of saturating 4-bit counters and periodic
/// halving (the frequency filter of a TinyLFU admission policy).
class FrequencySketch {
 public:
  static constexpr std::uint8_t kMax = 15;
  static constexpr std::size_t kRows = 2;

  FrequencySketch(std::uint32_t width, std::uint64_t halving_period, std::uint64_t salt)
      : width_(width), period_(halving_period), salt_(salt) {
    for (auto& row : rows_) row.assign(width_, 0);
  }

  void record(std::uint64_t key) {
    for (std::size_t r = 0; r < kRows; ++r) {
      auto& c = rows_[r][slot(r, key)];
      if (c < kMax) ++c;
    }
    if (++accesses_ >= period_) {
      accesses_ = 0;
      for (auto& row : rows_) {
        for (auto& c : row) c >>= 1;
      }
    }
  }

  std::uint8_t estimate(std::uint64_t key) const {
    std::uint8_t best = kMax;
    for (std::size_t r = 0; r < kRows; ++r) best = std::min(best, rows_[r][slot(r, key)]);
    return best;
  }

 private:
  std::size_t slot(std::size_t row, std::uint64_t key) const {
    return splitmix64(key ^ (salt_ + 0x632be59bd9b4e019ULL * (row + 1))) % width_;
  }

  std::uint32_t width_;
  std::uint64_t period_;
  std::uint64_t salt_;
  std::uint64_t accesses_ = 0;
  std::array<std::vector<std::uint8_t>, kRows> rows_;
};

struct CacheLine {
  std::uint32_t tag = 0;  // counter_index within the bank
  std::uint8_t value = 0;
  bool dirty = false;
  bool valid = false;
  std::uint64_t last_use = 0;
};

struct EvictedLine {
  std::uint32_t tag = 0;
  std::uint8_t value = 0;
};

struct CacheStats {
  std::uint64_t hits = 0;
  std::uint64_t misses = 0;
  std::uint64_t fills = 0;
  std::uint64_t rejected_fills = 0;
  std::uint64_t dirty_evictions = 0;
  std::uint64_t writeback_rehits = 0;

  CacheStats& operator+=(const CacheStats& o) {
    hits += o.hits;
    misses += o.misses;
    fills += o.fills;
    rejected_fills += o.rejected_fills;
    dirty_evictions += o.dirty_evictions;
    writeback_rehits += o.writeback_rehits;
    return *this;
  }

  double hit_rate() const {
    const auto total = hits + misses;
    return total ? static_cast<double>(hits) / static_cast<double>(total) : 0.0;
  }
};

/// Per-bank byte-level counter cache, 4-way set associative with LRU
/// replacement, optionally gated by a TinyLFU-style admission filter. Lines
/// are filled clean after a serviced read-modify-write; hits update the line
/// in place and mark it dirty. Set index = low bits of the counter index.
class CounterCache {
 public:
  CounterCache(const CacheConfig& config, std::uint64_t salt)
      : config_(config),
        sets_(config.entries / CacheConfig::kWays),
        lines_(config.entries),
        sketch_(config.sketch_width ? config.sketch_width : 1, config.effective_halving_period(),
                salt) {
    config_.validate();
  }

  /// Demand access for one activation. On a hit the cached value is
  /// incremented (saturating) and the line is returned; nullptr on a miss.
  CacheLine* access(std::uint32_t tag) {
    if (config_.kind == CacheKind::tinylfu) sketch_.record(tag);
    CacheLine* line = find(tag);
    if (!line) {
      ++stats_.misses;
      return nullptr;
    }
    ++stats_.hits;
    line->last_use = ++clock_;
    if (line->value < 255) ++line->value;
    line->dirty = true;
    return line;
  }

  CacheLine* find(std::uint32_t tag) {
    for (auto& line : set_of(tag)) {
      if (line.valid && line.tag == tag) return &line;
    }
    return nullptr;
  }

  /// Installs a clean copy after a serviced RMW. Admission may refuse it; a
  /// dirty victim is returned so it can be written back.
  std::optional<EvictedLine> fill_clean(std::uint32_t tag, std::uint8_t value) {
    return install(tag, value, false, config_.kind == CacheKind::tinylfu);
  }

  /// Installs a dirty line unconditionally (a buffered writeback that was hit
  /// again moves back into the cache).
  std::optional<EvictedLine> install_dirty(std::uint32_t tag, std::uint8_t value) {
    return install(tag, value, true, false);
  }

  /// Cleans every dirty line and returns their contents (end-of-run flush).
  std::vector<EvictedLine> flush_dirty() {
    std::vector<EvictedLine> out;
    for (auto& line : lines_) {
      if (line.valid && line.dirty) {
        out.push_back({line.tag, line.value});
        line.dirty = false;
      }
    }
    std::sort(out.begin(), out.end(),
              [](const EvictedLine& a, const EvictedLine& b) { return a.tag < b.tag; });
    return out;
  }

  std::span<const CacheLine> lines() const { return lines_; }
  const CacheStats& stats() const { return stats_; }
  CacheStats& stats() { return stats_; }
  const FrequencySketch& sketch() const { return sketch_; }

 private:
  std::span<CacheLine> set_of(std::uint32_t tag) {
    const std::size_t set = tag % sets_;
    return std::span<CacheLine>(lines_).subspan(set * CacheConfig::kWays, CacheConfig::kWays);
  }

  std::optional<EvictedLine> install(std::uint32_t tag, std::uint8_t value, bool dirty,
                                     bool admission) {
    auto set = set_of(tag);
    CacheLine* slot = nullptr;
    for (auto& line : set) {
      if (line.valid && line.tag == tag) {
        slot = &line;
        break;
      }
    }
    std::optional<EvictedLine> evicted;
    if (!slot) {
      for (auto& line : set) {
        if (!line.valid) {
          slot = &line;
          break;
        }
      }
    }
    if (!slot) {
      slot = &*std::min_element(set.begin(), set.end(), [](const CacheLine& a, const CacheLine& b) {
        return a.last_use < b.last_use;
      });
      if (admission && sketch_.estimate(tag) <= sketch_.estimate(slot->tag)) {
        ++stats_.rejected_fills;
        return std::nullopt;
      }
      if (slot->dirty) {
        evicted = EvictedLine{slot->tag, slot->value};
        ++stats_.dirty_evictions;
      }
    }
    *slot = CacheLine{tag, value, dirty, true, ++clock_};
    ++stats_.fills;
    return evicted;
  }

  CacheConfig config_;
  std::size_t sets_;
  std::vector<CacheLine> lines_;
  FrequencySketch sketch_;
  CacheStats stats_;
  std::uint64_t clock_ = 0;
};

}  // namespace pracsim
