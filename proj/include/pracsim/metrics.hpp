#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"

namespace pracsim {

/// Max/mean ratio of accesses across the counter rows of one bank; rows with
/// no accesses count toward the mean. Empty when the bank saw no accesses.
inline std::optional<double> skew(std::span<const std::uint64_t> counts) {
  if (counts.empty()) return std::nullopt;
  std::uint64_t total = 0;
  std::uint64_t max = 0;
  for (auto c : counts) {
    total += c;
    max = std::max(max, c);
  }
  if (total == 0) return std::nullopt;
  return static_cast<double>(max) * static_cast<double>(counts.size()) / static_cast<double>(total);
}

enum class WindowMode { tumbling, sliding };

inline std::string_view to_string(WindowMode m) {
  return m == WindowMode::tumbling ? "tumbling" : "sliding";
}

inline WindowMode parse_window_mode(std::string_view name) {
  if (name == "tumbling") return WindowMode::tumbling;
  if (name == "sliding") return WindowMode::sliding;
  throw ConfigError("metrics.window_mode must be tumbling or sliding");
}

/// Sum of per-window maxima of same-row requests and the number of windows.
struct WindowTally {
  std::uint64_t sum_of_maxima = 0;
  std::uint64_t windows = 0;

  std::optional<double> average() const {
    if (windows == 0) return std::nullopt;
    return static_cast<double>(sum_of_maxima) / static_cast<double>(windows);
  }
};

/// Highest number of requests to one counter row within each window of
/// `window` consecutive requests. Tumbling windows drop a trailing partial
/// window; sliding windows start at every offset.
inline WindowTally window_tally(std::span<const std::uint16_t> stream, std::size_t window,
                                WindowMode mode) {
  if (window == 0) throw std::invalid_argument("window must be > 0");
  WindowTally tally;
  if (stream.size() < window) return tally;

  std::uint16_t max_row = 0;
  for (auto r : stream) max_row = std::max(max_row, r);
  std::vector<std::uint32_t> count(std::size_t{max_row} + 1, 0);

  if (mode == WindowMode::tumbling) {
    for (std::size_t start = 0; start + window <= stream.size(); start += window) {
      std::uint32_t best = 0;
      for (std::size_t i = start; i < start + window; ++i) best = std::max(best, ++count[stream[i]]);
      for (std::size_t i = start; i < start + window; ++i) count[stream[i]] = 0;
      tally.sum_of_maxima += best;
      ++tally.windows;
    }
    return tally;
  }

  // Sliding: keep how many rows have each count so the max updates in O(1).
  std::vector<std::uint32_t> rows_with(window + 1, 0);
  std::uint32_t best = 0;
  auto add = [&](std::uint16_t r) {
    auto& c = count[r];
    if (c) --rows_with[c];
    ++c;
    ++rows_with[c];
    best = std::max(best, c);
  };
  auto remove = [&](std::uint16_t r) {
    auto& c = count[r];
    --rows_with[c];
    if (c == best && rows_with[c] == 0) --best;
    --c;
    if (c) ++rows_with[c];
  };
  for (std::size_t i = 0; i < window; ++i) add(stream[i]);
  tally.sum_of_maxima += best;
  ++tally.windows;
  for (std::size_t i = window; i < stream.size(); ++i) {
    remove(stream[i - window]);
    add(stream[i]);
    tally.sum_of_maxima += best;
    ++tally.windows;
  }
  return tally;
}

inline std::optional<double> window_locality(std::span<const std::uint16_t> stream,
                                             std::size_t window = 64,
                                             WindowMode mode = WindowMode::tumbling) {
  return window_tally(stream, window, mode).average();
}

/// Number of most-activated rows needed to cover each percentile of all
/// activations (rows sorted by descending count).
inline std::vector<std::uint64_t> footprint_percentiles(std::span<const std::uint64_t> counts,
                                                        std::span<const double> percentiles) {
  std::vector<std::uint64_t> sorted;
  sorted.reserve(counts.size());
  std::uint64_t total = 0;
  for (auto c : counts) {
    if (c) sorted.push_back(c);
    total += c;
  }
  if (total == 0) throw std::invalid_argument("footprint of an empty histogram");
  std::sort(sorted.begin(), sorted.end(), std::greater<>());

  std::vector<std::uint64_t> out;
  out.reserve(percentiles.size());
  for (double p : percentiles) {
    if (!(p > 0 && p <= 100)) throw std::invalid_argument("percentile outside (0, 100]");
    const double target = p * static_cast<double>(total);
    std::uint64_t cum = 0;
    std::uint64_t rows = 0;
    while (rows < sorted.size() && static_cast<double>(cum) * 100.0 < target) cum += sorted[rows++];
    out.push_back(rows);
  }
  return out;
}

struct MetricsConfig {
  bool enabled = true;
  std::uint32_t window = 64;
  WindowMode window_mode = WindowMode::tumbling;
  std::vector<double> percentiles{25, 50, 75, 90};

  void validate() const {
    if (window == 0) throw ConfigError("metrics.window must be > 0");
    for (double p : percentiles) {
      if (!(p > 0 && p <= 100)) throw ConfigError("metrics.percentiles must lie in (0, 100]");
    }
  }
};

struct TraceCharacterization {
  std::map<BankId, double> skew_per_bank;
  std::optional<double> skew_mean;
  std::optional<double> window_locality;
  std::uint32_t window = 64;
  WindowMode window_mode = WindowMode::tumbling;
  std::vector<double> percentiles;
  std::vector<std::uint64_t> footprint_rows;  // aligned with percentiles
  std::uint64_t distinct_rows = 0;
};

/// Accumulates the counter-request stream of a run for characterization.
class TraceProfile {
 public:
  explicit TraceProfile(const DramGeometry& g) : geometry_(g), banks_(g.banks) {}

  void observe(const CounterRef& ref) {
    auto& b = banks_[ref.bank];
    if (b.row_counts.empty()) {
      b.row_counts.assign(geometry_.counter_rows_per_bank, 0);
      b.data_counts.assign(geometry_.rows_per_bank, 0);
    }
    ++b.row_counts[ref.row_id];
    ++b.data_counts[counter_index(geometry_, ref)];
    b.stream.push_back(ref.row_id);
  }

  TraceCharacterization summarize(const MetricsConfig& cfg) const {
    TraceCharacterization out;
    out.window = cfg.window;
    out.window_mode = cfg.window_mode;
    out.percentiles = cfg.percentiles;
    WindowTally windows;
    double skew_sum = 0;
    std::vector<std::uint64_t> all_counts;
    for (BankId bank = 0; bank < banks_.size(); ++bank) {
      const auto& b = banks_[bank];
      if (b.row_counts.empty()) continue;
      if (const auto s = skew(b.row_counts)) {
        out.skew_per_bank[bank] = *s;
        skew_sum += *s;
      }
      const auto t = window_tally(b.stream, cfg.window, cfg.window_mode);
      windows.sum_of_maxima += t.sum_of_maxima;
      windows.windows += t.windows;
      for (auto c : b.data_counts) {
        if (c) all_counts.push_back(c);
      }
    }
    if (!out.skew_per_bank.empty()) skew_sum /= static_cast<double>(out.skew_per_bank.size());
    if (!out.skew_per_bank.empty()) out.skew_mean = skew_sum;
    out.window_locality = windows.average();
    out.distinct_rows = all_counts.size();
    if (!all_counts.empty()) out.footprint_rows = footprint_percentiles(all_counts, cfg.percentiles);
    return out;
  }

 private:
  struct Bank {
    std::vector<std::uint64_t> row_counts;
    std::vector<std::uint64_t> data_counts;
    std::vector<std::uint16_t> stream;
  };

  DramGeometry geometry_;
  std::vector<Bank> banks_;
};

}  // namespace pracsim
