#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/random.hpp"

namespace pracsim {

/// One data-row activation. Under a closed-row policy every memory request is
/// one of these, so a trace line is one ACT and one column access.
struct ActivationEvent {
  std::uint64_t slot = 0;
  BankId bank = 0;
  RowIndex data_row = 0;

  friend bool operator==(const ActivationEvent&, const ActivationEvent&) = default;
};

using Trace = std::vector<ActivationEvent>;

enum class Generator { uniform, zipf, sequential, hotset, hammer, roundrobin };

inline std::string_view to_string(Generator g) {
  switch (g) {
    case Generator::uniform: return "uniform";
    case Generator::zipf: return "zipf";
    case Generator::sequential: return "sequential";
    case Generator::hotset: return "hotset";
    case Generator::hammer: return "hammer";
    case Generator::roundrobin: return "roundrobin";
  }
  return "?";
}

inline Generator parse_generator(std::string_view name) {
  for (auto g : {Generator::uniform, Generator::zipf, Generator::sequential, Generator::hotset,
                 Generator::hammer, Generator::roundrobin}) {
    if (to_string(g) == name) return g;
  }
  throw ConfigError("unknown trace generator '" + std::string(name) + "'");
}

/// Parameters of a synthetic workload.
///
/// Random generators (uniform, zipf, hotset) spread events uniformly over the
/// banks [first_bank, first_bank + banks); the others stay in first_bank.
/// `footprint` restricts uniform/zipf/hotset rows to a fixed random subset of
/// that many rows (0 means every row of the bank).
struct TraceSpec {
  Generator generator = Generator::zipf;
  std::uint64_t length = 10000;
  std::uint64_t seed = 1;
  std::uint32_t banks = 1;
  BankId first_bank = 0;
  RowIndex start_row = 0;        // sequential
  std::uint32_t footprint = 0;   // uniform, zipf, hotset
  double zipf_exponent = 1.0;    // zipf
  std::uint32_t hot_rows = 64;   // hotset
  double hot_fraction = 0.9;     // hotset
  RowIndex target_row = 0;       // hammer
  std::uint32_t gap = 0;         // hammer: filler events between target hits

  void validate(const DramGeometry& g) const {
    if (length == 0) throw ConfigError("trace.length must be > 0");
    if (banks == 0 || static_cast<std::uint64_t>(first_bank) + banks > g.banks) {
      throw ConfigError("trace.first_bank/trace.banks exceed geometry.banks");
    }
    if (footprint > g.rows_per_bank) throw ConfigError("trace.footprint exceeds rows_per_bank");
    if (start_row >= g.rows_per_bank) throw ConfigError("trace.start_row outside the bank");
    if (target_row >= g.rows_per_bank) throw ConfigError("trace.target_row outside the bank");
    if (!(zipf_exponent > 0.0)) throw ConfigError("trace.zipf_exponent must be > 0");
    if (!(hot_fraction > 0.0 && hot_fraction <= 1.0)) {
      throw ConfigError("trace.hot_fraction must be in (0, 1]");
    }
    if (generator == Generator::hotset &&
        (hot_rows == 0 || hot_rows > (footprint ? footprint : g.rows_per_bank))) {
      throw ConfigError("trace.hot_rows must be in [1, footprint]");
    }
    if (generator == Generator::hammer && gap > 0 && g.rows_per_bank < 2) {
      throw ConfigError("hammer fillers need at least two rows");
    }
  }

  friend bool operator==(const TraceSpec&, const TraceSpec&) = default;
};

// ---------------------------------------------------------------------------
// Text and binary trace formats

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline bool next_token(std::string_view& rest, std::string_view& token) {
  const auto start = rest.find_first_not_of(" \t");
  if (start == std::string_view::npos) return false;
  rest.remove_prefix(start);
  const auto end = rest.find_first_of(" \t");
  token = rest.substr(0, end);
  rest.remove_prefix(end == std::string_view::npos ? rest.size() : end);
  return true;
}

inline std::uint64_t parse_decimal(std::string_view token, std::size_t line, const char* what) {
  std::uint64_t value = 0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line, std::string("invalid ") + what + " '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace detail

/// Reads the text format: one `bank data_row` pair per line, ASCII decimal,
/// `#` comment lines and blank lines ignored. Slots are assigned 0..n-1.
inline Trace read_trace(std::istream& in, const DramGeometry& g) {
  Trace out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view rest = detail::trim(line);
    if (rest.empty() || rest.front() == '#') continue;
    std::string_view bank_tok, row_tok, extra;
    if (!detail::next_token(rest, bank_tok) || !detail::next_token(rest, row_tok)) {
      throw ParseError(line_no, "expected 'bank data_row'");
    }
    if (detail::next_token(rest, extra)) {
      throw ParseError(line_no, "trailing token '" + std::string(extra) + "'");
    }
    const auto bank = detail::parse_decimal(bank_tok, line_no, "bank");
    const auto row = detail::parse_decimal(row_tok, line_no, "data row");
    if (bank >= g.banks) {
      throw RangeError(line_no, "bank " + std::to_string(bank) + " outside geometry");
    }
    if (row >= g.rows_per_bank) {
      throw RangeError(line_no, "data row " + std::to_string(row) + " outside geometry");
    }
    out.push_back({out.size(), static_cast<BankId>(bank), static_cast<RowIndex>(row)});
  }
  return out;
}

inline void write_trace(std::ostream& out, std::span<const ActivationEvent> trace) {
  for (const auto& ev : trace) out << ev.bank << ' ' << ev.data_row << '\n';
}

/// Binary format: records of a little-endian u16 bank followed by a
/// little-endian u32 data row, no header. Errors report the 1-based record.
inline Trace read_binary_trace(std::istream& in, const DramGeometry& g) {
  Trace out;
  std::array<unsigned char, 6> rec{};
  std::size_t record = 0;
  for (;;) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto got = in.gcount();
    if (got == 0) break;
    ++record;
    if (got != static_cast<std::streamsize>(rec.size())) {
      throw ParseError(record, "truncated binary record");
    }
    const std::uint32_t bank = rec[0] | (rec[1] << 8);
    const std::uint32_t row = static_cast<std::uint32_t>(rec[2]) | (rec[3] << 8) |
                              (rec[4] << 16) | (static_cast<std::uint32_t>(rec[5]) << 24);
    if (bank >= g.banks) throw RangeError(record, "bank " + std::to_string(bank) + " outside geometry");
    if (row >= g.rows_per_bank) {
      throw RangeError(record, "data row " + std::to_string(row) + " outside geometry");
    }
    out.push_back({out.size(), bank, row});
  }
  return out;
}

inline void write_binary_trace(std::ostream& out, std::span<const ActivationEvent> trace) {
  for (const auto& ev : trace) {
    if (ev.bank > 0xffff) throw RangeError("bank does not fit the 16-bit binary field");
    const std::array<unsigned char, 6> rec{
        static_cast<unsigned char>(ev.bank & 0xff),
        static_cast<unsigned char>(ev.bank >> 8),
        static_cast<unsigned char>(ev.data_row & 0xff),
        static_cast<unsigned char>((ev.data_row >> 8) & 0xff),
        static_cast<unsigned char>((ev.data_row >> 16) & 0xff),
        static_cast<unsigned char>(ev.data_row >> 24)};
    out.write(reinterpret_cast<const char*>(rec.data()), rec.size());
  }
}

// ---------------------------------------------------------------------------
// Synthetic generators

/// Inverse-CDF sampler over ranks [0, n) with P(rank k) proportional to
/// 1 / (k + 1)^exponent.
class ZipfSampler {
 public:
  ZipfSampler(std::uint32_t n, double exponent) : cdf_(n) {
    double acc = 0.0;
    for (std::uint32_t k = 0; k < n; ++k) {
      const double rank = static_cast<double>(k) + 1.0;
      // exponent 1 avoids pow() so the common case is bit-identical across libms
      acc += exponent == 1.0 ? 1.0 / rank : std::pow(rank, -exponent);
      cdf_[k] = acc;
    }
    for (auto& c : cdf_) c /= acc;
    cdf_.back() = 1.0;
  }

  std::uint32_t operator()(Rng& rng) const {
    const double u = uniform_unit(rng);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::uint32_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(), cdf_.size() - 1));
  }

  std::uint32_t size() const { return static_cast<std::uint32_t>(cdf_.size()); }

 private:
  std::vector<double> cdf_;
};

/// The fixed random row order shared by the random generators: rank k of a
/// workload lands on data row `row_order(spec, g)[k]`. Exposed so tests can
/// map rows back to ranks.
inline std::vector<RowIndex> row_order(const TraceSpec& spec, const DramGeometry& g) {
  Rng rng(splitmix64(spec.seed ^ 0x5eedf00dULL));
  return shuffled_indices(g.rows_per_bank, rng);
}

inline Trace generate(const TraceSpec& spec, const DramGeometry& g) {
  g.validate();
  spec.validate(g);
  Trace out;
  out.reserve(spec.length);
  Rng rng(spec.seed);

  const std::uint32_t universe = spec.footprint ? spec.footprint : g.rows_per_bank;
  auto pick_bank = [&]() -> BankId {
    return spec.first_bank +
           (spec.banks > 1 ? static_cast<BankId>(uniform_below(rng, spec.banks)) : 0);
  };
  auto emit = [&](BankId bank, RowIndex row) { out.push_back({out.size(), bank, row}); };

  switch (spec.generator) {
    case Generator::sequential:
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        emit(spec.first_bank, static_cast<RowIndex>((spec.start_row + i) % g.rows_per_bank));
      }
      break;

    case Generator::roundrobin: {
      const std::uint32_t rows = g.counter_rows_per_bank;
      const std::uint32_t per_row = g.counters_per_counter_row;
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        const auto counter_row = static_cast<std::uint32_t>(i % rows);
        const auto byte = static_cast<std::uint32_t>((i / rows) % per_row);
        emit(spec.first_bank, counter_row * per_row + byte);
      }
      break;
    }

    case Generator::hammer: {
      const std::uint32_t per_row = g.counters_per_counter_row;
      const std::uint32_t rows = g.counter_rows_per_bank;
      const std::uint32_t target_counter_row = spec.target_row / per_row;
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        if (i % (static_cast<std::uint64_t>(spec.gap) + 1) == 0) {
          emit(spec.first_bank, spec.target_row);
          continue;
        }
        // Fillers avoid the target's counter row so they never coalesce with it.
        RowIndex filler;
        if (rows > 1) {
          auto cr = static_cast<std::uint32_t>(uniform_below(rng, rows - 1));
          if (cr >= target_counter_row) ++cr;
          filler = cr * per_row + static_cast<std::uint32_t>(uniform_below(rng, per_row));
        } else {
          filler = static_cast<RowIndex>(uniform_below(rng, g.rows_per_bank - 1));
          if (filler >= spec.target_row) ++filler;
        }
        emit(spec.first_bank, filler);
      }
      break;
    }

    case Generator::uniform: {
      const auto order = row_order(spec, g);
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        const BankId bank = pick_bank();
        emit(bank, order[uniform_below(rng, universe)]);
      }
      break;
    }

    case Generator::zipf: {
      const auto order = row_order(spec, g);
      const ZipfSampler sampler(universe, spec.zipf_exponent);
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        const BankId bank = pick_bank();
        emit(bank, order[sampler(rng)]);
      }
      break;
    }

    case Generator::hotset: {
      const auto order = row_order(spec, g);
      for (std::uint64_t i = 0; i < spec.length; ++i) {
        const BankId bank = pick_bank();
        const bool hot = uniform_unit(rng) < spec.hot_fraction;
        const auto rank = uniform_below(rng, hot ? spec.hot_rows : universe);
        emit(bank, order[rank]);
      }
      break;
    }
  }
  return out;
}

}  // namespace pracsim
