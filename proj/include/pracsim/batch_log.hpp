#pragma once

#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pracsim/buffer.hpp"
#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/trace.hpp"

namespace pracsim {

/// Everything that touches the counter sub-array, plus cache hits (which make
/// an activation visible without touching it).
enum class LogTrigger : std::uint8_t {
  m_ready,
  buffer_full,
  k_limit,
  drain,
  immediate,
  cache_hit,
  alert,
  proactive,
};

inline std::string_view to_string(LogTrigger t) {
  switch (t) {
    case LogTrigger::m_ready: return "m_ready";
    case LogTrigger::buffer_full: return "buffer_full";
    case LogTrigger::k_limit: return "k_limit";
    case LogTrigger::drain: return "drain";
    case LogTrigger::immediate: return "immediate";
    case LogTrigger::cache_hit: return "cache_hit";
    case LogTrigger::alert: return "alert";
    case LogTrigger::proactive: return "proactive";
  }
  return "?";
}

inline LogTrigger to_log_trigger(Trigger t) {
  switch (t) {
    case Trigger::m_ready: return LogTrigger::m_ready;
    case Trigger::buffer_full: return LogTrigger::buffer_full;
    case Trigger::k_limit: return LogTrigger::k_limit;
    case Trigger::drain: return LogTrigger::drain;
    case Trigger::immediate: return LogTrigger::immediate;
  }
  return LogTrigger::immediate;
}

/// Batches open a counter row; the other kinds are bookkeeping events.
inline bool is_batch(LogTrigger t) {
  return t == LogTrigger::m_ready || t == LogTrigger::buffer_full || t == LogTrigger::k_limit ||
         t == LogTrigger::drain || t == LogTrigger::immediate;
}

struct LogRecord {
  std::uint64_t slot = 0;
  BankId bank = 0;
  std::uint16_t row_id = 0;
  LogTrigger trigger = LogTrigger::immediate;
  std::vector<std::uint16_t> byte_ids;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

using BatchLog = std::vector<LogRecord>;

inline constexpr std::string_view kBatchLogHeader = "slot,bank,row_id,trigger,n_items,byte_ids";

/// CSV: `slot,bank,row_id,trigger,n_items,byte_ids...` with the byte ids as
/// trailing columns, preceded by a single header line.
inline void write_batch_log(std::ostream& out, std::span<const LogRecord> log) {
  out << kBatchLogHeader << '\n';
  for (const auto& r : log) {
    out << r.slot << ',' << r.bank << ',' << r.row_id << ',' << to_string(r.trigger) << ','
        << r.byte_ids.size();
    for (auto b : r.byte_ids) out << ',' << b;
    out << '\n';
  }
}

inline BatchLog read_batch_log(std::istream& in) {
  BatchLog out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (view.rfind("slot,", 0) == 0) continue;

    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    for (;;) {
      const auto comma = view.find(',', pos);
      fields.push_back(view.substr(pos, comma == std::string_view::npos ? comma : comma - pos));
      if (comma == std::string_view::npos) break;
      pos = comma + 1;
    }
    if (fields.size() < 5) throw LogFormatError(line_no, "expected at least 5 columns");

    auto number = [&](std::string_view tok, const char* what) {
      std::uint64_t v = 0;
      const auto* end = tok.data() + tok.size();
      auto [ptr, ec] = std::from_chars(tok.data(), end, v);
      if (ec != std::errc{} || ptr != end || tok.empty()) {
        throw LogFormatError(line_no, std::string("invalid ") + what + " '" + std::string(tok) + "'");
      }
      return v;
    };

    LogRecord r;
    r.slot = number(fields[0], "slot");
    r.bank = static_cast<BankId>(number(fields[1], "bank"));
    const auto row = number(fields[2], "row_id");
    if (row > 0xffff) throw LogFormatError(line_no, "row_id out of range");
    r.row_id = static_cast<std::uint16_t>(row);
    bool known = false;
    for (auto t : {LogTrigger::m_ready, LogTrigger::buffer_full, LogTrigger::k_limit,
                   LogTrigger::drain, LogTrigger::immediate, LogTrigger::cache_hit,
                   LogTrigger::alert, LogTrigger::proactive}) {
      if (to_string(t) == fields[3]) {
        r.trigger = t;
        known = true;
      }
    }
    if (!known) throw LogFormatError(line_no, "unknown trigger '" + std::string(fields[3]) + "'");
    const auto n = number(fields[4], "n_items");
    if (fields.size() != 5 + n) throw LogFormatError(line_no, "n_items does not match byte ids");
    for (std::size_t i = 5; i < fields.size(); ++i) {
      const auto b = number(fields[i], "byte_id");
      if (b > 0xffff) throw LogFormatError(line_no, "byte_id out of range");
      r.byte_ids.push_back(static_cast<std::uint16_t>(b));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace pracsim
