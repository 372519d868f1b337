#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "pracsim/errors.hpp"
#include "pracsim/geometry.hpp"
#include "pracsim/trace.hpp"

namespace pracsim {

/// Alert and RFM handling. Alerts fire when a stored counter reaches
/// `n_bo_effective`; each Alert is served by `rfms_per_alert` RFMs. Proactive
/// mitigations run once per bank every `proactive_interval_slots` activation
/// slots (0 disables them); 168 slots is 2 x tREFI (3900 ns) / tRC (46 ns).
struct MitigationPolicy {
  bool enabled = true;
  std::uint32_t n_bo_effective = 28;
  std::uint32_t rfms_per_alert = 1;
  std::uint64_t proactive_interval_slots = 168;

  void validate() const {
    if (n_bo_effective < 1 || n_bo_effective > 255) {
      throw ConfigError("effective back-off threshold must be in [1, 255]");
    }
    if (rfms_per_alert < 1) throw ConfigError("mitigation.rfms_per_alert must be >= 1");
  }
};

enum class MitigationCause : std::uint8_t { alert, proactive };

struct MitigationEvent {
  CounterRef ref;
  MitigationCause cause = MitigationCause::alert;
  std::uint8_t value_before = 0;
};

struct CounterUpdate {
  std::uint8_t value = 0;  // post-update value, before any mitigation reset
  bool alert = false;
};

/// Non-zero counters keyed by `global_counter_key`.
using CounterState = std::map<std::uint64_t, std::uint8_t>;

/// Ground-truth counter sub-arrays of every bank.
///
/// Each bank's counters live in the leaves of a max segment tree so the
/// per-bank argmax needed by the mitigation queue is O(1) to read and O(log n)
/// to maintain. Banks are allocated on first write.
class CounterStore {
 public:
  CounterStore(DramGeometry geometry, MitigationPolicy policy)
      : geometry_(geometry), policy_(policy), banks_(geometry.banks) {
    geometry_.validate();
    if (policy_.enabled) policy_.validate();
    leaves_ = 1;
    while (leaves_ < geometry_.rows_per_bank) leaves_ <<= 1;
  }

  const DramGeometry& geometry() const { return geometry_; }
  const MitigationPolicy& policy() const { return policy_; }

  std::uint8_t value(const CounterRef& ref) const {
    check_counter(geometry_, ref);
    const auto& tree = banks_[ref.bank];
    return tree.empty() ? 0 : tree[leaves_ + counter_index(geometry_, ref)];
  }

  /// One read-modify-write adding `increments` (saturating at 255).
  CounterUpdate apply_rmw(const CounterRef& ref, std::uint32_t increments) {
    check_counter(geometry_, ref);
    const std::uint32_t sum = std::uint32_t{value(ref)} + increments;
    const auto v = static_cast<std::uint8_t>(std::min<std::uint32_t>(sum, 255));
    return store_and_check(ref, v);
  }

  /// Overwrites a counter with a value evicted from the counter cache.
  CounterUpdate apply_writeback(const CounterRef& ref, std::uint8_t v) {
    check_counter(geometry_, ref);
    return store_and_check(ref, v);
  }

  /// Alert raised for `ref` whose visible value (possibly held outside the
  /// array, e.g. in a cache line) reached the threshold.
  void raise_alert(const CounterRef& ref, std::uint8_t visible_value) {
    ++alerts_;
    mitigate(ref, MitigationCause::alert, visible_value);
    for (std::uint32_t i = 1; i < policy_.rfms_per_alert; ++i) {
      const auto top = argmax(ref.bank);
      if (!top) break;
      mitigate(top->first, MitigationCause::alert, top->second);
    }
  }

  bool alert_due(std::uint32_t v) const {
    return policy_.enabled && v >= policy_.n_bo_effective;
  }

  /// Largest counter of the bank, lowest (row_id, byte_id) on ties. Empty when
  /// every counter is zero.
  std::optional<std::pair<CounterRef, std::uint8_t>> argmax(BankId bank) const {
    check_bank(geometry_, bank);
    const auto& tree = banks_[bank];
    if (tree.empty() || tree[1] == 0) return std::nullopt;
    std::size_t node = 1;
    while (node < leaves_) {
      node = tree[2 * node] == tree[node] ? 2 * node : 2 * node + 1;
    }
    return std::pair{counter_at(geometry_, bank, static_cast<std::uint32_t>(node - leaves_)),
                     tree[node]};
  }

  /// Resets one counter and journals the mitigation.
  void mitigate(const CounterRef& ref, MitigationCause cause, std::uint8_t value_before) {
    set(ref, 0);
    ++mitigations_;
    if (cause == MitigationCause::proactive) ++proactive_mitigations_;
    journal_.push_back({ref, cause, value_before});
  }

  /// Idealized priority mitigation queue: mitigate the bank's maximum counter.
  std::optional<CounterRef> proactive_tick(BankId bank) {
    const auto top = argmax(bank);
    if (!top) return std::nullopt;
    mitigate(top->first, MitigationCause::proactive, top->second);
    return top->first;
  }

  /// Mitigations performed since the last call.
  std::vector<MitigationEvent> take_journal() { return std::exchange(journal_, {}); }
  bool journal_empty() const { return journal_.empty(); }

  std::uint64_t alerts() const { return alerts_; }
  std::uint64_t mitigations() const { return mitigations_; }
  std::uint64_t proactive_mitigations() const { return proactive_mitigations_; }

  CounterState snapshot() const {
    CounterState out;
    for (BankId b = 0; b < geometry_.banks; ++b) {
      const auto& tree = banks_[b];
      if (tree.empty() || tree[1] == 0) continue;
      for (std::uint32_t i = 0; i < geometry_.rows_per_bank; ++i) {
        if (const auto v = tree[leaves_ + i]) {
          out.emplace(static_cast<std::uint64_t>(b) * geometry_.rows_per_bank + i, v);
        }
      }
    }
    return out;
  }

 private:
  CounterUpdate store_and_check(const CounterRef& ref, std::uint8_t v) {
    set(ref, v);
    const CounterUpdate out{v, alert_due(v)};
    if (out.alert) raise_alert(ref, v);
    return out;
  }

  void set(const CounterRef& ref, std::uint8_t v) {
    auto& tree = banks_[ref.bank];
    if (tree.empty()) {
      if (v == 0) return;
      tree.assign(2 * leaves_, 0);
    }
    std::size_t node = leaves_ + counter_index(geometry_, ref);
    tree[node] = v;
    for (node >>= 1; node >= 1; node >>= 1) {
      const auto m = std::max(tree[2 * node], tree[2 * node + 1]);
      if (tree[node] == m) break;
      tree[node] = m;
    }
  }

  DramGeometry geometry_;
  MitigationPolicy policy_;
  std::size_t leaves_ = 1;
  std::vector<std::vector<std::uint8_t>> banks_;
  std::vector<MitigationEvent> journal_;
  std::uint64_t alerts_ = 0;
  std::uint64_t mitigations_ = 0;
  std::uint64_t proactive_mitigations_ = 0;
};

// Counter dump CSV: header `bank,row_id,byte_id,value`, one line per non-zero
// counter in ascending (bank, row_id, byte_id) order.

inline void write_counter_dump(std::ostream& out, const CounterState& state,
                               const DramGeometry& g) {
  out << "bank,row_id,byte_id,value\n";
  for (const auto& [key, v] : state) {
    const auto bank = static_cast<BankId>(key / g.rows_per_bank);
    const auto ref = counter_at(g, bank, static_cast<std::uint32_t>(key % g.rows_per_bank));
    out << ref.bank << ',' << ref.row_id << ',' << ref.byte_id << ',' << unsigned{v} << '\n';
  }
}

inline CounterState read_counter_dump(std::istream& in, const DramGeometry& g) {
  CounterState out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string_view view = detail::trim(line);
    if (view.empty() || view.rfind("bank", 0) == 0) continue;
    std::uint64_t fields[4];
    std::size_t pos = 0;
    for (int i = 0; i < 4; ++i) {
      const auto comma = view.find(',', pos);
      if ((i < 3) != (comma != std::string_view::npos)) {
        throw ParseError(line_no, "expected bank,row_id,byte_id,value");
      }
      fields[i] = detail::parse_decimal(view.substr(pos, comma - pos), line_no, "field");
      pos = comma + 1;
    }
    if (fields[3] > 255) throw ParseError(line_no, "counter value above 255");
    const CounterRef ref{static_cast<BankId>(fields[0]), static_cast<std::uint16_t>(fields[1]),
                         static_cast<std::uint16_t>(fields[2])};
    if (fields[1] > 0xffff || fields[2] > 0xffff) throw RangeError(line_no, "counter out of range");
    check_counter(g, ref);
    if (fields[3] != 0) out[global_counter_key(g, ref)] = static_cast<std::uint8_t>(fields[3]);
  }
  return out;
}

}  // namespace pracsim
