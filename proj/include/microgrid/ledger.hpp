#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "microgrid/units.hpp"

namespace microgrid {

enum class TxKind : std::uint8_t {
  Transfer,
  SubmitOrder,
  CancelOrder,
  ContractStore,
  Settlement,
  GridPurchase,
};

inline std::string_view to_string(TxKind k) {
  switch (k) {
    case TxKind::Transfer: return "transfer";
    case TxKind::SubmitOrder: return "submit_order";
    case TxKind::CancelOrder: return "cancel_order";
    case TxKind::ContractStore: return "contract_store";
    case TxKind::Settlement: return "settlement";
    case TxKind::GridPurchase: return "grid_purchase";
  }
  return "unknown";
}

// Per-kind gas amounts and the fixed exchange parameters of a run. The plain
// account transfer costs 21,000 gas; contract-operation totals are run
// configuration, not protocol constants.
struct GasSchedule {
  Gas transfer_gas = 21'000;
  Gas submit_order_gas = 100'000;
  Gas cancel_order_gas = 50'000;
  Gas contract_store_gas = 80'000;
  Wei gas_price = 20'000'000'000ULL;  // Wei per gas unit
  std::uint64_t eth_usd = 250;        // USD per Ether, fixed for a run

  Gas gas_for(TxKind kind) const {
    switch (kind) {
      case TxKind::SubmitOrder: return submit_order_gas;
      case TxKind::CancelOrder: return cancel_order_gas;
      case TxKind::ContractStore: return contract_store_gas;
      case TxKind::Transfer:
      case TxKind::Settlement:
      case TxKind::GridPurchase: return transfer_gas;
    }
    throw std::invalid_argument("unknown TxKind");
  }

  // fee = gas limit for the kind times the gas price
  Wei fee_for(TxKind kind) const { return Wei(gas_for(kind)) * gas_price; }

  void validate() const {
    if (transfer_gas == 0 || submit_order_gas == 0 || cancel_order_gas == 0 ||
        contract_store_gas == 0)
      throw std::invalid_argument("gas amounts must be strictly positive");
    if (gas_price == 0) throw std::invalid_argument("gas_price must be strictly positive");
    if (eth_usd == 0) throw std::invalid_argument("eth_usd must be strictly positive");
  }
};

struct TxRecord {
  Epoch epoch = 0;
  TxKind kind = TxKind::Transfer;
  AccountId from;
  AccountId to;
  Wei value = 0;
  Gas gas_used = 0;
  Wei gas_price = 0;

  Wei fee() const { return Wei(gas_used) * gas_price; }
};

// Simulated value ledger: named accounts, per-transaction gas fees, and an
// append-only transaction log. Fees accrue to a dedicated fee-sink account so
// that the sum of all balances (sink included) is invariant under every
// operation and exactly checkable.
class Ledger {
 public:
  explicit Ledger(GasSchedule schedule) : schedule_(schedule) {
    schedule_.validate();
    fee_sink_ = create_account("feesink", 0);
  }

  const GasSchedule& schedule() const { return schedule_; }
  AccountId fee_sink() const { return fee_sink_; }

  AccountId create_account(std::string name, Wei initial_balance) {
    AccountId id{static_cast<std::uint32_t>(names_.size())};
    names_.push_back(std::move(name));
    balances_.push_back(initial_balance);
    return id;
  }

  std::size_t account_count() const { return balances_.size(); }

  Wei balance(AccountId id) const {
    check_account(id);
    return balances_[id.value];
  }

  const std::string& name(AccountId id) const {
    check_account(id);
    return names_[id.value];
  }

  // Moves `value` plus the kind's gas fee out of `from`; the value lands in
  // `to` and the fee in the fee sink. Returns nullopt when `from` cannot
  // cover value + fee, leaving all balances untouched.
  std::optional<TxRecord> transfer(AccountId from, AccountId to, Wei value, TxKind kind,
                                   Epoch epoch) {
    check_account(from);
    check_account(to);
    const Wei fee = schedule_.fee_for(kind);
    if (balances_[from.value] < value + fee) return std::nullopt;
    balances_[from.value] -= value + fee;
    balances_[to.value] += value;
    balances_[fee_sink_.value] += fee;
    TxRecord rec{epoch, kind, from, to, value, schedule_.gas_for(kind), schedule_.gas_price};
    log_.push_back(rec);
    return rec;
  }

  // Fee-only transaction (value = 0); the fee moves to the fee sink.
  std::optional<TxRecord> charge_gas(AccountId payer, TxKind kind, Epoch epoch) {
    return transfer(payer, fee_sink_, 0, kind, epoch);
  }

  UsdMicro usd_micro(Wei wei) const { return wei_to_usd_micro(wei, schedule_.eth_usd); }

  Wei total_supply() const {
    Wei total = 0;
    for (Wei b : balances_) total += b;
    return total;
  }

  const std::vector<TxRecord>& log() const { return log_; }

 private:
  void check_account(AccountId id) const {
    if (id.value >= balances_.size()) throw std::out_of_range("unknown account");
  }

  GasSchedule schedule_;
  AccountId fee_sink_;
  std::vector<std::string> names_;
  std::vector<Wei> balances_;
  std::vector<TxRecord> log_;
};

}  // namespace microgrid
