#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "microgrid/agents.hpp"
#include "microgrid/clearing.hpp"
#include "microgrid/config.hpp"
#include "microgrid/dataset.hpp"
#include "microgrid/ledger.hpp"
#include "microgrid/orderbook.hpp"
#include "microgrid/pricing.hpp"
#include "microgrid/rng.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Integer-exact per-agent energy flow totals for a whole run.
struct EnergyAccount {
  WattHours generation = 0;
  WattHours consumption = 0;
  WattHours purchased = 0;  // market fills plus grid draws
  WattHours sold = 0;
  WattHours curtailed = 0;
  WattHours start_charge = 0;
};

struct EpochRecord {
  Epoch epoch = 0;
  Millicents price_point = 0;  // carried forward through tradeless epochs
  WattHours volume_wh = 0;
  std::size_t n_trades = 0;
  Gas gas_units = 0;
  Wei gas_fee_wei = 0;
  double mean_battery_fraction = 0.0;
  bool conserved = true;  // ledger total supply unchanged this epoch
  std::optional<Millicents> uniform_price;
  ClearingMode clearing_mode = ClearingMode::StepCurve;
  bool regression_fallback = false;
  std::size_t n_unmatched = 0;
};

struct TradeRow {
  Epoch epoch = 0;
  std::string buyer;
  std::string seller;
  Millicents price = 0;
  WattHours quantity = 0;
};

struct OrderAudit {
  std::uint64_t order_id = 0;
  Epoch epoch = 0;
  std::string agent;
  Side side = Side::Bid;
  Millicents price = 0;
  WattHours quantity = 0;
};

struct AgentSummary {
  std::string name;
  bool is_household = false;
  WattHours battery_capacity_wh = 0;
  WattHours final_charge_wh = 0;
  std::optional<Millicents> lcoe;
  Wei initial_balance = 0;
  Wei final_balance = 0;
  UsdMicro net_cost_usd_micro = 0;  // balance outflow; negative = net earner
  EnergyAccount energy;
  bool energy_balanced = true;
};

struct SimReport {
  Framework framework = Framework::CDA;
  int epochs = 0;
  std::uint64_t seed = 0;
  Millicents grid_price = 0;
  GasSchedule gas;
  int n_households = 0;

  std::vector<EpochRecord> epoch_records;
  std::vector<TradeRow> trades;
  std::vector<TxRecord> ledger_log;
  std::vector<std::string> account_names;  // indexed by AccountId
  std::vector<AgentSummary> agents;
  std::vector<OrderAudit> order_audits;
  std::vector<std::string> anomalies;

  WattHours total_volume_wh = 0;
  Wei price_volume_wh = 0;  // exact sum of price * quantity over all trades
  Gas total_gas_units = 0;
  Wei total_gas_fee_wei = 0;
  std::size_t battery_violations = 0;
  std::size_t safety_net_violations = 0;
  std::size_t ir_violations = 0;  // trades priced outside their orders' limits
  bool all_epochs_conserved = true;
  bool all_energy_balanced = true;

  double mean_price_millicents() const {
    if (total_volume_wh == 0) return 0.0;
    return static_cast<double>(price_volume_wh) / static_cast<double>(total_volume_wh);
  }

  // Mean household spend per 24 epochs, half-even micro-USD.
  UsdMicro mean_household_daily_cost_usd_micro() const {
    if (n_households == 0 || epochs == 0) return 0;
    std::int64_t total = 0;
    for (const AgentSummary& a : agents)
      if (a.is_household) total += a.net_cost_usd_micro;
    return div_round_half_even_signed(total * 24,
                                      static_cast<std::int64_t>(n_households) * epochs);
  }
};

// Grid-only reference cost: every hourly deficit bought from the grid at
// retail with one transfer fee per purchasing hour, surplus unrewarded.
// Returns each household's exact total in micro-USD.
inline std::vector<UsdMicro> grid_baseline_cost(const Dataset& ds, int epochs,
                                                Millicents grid_price,
                                                const GasSchedule& gas) {
  if (epochs < 1 || static_cast<std::size_t>(epochs) > ds.series_length())
    throw DataError("epochs outside dataset range");
  std::vector<UsdMicro> out;
  out.reserve(ds.households.size());
  for (const HouseholdProfile& h : ds.households) {
    Wei spent = 0;
    for (int e = 0; e < epochs; ++e) {
      const WattHours deficit = h.series[e].load_wh - h.series[e].generation_wh;
      if (deficit > 0)
        spent += energy_value_wei(deficit, grid_price, gas.eth_usd) +
                 gas.fee_for(TxKind::GridPurchase);
    }
    out.push_back(wei_to_usd_micro(spent, gas.eth_usd));
  }
  return out;
}

class Simulator {
 public:
  Simulator(const ScenarioConfig& cfg, const Dataset& ds) : cfg_(cfg), ds_(ds), ledger_(cfg.gas) {
    cfg_.validate();
    if (static_cast<std::size_t>(cfg_.epochs) > ds_.series_length())
      throw DataError("dataset series shorter than requested epochs: " +
                      std::to_string(ds_.series_length()) + " < " +
                      std::to_string(cfg_.epochs));
    grid_ = ledger_.create_account("grid", 0);
    build_agents();
    initial_supply_ = ledger_.total_supply();
    seed_price_point();
  }

  SimReport run() {
    if (cfg_.framework == Framework::GridBaseline)
      run_baseline();
    else
      run_market();
    finalize();
    return std::move(report_);
  }

 private:
  struct OpenOrder {
    OrderAudit audit;
    std::size_t agent_index = 0;
    WattHours remaining = 0;
  };

  // --- setup ---

  void build_agents() {
    for (const HouseholdProfile& h : ds_.households) {
      AgentState s;
      s.account = ledger_.create_account(h.id, cfg_.initial_balance_wei());
      s.name = h.id;
      s.battery_capacity_wh = h.battery_capacity_wh;
      s.params = cfg_.agent_defaults;
      s.battery_charge_wh = s.trigger_wh();
      SolarSystemSpec spec;
      spec.capacity_kwp = h.pv_capacity_kwp;
      spec.annual_generation_kwh = h.annual_generation_kwh_estimate();
      spec.cost_tiers = cfg_.pricing.cost_tiers;
      if (h.pv_capacity_kwp > 0.0)
        spec.battery = cfg_.pricing.storage.battery_for(h.pv_capacity_kwp);
      spec.lifetime_years = cfg_.pricing.lifetime_years;
      s.lcoe = h.pv_capacity_kwp > 0.0 ? lcoe(spec) : std::nullopt;
      if (s.lcoe && *s.lcoe < cfg_.grid_price)
        s.price_dist = make_distribution(*s.lcoe, cfg_.grid_price);
      else if (cfg_.pricing.consumer_bid_floor < cfg_.grid_price)
        s.price_dist = make_distribution(cfg_.pricing.consumer_bid_floor, cfg_.grid_price);
      profiles_.push_back(&h);
      push_agent(std::move(s));
    }
    std::uint32_t plant_index = 0;
    for (const BiomassPlant& b : ds_.biomass) {
      AgentState s;
      s.account = ledger_.create_account(b.id, cfg_.initial_balance_wei());
      s.name = b.id;
      s.dispatchable = true;
      s.dispatch_capacity_wh = b.capacity_wh_per_epoch;
      s.params = cfg_.agent_defaults;
      s.lcoe = biomass_lcoe(cfg_.seed, plant_index++, b.lcoe_lower, b.lcoe_upper);
      if (*s.lcoe < cfg_.grid_price) s.price_dist = make_distribution(*s.lcoe, cfg_.grid_price);
      profiles_.push_back(nullptr);
      push_agent(std::move(s));
    }
  }

  void push_agent(AgentState&& s) {
    const std::size_t i = agents_.size();
    EnergyAccount acct;
    acct.start_charge = s.battery_charge_wh;
    agents_.push_back(std::move(s));
    energy_.push_back(acct);
    decide_rng_.emplace_back(mix_seed(cfg_.seed, 0xD0000ULL + i));
    forecast_rng_.emplace_back(mix_seed(cfg_.seed, 0xF0000ULL + i));
  }

  void seed_price_point() {
    Wei sum = 0;
    std::uint64_t count = 0;
    for (const AgentState& s : agents_)
      if (s.lcoe) {
        sum += Wei(static_cast<std::uint64_t>(*s.lcoe));
        ++count;
      }
    if (count == 0) {
      last_price_point_ = cfg_.grid_price;
      return;
    }
    const auto mean_lcoe =
        static_cast<Millicents>(static_cast<std::uint64_t>(div_round_half_even(sum, count)));
    last_price_point_ = midpoint_half_even(mean_lcoe, cfg_.grid_price);
  }

  std::size_t agent_index(AccountId account) const {
    // accounts: 0 fee sink, 1 grid, then agents in creation order
    return account.value - 2;
  }

  void note_anomaly(Epoch e, const std::string& agent, const char* event) {
    report_.anomalies.push_back("epoch=" + std::to_string(e) + " agent=" + agent +
                                " event=" + event);
  }

  // --- shared settlement path ---

  void settle_trade(const Trade& t, TxKind kind) {
    const std::size_t bi = agent_index(t.buyer);
    const std::size_t si = agent_index(t.seller);
    AgentState& buyer = agents_[bi];
    AgentState& seller = agents_[si];

    const Wei value = energy_value_wei(t.quantity, t.price, cfg_.gas.eth_usd);
    if (!ledger_.transfer(t.buyer, t.seller, value, kind, t.epoch))
      note_anomaly(t.epoch, buyer.name, "settlement_payment_failed_energy_delivered");

    // buyer banks the energy, overflow is curtailed
    const WattHours room = buyer.battery_capacity_wh - buyer.battery_charge_wh;
    const WattHours stored = std::min(t.quantity, room);
    buyer.battery_charge_wh += stored;
    energy_[bi].purchased += t.quantity;
    energy_[bi].curtailed += t.quantity - stored;

    if (t.quantity > seller.pending_sale_wh)
      throw std::logic_error(seller.name + ": fill exceeds committed sale quantity");
    seller.pending_sale_wh -= t.quantity;
    energy_[si].sold += t.quantity;
    if (seller.dispatchable) energy_[si].generation += t.quantity;

    // limit-price audit
    const auto ob = open_orders_.find(t.buy_order_id);
    const auto os = open_orders_.find(t.sell_order_id);
    if (ob == open_orders_.end() || os == open_orders_.end() ||
        ob->second.audit.price < t.price || os->second.audit.price > t.price)
      ++report_.ir_violations;
    consume_order(t.buy_order_id, t.quantity);
    consume_order(t.sell_order_id, t.quantity);

    report_.trades.push_back(TradeRow{t.epoch, buyer.name, seller.name, t.price, t.quantity});
    report_.total_volume_wh += t.quantity;
    report_.price_volume_wh +=
        Wei(static_cast<std::uint64_t>(t.price)) * Wei(static_cast<std::uint64_t>(t.quantity));
    epoch_volume_ += t.quantity;
    epoch_price_volume_ += Wei(static_cast<std::uint64_t>(t.price)) *
                           Wei(static_cast<std::uint64_t>(t.quantity));
    ++epoch_trades_;
  }

  void consume_order(std::uint64_t order_id, WattHours qty) {
    const auto it = open_orders_.find(order_id);
    if (it == open_orders_.end()) return;
    it->second.remaining -= qty;
    if (it->second.remaining <= 0) {
      auto& open = agents_[it->second.agent_index].open_orders;
      open.erase(std::remove(open.begin(), open.end(), order_id), open.end());
      open_orders_.erase(it);
    }
  }

  // Releases the unfilled remainder of an ask: households lose the energy
  // (it was surplus that never reached a buyer), dispatchable plants simply
  // withdraw the offer.
  void release_ask_energy(std::size_t i, WattHours remaining) {
    if (remaining <= 0) return;
    AgentState& s = agents_[i];
    if (remaining > s.pending_sale_wh)
      throw std::logic_error(s.name + ": releasing more than committed");
    s.pending_sale_wh -= remaining;
    if (!s.dispatchable) energy_[i].curtailed += remaining;
  }

  // --- continuous-auction path ---

  bool pay_gas(std::size_t i, TxKind kind, Epoch e, const char* fail_event) {
    if (ledger_.charge_gas(agents_[i].account, kind, e)) return true;
    note_anomaly(e, agents_[i].name, fail_event);
    return false;
  }

  void cda_cancel(std::size_t i, std::uint64_t order_id, Epoch e) {
    if (!pay_gas(i, TxKind::CancelOrder, e, "cancel_gas_unpaid_order_left_resting")) return;
    const auto res = book_.cancel(order_id, agents_[i].account);
    if (res.error != CancelError::None)
      throw std::logic_error("tracked order missing from book");
    if (res.order->side == Side::Ask) release_ask_energy(i, res.order->quantity);
    auto& open = agents_[i].open_orders;
    open.erase(std::remove(open.begin(), open.end(), order_id), open.end());
    open_orders_.erase(order_id);
    agents_[i].history.push_back(
        {e, AgentAction{ActionKind::Cancel, res.order->quantity, res.order->price, order_id}});
  }

  // Refreshes the agent's stale same-side order and clears own opposite
  // orders the new price would cross, so a submission can never self-trade.
  void cda_clear_conflicts(std::size_t i, Side side, Millicents price, Epoch e) {
    std::vector<std::uint64_t> to_cancel;
    for (const std::uint64_t id : agents_[i].open_orders) {
      const OpenOrder& oo = open_orders_.at(id);
      const bool same_side = oo.audit.side == side;
      const bool crossing = side == Side::Bid ? (oo.audit.side == Side::Ask && oo.audit.price <= price)
                                              : (oo.audit.side == Side::Bid && oo.audit.price >= price);
      if (same_side || crossing) to_cancel.push_back(id);
    }
    for (const std::uint64_t id : to_cancel) cda_cancel(i, id, e);
  }

  void cda_submit(std::size_t i, Side side, Millicents price, WattHours qty, Epoch e) {
    AgentState& s = agents_[i];
    cda_clear_conflicts(i, side, price, e);
    if (!pay_gas(i, TxKind::SubmitOrder, e, "submit_gas_unpaid")) {
      if (side == Side::Ask && !s.dispatchable) energy_[i].curtailed += qty;
      return;
    }
    const SubmitResult res = book_.submit(s.account, side, price, qty, e);
    if (!res.accepted()) {
      note_anomaly(e, s.name, "order_rejected");
      if (side == Side::Ask && !s.dispatchable) energy_[i].curtailed += qty;
      return;
    }
    OrderAudit audit{res.order_id, e, s.name, side, price, qty};
    if (cfg_.record_audit) report_.order_audits.push_back(audit);
    open_orders_.emplace(res.order_id, OpenOrder{audit, i, qty});
    if (side == Side::Ask) s.pending_sale_wh += qty;
    for (const Trade& t : res.trades) settle_trade(t, TxKind::Settlement);
    if (const auto it = open_orders_.find(res.order_id); it != open_orders_.end())
      s.open_orders.push_back(res.order_id);
  }

  void cda_expire_old_orders(Epoch e) {
    if (cfg_.cda_order_ttl_epochs <= 0) return;
    const Epoch cutoff = e - cfg_.cda_order_ttl_epochs;
    if (cutoff < 0) return;
    for (const Order& o : book_.orders_not_newer_than(cutoff)) {
      const auto res = book_.cancel(o.order_id, o.agent);
      if (res.error != CancelError::None) continue;
      const std::size_t i = agent_index(o.agent);
      if (o.side == Side::Ask) release_ask_energy(i, res.order->quantity);
      auto& open = agents_[i].open_orders;
      open.erase(std::remove(open.begin(), open.end(), o.order_id), open.end());
      open_orders_.erase(o.order_id);
    }
  }

  // --- epoch-clearing path ---

  void basket_submit(std::size_t i, Side side, Millicents price, WattHours qty, Epoch e) {
    AgentState& s = agents_[i];
    if (!pay_gas(i, TxKind::ContractStore, e, "store_gas_unpaid")) {
      if (side == Side::Ask && !s.dispatchable) energy_[i].curtailed += qty;
      return;
    }
    const std::uint64_t id = basket_next_id_++;
    basket_.push_back(Order{id, s.account, side, price, qty, e, basket_.size()});
    OrderAudit audit{id, e, s.name, side, price, qty};
    if (cfg_.record_audit) report_.order_audits.push_back(audit);
    open_orders_.emplace(id, OpenOrder{audit, i, qty});
    if (side == Side::Ask) s.pending_sale_wh += qty;
  }

  void clear_basket([[maybe_unused]] Epoch e, EpochRecord& rec) {
    ClearingResult result = cfg_.framework == Framework::UniformRegression
                                ? clear_regression(basket_)
                                : clear_step(basket_);
    rec.uniform_price = result.uniform_price;
    rec.clearing_mode = result.mode;
    rec.regression_fallback = result.regression_fallback;
    rec.n_unmatched = result.unmatched.size();
    for (const Trade& t : result.trades) settle_trade(t, TxKind::Settlement);
    for (const Order& o : result.unmatched)
      if (o.side == Side::Ask) release_ask_energy(agent_index(o.agent), o.quantity);
    for (const Order& o : basket_) {
      const auto it = open_orders_.find(o.order_id);
      if (it != open_orders_.end()) open_orders_.erase(it);
    }
    basket_.clear();
  }

  // --- per-epoch flow ---

  void apply_action(std::size_t i, const AgentAction& a, Epoch e, bool& saw_grid_buy,
                    WattHours& post_mgmt_charge) {
    AgentState& s = agents_[i];
    switch (a.kind) {
      case ActionKind::ChargeBattery: {
        const WattHours room = s.battery_capacity_wh - s.battery_charge_wh;
        const WattHours stored = std::min(a.quantity, room);
        s.battery_charge_wh += stored;
        if (stored < a.quantity) energy_[i].curtailed += a.quantity - stored;
        post_mgmt_charge = s.battery_charge_wh;
        break;
      }
      case ActionKind::DischargeBattery: {
        const WattHours drawn = std::min(a.quantity, s.battery_charge_wh);
        s.battery_charge_wh -= drawn;
        if (drawn < a.quantity) note_anomaly(e, s.name, "discharge_short");
        post_mgmt_charge = s.battery_charge_wh;
        break;
      }
      case ActionKind::SubmitAsk:
        if (cfg_.framework == Framework::CDA)
          cda_submit(i, Side::Ask, a.price, a.quantity, e);
        else
          basket_submit(i, Side::Ask, a.price, a.quantity, e);
        break;
      case ActionKind::SubmitBid:
        if (cfg_.framework == Framework::CDA)
          cda_submit(i, Side::Bid, a.price, a.quantity, e);
        else
          basket_submit(i, Side::Bid, a.price, a.quantity, e);
        break;
      case ActionKind::GridBuy: {
        saw_grid_buy = true;
        const Wei value = energy_value_wei(a.quantity, cfg_.grid_price, cfg_.gas.eth_usd);
        if (!ledger_.transfer(s.account, grid_, value, TxKind::GridPurchase, e))
          note_anomaly(e, s.name, "grid_payment_failed_energy_delivered");
        energy_[i].purchased += a.quantity;
        const WattHours room = s.battery_capacity_wh - s.battery_charge_wh;
        const WattHours stored = std::min(a.stored_wh, room);
        s.battery_charge_wh += stored;
        if (stored < a.stored_wh) energy_[i].curtailed += a.stored_wh - stored;
        break;
      }
      case ActionKind::Cancel:
      case ActionKind::Idle:
        break;
    }
    s.history.push_back({e, a});
  }

  void run_market() {
    std::vector<std::vector<AgentAction>> actions(agents_.size());
    for (Epoch e = 0; e < cfg_.epochs; ++e) {
      const std::size_t log_mark = ledger_.log().size();
      MarketView view;
      if (cfg_.framework == Framework::CDA) {
        const auto [bid, ask] = book_.best_quotes();
        view.best_bid = bid;
        view.best_ask = ask;
      }
      view.last_price = last_price_point_;

      // decision pass over the epoch-start snapshot
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        const AgentState& s = agents_[i];
        if (s.dispatchable) {
          actions[i] = biomass_decide(s, decide_rng_[i]);
        } else {
          const auto& series = profiles_[i]->series;
          const auto forecast =
              make_forecast(series, e, s.params.forecast_horizon_h,
                            s.params.forecast_noise, forecast_rng_[i]);
          actions[i] = decide(s, series[static_cast<std::size_t>(e)], forecast, view,
                              decide_rng_[i]);
        }
      }

      // serialized application in agent order
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        AgentState& s = agents_[i];
        if (!s.dispatchable) {
          const HourlyEntry& now = profiles_[i]->series[static_cast<std::size_t>(e)];
          energy_[i].generation += now.generation_wh;
          energy_[i].consumption += now.load_wh;
          // surplus that had no sale outlet is curtailed
          const WattHours net = now.generation_wh - now.load_wh;
          if (net > 0) {
            WattHours handled = 0;
            for (const AgentAction& a : actions[i])
              if (a.kind == ActionKind::ChargeBattery || a.kind == ActionKind::SubmitAsk)
                handled += a.quantity;
            if (net > handled) energy_[i].curtailed += net - handled;
          }
        }
        bool saw_grid_buy = false;
        WattHours post_mgmt_charge = s.battery_charge_wh;
        for (const AgentAction& a : actions[i])
          apply_action(i, a, e, saw_grid_buy, post_mgmt_charge);
        if (!s.dispatchable && s.below_safety_net(post_mgmt_charge) && !saw_grid_buy)
          ++report_.safety_net_violations;
      }

      EpochRecord rec;
      rec.epoch = e;
      if (cfg_.framework != Framework::CDA)
        clear_basket(e, rec);
      else
        cda_expire_old_orders(e);
      finish_epoch(e, log_mark, rec);
    }
    // unsold commitments at the end of the run are withdrawn
    for (std::size_t i = 0; i < agents_.size(); ++i)
      release_ask_energy(i, agents_[i].pending_sale_wh);
  }

  void run_baseline() {
    for (Epoch e = 0; e < cfg_.epochs; ++e) {
      const std::size_t log_mark = ledger_.log().size();
      for (std::size_t i = 0; i < agents_.size(); ++i) {
        if (agents_[i].dispatchable) continue;  // plants sit out a grid-only run
        const HourlyEntry& now = profiles_[i]->series[static_cast<std::size_t>(e)];
        energy_[i].generation += now.generation_wh;
        energy_[i].consumption += now.load_wh;
        const WattHours net = now.generation_wh - now.load_wh;
        if (net > 0) {
          energy_[i].curtailed += net;
        } else if (net < 0) {
          const WattHours deficit = -net;
          const Wei value = energy_value_wei(deficit, cfg_.grid_price, cfg_.gas.eth_usd);
          if (!ledger_.transfer(agents_[i].account, grid_, value, TxKind::GridPurchase, e))
            note_anomaly(e, agents_[i].name, "grid_payment_failed_energy_delivered");
          energy_[i].purchased += deficit;
        }
      }
      EpochRecord rec;
      rec.epoch = e;
      finish_epoch(e, log_mark, rec);
    }
  }

  void finish_epoch([[maybe_unused]] Epoch e, std::size_t log_mark, EpochRecord& rec) {
    // price point: volume-weighted epoch average, or the uniform price, or
    // the previous value when nothing traded
    if (epoch_volume_ > 0) {
      if (cfg_.framework == Framework::CDA || cfg_.framework == Framework::GridBaseline)
        last_price_point_ = static_cast<Millicents>(static_cast<std::uint64_t>(
            div_round_half_even(epoch_price_volume_, Wei(static_cast<std::uint64_t>(epoch_volume_)))));
      else
        last_price_point_ = *rec.uniform_price;
    }
    rec.price_point = last_price_point_;
    rec.volume_wh = epoch_volume_;
    rec.n_trades = epoch_trades_;
    epoch_volume_ = 0;
    epoch_price_volume_ = 0;
    epoch_trades_ = 0;

    for (std::size_t k = log_mark; k < ledger_.log().size(); ++k) {
      rec.gas_units += ledger_.log()[k].gas_used;
      rec.gas_fee_wei += ledger_.log()[k].fee();
    }
    report_.total_gas_units += rec.gas_units;
    report_.total_gas_fee_wei += rec.gas_fee_wei;

    double fraction_sum = 0.0;
    int fraction_count = 0;
    for (const AgentState& s : agents_) {
      if (s.battery_capacity_wh <= 0) continue;
      fraction_sum += static_cast<double>(s.battery_charge_wh) /
                      static_cast<double>(s.battery_capacity_wh);
      ++fraction_count;
      if (s.battery_charge_wh < 0 || s.battery_charge_wh > s.battery_capacity_wh)
        ++report_.battery_violations;
    }
    rec.mean_battery_fraction = fraction_count ? fraction_sum / fraction_count : 0.0;

    rec.conserved = ledger_.total_supply() == initial_supply_;
    report_.all_epochs_conserved = report_.all_epochs_conserved && rec.conserved;
    report_.epoch_records.push_back(rec);
  }

  void finalize() {
    report_.framework = cfg_.framework;
    report_.epochs = cfg_.epochs;
    report_.seed = cfg_.seed;
    report_.grid_price = cfg_.grid_price;
    report_.gas = cfg_.gas;
    report_.ledger_log = ledger_.log();
    for (std::size_t id = 0; id < ledger_.account_count(); ++id)
      report_.account_names.push_back(ledger_.name(AccountId{static_cast<std::uint32_t>(id)}));

    for (std::size_t i = 0; i < agents_.size(); ++i) {
      const AgentState& s = agents_[i];
      AgentSummary sum;
      sum.name = s.name;
      sum.is_household = !s.dispatchable;
      sum.battery_capacity_wh = s.battery_capacity_wh;
      sum.final_charge_wh = s.battery_charge_wh;
      sum.lcoe = s.lcoe;
      sum.initial_balance = cfg_.initial_balance_wei();
      sum.final_balance = ledger_.balance(s.account);
      if (sum.final_balance >= sum.initial_balance)
        sum.net_cost_usd_micro =
            -wei_to_usd_micro(sum.final_balance - sum.initial_balance, cfg_.gas.eth_usd);
      else
        sum.net_cost_usd_micro =
            wei_to_usd_micro(sum.initial_balance - sum.final_balance, cfg_.gas.eth_usd);
      sum.energy = energy_[i];
      const WattHours lhs = sum.energy.generation + sum.energy.purchased;
      const WattHours rhs = sum.energy.consumption + sum.energy.sold +
                            (s.battery_charge_wh - sum.energy.start_charge) +
                            sum.energy.curtailed;
      sum.energy_balanced = lhs == rhs;
      report_.all_energy_balanced = report_.all_energy_balanced && sum.energy_balanced;
      if (sum.is_household) ++report_.n_households;
      report_.agents.push_back(std::move(sum));
    }
  }

  ScenarioConfig cfg_;
  const Dataset& ds_;
  Ledger ledger_;
  Book book_;
  std::vector<Order> basket_;
  std::uint64_t basket_next_id_ = 1;
  std::vector<AgentState> agents_;
  std::vector<EnergyAccount> energy_;
  std::vector<SimRng> decide_rng_;
  std::vector<SimRng> forecast_rng_;
  std::vector<const HouseholdProfile*> profiles_;
  std::unordered_map<std::uint64_t, OpenOrder> open_orders_;
  AccountId grid_;
  Wei initial_supply_ = 0;
  Millicents last_price_point_ = 0;
  WattHours epoch_volume_ = 0;
  Wei epoch_price_volume_ = 0;
  std::size_t epoch_trades_ = 0;
  SimReport report_;
};

inline SimReport run(const ScenarioConfig& cfg, const Dataset& ds) {
  return Simulator(cfg, ds).run();
}

struct ComparisonReport {
  SimReport a;
  SimReport b;
};

// Paired runs over one dataset; configs are expected to share seed and data.
inline ComparisonReport ab_compare(const ScenarioConfig& a, const ScenarioConfig& b,
                                   const Dataset& ds) {
  return ComparisonReport{run(a, ds), run(b, ds)};
}

}  // namespace microgrid
