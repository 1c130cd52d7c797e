#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "microgrid/dataset.hpp"
#include "microgrid/orderbook.hpp"
#include "microgrid/pricing.hpp"
#include "microgrid/rng.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

enum class ActionKind : std::uint8_t {
  SubmitBid,
  SubmitAsk,
  Cancel,
  ChargeBattery,
  DischargeBattery,
  GridBuy,
  Idle
};

inline const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::SubmitBid: return "submit_bid";
    case ActionKind::SubmitAsk: return "submit_ask";
    case ActionKind::Cancel: return "cancel";
    case ActionKind::ChargeBattery: return "charge_battery";
    case ActionKind::DischargeBattery: return "discharge_battery";
    case ActionKind::GridBuy: return "grid_buy";
    case ActionKind::Idle: return "idle";
  }
  return "?";
}

struct AgentAction {
  ActionKind kind = ActionKind::Idle;
  WattHours quantity = 0;   // order size, charge/discharge amount, grid draw
  Millicents price = 0;     // limit price for orders
  std::uint64_t order_id = 0;  // cancellation target
  WattHours stored_wh = 0;  // grid_buy only: portion banked in the battery
};

struct MarketView {
  std::optional<Millicents> best_bid;
  std::optional<Millicents> best_ask;
  std::optional<Millicents> last_price;
};

// Battery thresholds in integer per-mille so every charge comparison is exact.
struct AgentParams {
  int forecast_horizon_h = 10;
  int safety_net_permille = 200;   // grid draw below this charge fraction
  int buy_trigger_permille = 500;  // shop for energy at or below this fraction
  double forecast_noise = 0.0;     // multiplicative amplitude, 0 = perfect

  void validate() const {
    if (forecast_horizon_h < 1) throw std::invalid_argument("forecast horizon must be >= 1");
    if (safety_net_permille <= 0 || buy_trigger_permille >= 1000 ||
        safety_net_permille >= buy_trigger_permille)
      throw std::invalid_argument("need 0 < safety net < buy trigger < 1000 per-mille");
    if (forecast_noise < 0.0 || forecast_noise >= 1.0)
      throw std::invalid_argument("forecast noise must be in [0, 1)");
  }
};

struct AgentState {
  AccountId account;
  std::string name;
  bool dispatchable = false;  // plant offering a fixed block every epoch
  WattHours battery_capacity_wh = 0;
  WattHours battery_charge_wh = 0;
  WattHours dispatch_capacity_wh = 0;  // dispatchable agents only
  WattHours pending_sale_wh = 0;       // energy committed to open asks
  std::optional<Millicents> lcoe;
  std::optional<PriceDistribution> price_dist;
  AgentParams params;
  std::vector<std::uint64_t> open_orders;
  std::vector<std::pair<Epoch, AgentAction>> history;

  WattHours floor_wh() const {
    return battery_capacity_wh * params.safety_net_permille / 1000;
  }
  WattHours trigger_wh() const {
    return battery_capacity_wh * params.buy_trigger_permille / 1000;
  }
  bool at_or_below_trigger(WattHours charge) const {
    return charge * 1000 <= battery_capacity_wh * params.buy_trigger_permille;
  }
  bool below_safety_net(WattHours charge) const {
    return battery_capacity_wh > 0 &&
           charge * 1000 < battery_capacity_wh * params.safety_net_permille;
  }
};

// Net demand (load minus generation, Wh) for the `horizon_h` hours after
// `epoch`, zero-padded past the end of the series. A non-zero noise amplitude
// perturbs each entry multiplicatively within +/- amplitude using `rng`.
inline std::vector<WattHours> make_forecast(const std::vector<HourlyEntry>& series, Epoch epoch,
                                            int horizon_h, double noise_amplitude,
                                            SimRng& rng) {
  std::vector<WattHours> out;
  out.reserve(static_cast<std::size_t>(horizon_h));
  for (int k = 1; k <= horizon_h; ++k) {
    const std::size_t idx = static_cast<std::size_t>(epoch) + static_cast<std::size_t>(k);
    WattHours net = 0;
    if (idx < series.size()) net = series[idx].load_wh - series[idx].generation_wh;
    if (noise_amplitude > 0.0 && net != 0) {
      const double u = (2.0 * rng.uniform_real() - 1.0) * noise_amplitude;
      net = round_half_even(static_cast<double>(net) * (1.0 + u));
    }
    out.push_back(net);
  }
  return out;
}

// One household's decision pass for an epoch, in order: bank any surplus and
// offer the overflow for sale; cover any deficit from the battery down to the
// safety-net floor; when the resulting charge sits at or below the buy
// trigger, bid for the forecast shortfall not already held above the floor;
// finally draw from the grid for any deficit the battery could not cover and,
// when charge is still under the safety net, enough extra to refill to the
// trigger level. Pure: identical inputs and generator state give identical
// actions.
inline std::vector<AgentAction> decide(const AgentState& state, const HourlyEntry& now,
                                       const std::vector<WattHours>& forecast,
                                       const MarketView& /*market*/, SimRng& rng) {
  std::vector<AgentAction> actions;
  WattHours charge = state.battery_charge_wh;
  const WattHours cap = state.battery_capacity_wh;
  const WattHours net = now.generation_wh - now.load_wh;

  WattHours uncovered = 0;
  if (net > 0) {
    const WattHours to_store = std::min(net, cap - charge);
    if (to_store > 0) {
      actions.push_back({ActionKind::ChargeBattery, to_store});
      charge += to_store;
    }
    const WattHours surplus = net - to_store;
    // sell only when the sampled prices cannot undercut production cost
    const bool can_sell =
        state.price_dist && state.lcoe && state.price_dist->lower >= *state.lcoe;
    if (surplus > 0 && can_sell)
      actions.push_back(
          {ActionKind::SubmitAsk, surplus, sample_price(*state.price_dist, rng)});
    // surplus with no sale outlet is curtailed by the caller
  } else if (net < 0) {
    const WattHours deficit = -net;
    const WattHours available = std::max<WattHours>(0, charge - state.floor_wh());
    const WattHours discharge = std::min(deficit, available);
    if (discharge > 0) {
      actions.push_back({ActionKind::DischargeBattery, discharge});
      charge -= discharge;
    }
    uncovered = deficit - discharge;
  }

  if (cap > 0 && state.at_or_below_trigger(charge) && state.price_dist) {
    WattHours horizon_deficit = 0;
    for (const WattHours f : forecast) horizon_deficit += std::max<WattHours>(0, f);
    const WattHours held = std::max<WattHours>(0, charge - state.floor_wh());
    const WattHours need = horizon_deficit - held;
    if (need > 0)
      actions.push_back({ActionKind::SubmitBid, need, sample_price(*state.price_dist, rng)});
  }

  WattHours restock = 0;
  if (state.below_safety_net(charge)) restock = state.trigger_wh() - charge;
  if (uncovered + restock > 0) {
    AgentAction buy{ActionKind::GridBuy, uncovered + restock};
    buy.stored_wh = restock;
    actions.push_back(buy);
  }

  if (actions.empty()) actions.push_back({ActionKind::Idle});
  return actions;
}

// A dispatchable plant offers its full block every epoch and never buys.
inline std::vector<AgentAction> biomass_decide(const AgentState& state, SimRng& rng) {
  if (state.dispatch_capacity_wh <= 0 || !state.price_dist) return {{ActionKind::Idle}};
  return {{ActionKind::SubmitAsk, state.dispatch_capacity_wh,
           sample_price(*state.price_dist, rng)}};
}

// Applies one epoch's fills: bought energy is banked (overflow reported as
// curtailment), sold energy is drawn from the committed pool. Selling more
// than was committed is a matcher fault.
struct FillOutcome {
  WattHours bought_wh = 0;
  WattHours sold_wh = 0;
  WattHours curtailed_wh = 0;
};

inline FillOutcome apply_fills(AgentState& state, const std::vector<Trade>& fills) {
  FillOutcome out;
  for (const Trade& t : fills) {
    if (t.buyer == state.account) {
      const WattHours room = state.battery_capacity_wh - state.battery_charge_wh;
      const WattHours stored = std::min(t.quantity, room);
      state.battery_charge_wh += stored;
      out.bought_wh += t.quantity;
      out.curtailed_wh += t.quantity - stored;
    }
    if (t.seller == state.account) {
      if (t.quantity > state.pending_sale_wh)
        throw std::logic_error(state.name + ": fill exceeds committed sale quantity");
      state.pending_sale_wh -= t.quantity;
      out.sold_wh += t.quantity;
    }
  }
  return out;
}

}  // namespace microgrid
