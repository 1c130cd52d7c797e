#include "microgrid/agents.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "microgrid/rng.hpp"

namespace mg = microgrid;

namespace {

mg::AgentState household(mg::WattHours cap, mg::WattHours charge) {
  mg::AgentState s;
  s.account = mg::AccountId{2};
  s.name = "h001";
  s.battery_capacity_wh = cap;
  s.battery_charge_wh = charge;
  s.lcoe = 7000;
  s.price_dist = mg::make_distribution(7000, 15000);
  return s;
}

bool has(const std::vector<mg::AgentAction>& actions, mg::ActionKind kind) {
  for (const auto& a : actions)
    if (a.kind == kind) return true;
  return false;
}

const mg::AgentAction& get(const std::vector<mg::AgentAction>& actions, mg::ActionKind kind) {
  for (const auto& a : actions)
    if (a.kind == kind) return a;
  throw std::logic_error("action kind not present");
}

}  // namespace

TEST(AgentParams, Validation) {
  mg::AgentParams p;
  EXPECT_NO_THROW(p.validate());
  p.safety_net_permille = 600;  // above the 500 trigger
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.forecast_horizon_h = 0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.forecast_noise = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p = {};
  p.buy_trigger_permille = 1000;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Thresholds, ExactIntegerFractions) {
  const auto s = household(10000, 0);
  EXPECT_EQ(s.floor_wh(), 2000);
  EXPECT_EQ(s.trigger_wh(), 5000);
  EXPECT_TRUE(s.at_or_below_trigger(5000));
  EXPECT_FALSE(s.at_or_below_trigger(5001));
  EXPECT_TRUE(s.below_safety_net(1999));
  EXPECT_FALSE(s.below_safety_net(2000));
  // no battery: never below the net
  const auto none = household(0, 0);
  EXPECT_FALSE(none.below_safety_net(0));
}

TEST(Forecast, NetDemandWithZeroPadding) {
  const std::vector<mg::HourlyEntry> series = {
      {1000, 0}, {800, 300}, {500, 900}, {700, 100},
  };
  mg::SimRng rng(1);
  // entries after epoch 0: indices 1..3
  const auto f3 = mg::make_forecast(series, 0, 3, 0.0, rng);
  ASSERT_EQ(f3.size(), 3u);
  EXPECT_EQ(f3[0], 500);   // 800 - 300
  EXPECT_EQ(f3[1], -400);  // 500 - 900
  EXPECT_EQ(f3[2], 600);
  // one entry left before the end, padded with zeros
  const auto fpad = mg::make_forecast(series, 2, 3, 0.0, rng);
  ASSERT_EQ(fpad.size(), 3u);
  EXPECT_EQ(fpad[0], 600);
  EXPECT_EQ(fpad[1], 0);
  EXPECT_EQ(fpad[2], 0);
}

TEST(Forecast, NoiseBoundedAndReproducible) {
  const std::vector<mg::HourlyEntry> series(20, mg::HourlyEntry{1000, 0});
  mg::SimRng a(9), b(9);
  const auto fa = mg::make_forecast(series, 0, 10, 0.1, a);
  const auto fb = mg::make_forecast(series, 0, 10, 0.1, b);
  EXPECT_EQ(fa, fb);
  bool perturbed = false;
  for (const auto v : fa) {
    EXPECT_GE(v, 900);
    EXPECT_LE(v, 1100);
    perturbed |= v != 1000;
  }
  EXPECT_TRUE(perturbed);
}

TEST(Decide, SurplusChargesThenAsks) {
  // +2000 net with 1500 Wh of headroom: store 1500, offer 500
  auto s = household(10000, 8500);
  mg::SimRng rng(3);
  const auto actions =
      mg::decide(s, {0, 2000}, std::vector<mg::WattHours>(10, 0), {}, rng);
  ASSERT_TRUE(has(actions, mg::ActionKind::ChargeBattery));
  EXPECT_EQ(get(actions, mg::ActionKind::ChargeBattery).quantity, 1500);
  ASSERT_TRUE(has(actions, mg::ActionKind::SubmitAsk));
  const auto& ask = get(actions, mg::ActionKind::SubmitAsk);
  EXPECT_EQ(ask.quantity, 500);
  EXPECT_GE(ask.price, 7000);
  EXPECT_LE(ask.price, 15000);
  EXPECT_FALSE(has(actions, mg::ActionKind::GridBuy));
}

TEST(Decide, NoAskBelowProductionCost) {
  // sampled prices could undercut cost when the band floor sits below LCOE:
  // such a household must not offer at all
  auto s = household(10000, 10000);
  s.lcoe = 16000;                                  // above the grid price
  s.price_dist = mg::make_distribution(5000, 15000);  // consumer band
  mg::SimRng rng(3);
  const auto actions =
      mg::decide(s, {0, 2000}, std::vector<mg::WattHours>(10, 0), {}, rng);
  EXPECT_FALSE(has(actions, mg::ActionKind::SubmitAsk));
}

TEST(Decide, DeficitDischargesToFloorOnly) {
  auto s = household(10000, 3000);  // floor 2000
  mg::SimRng rng(4);
  const auto actions =
      mg::decide(s, {2500, 0}, std::vector<mg::WattHours>(10, 0), {}, rng);
  ASSERT_TRUE(has(actions, mg::ActionKind::DischargeBattery));
  EXPECT_EQ(get(actions, mg::ActionKind::DischargeBattery).quantity, 1000);  // down to 2000
  // charge lands exactly at the floor (not below), so the grid covers only
  // the residual deficit and banks nothing
  ASSERT_TRUE(has(actions, mg::ActionKind::GridBuy));
  const auto& buy = get(actions, mg::ActionKind::GridBuy);
  EXPECT_EQ(buy.quantity, 1500);
  EXPECT_EQ(buy.stored_wh, 0);
}

TEST(Decide, ForecastShortfallBid) {
  // 40% charge, forecast deficit 6000, held above floor 2000 -> bid 4000
  auto s = household(10000, 4000);
  mg::SimRng rng(5);
  const std::vector<mg::WattHours> forecast = {1500, 1500, 1500, 1500, -2000, 0, 0, 0, 0, 0};
  const auto actions = mg::decide(s, {0, 0}, forecast, {}, rng);
  ASSERT_TRUE(has(actions, mg::ActionKind::SubmitBid));
  const auto& bid = get(actions, mg::ActionKind::SubmitBid);
  EXPECT_EQ(bid.quantity, 4000);  // surplus hours do not offset deficits
  EXPECT_GE(bid.price, 7000);
  EXPECT_LE(bid.price, 15000);
}

TEST(Decide, NoBidAboveTrigger) {
  auto s = household(10000, 5001);  // just above 50%
  mg::SimRng rng(6);
  const std::vector<mg::WattHours> forecast(10, 1000);
  const auto actions = mg::decide(s, {0, 0}, forecast, {}, rng);
  EXPECT_FALSE(has(actions, mg::ActionKind::SubmitBid));
}

TEST(Decide, NoBidWhenHoldingsCoverForecast) {
  auto s = household(10000, 5000);  // held above floor = 3000
  mg::SimRng rng(7);
  const std::vector<mg::WattHours> forecast = {1000, 1000, 1000, 0, 0, 0, 0, 0, 0, 0};
  const auto actions = mg::decide(s, {0, 0}, forecast, {}, rng);
  EXPECT_FALSE(has(actions, mg::ActionKind::SubmitBid));  // need = 3000 - 3000 = 0
}

TEST(Decide, SafetyNetRestoresToTrigger) {
  // 15% with nothing else going on: buy 3500 from the grid, all banked
  auto s = household(10000, 1500);
  mg::SimRng rng(8);
  const auto actions =
      mg::decide(s, {0, 0}, std::vector<mg::WattHours>(10, 0), {}, rng);
  ASSERT_TRUE(has(actions, mg::ActionKind::GridBuy));
  const auto& buy = get(actions, mg::ActionKind::GridBuy);
  EXPECT_EQ(buy.quantity, 3500);
  EXPECT_EQ(buy.stored_wh, 3500);
}

TEST(Decide, SurplusLiftsChargeAcrossFloorNoGridBuy) {
  // 15% at entry, but a big surplus refills the battery first
  auto s = household(10000, 1500);
  mg::SimRng rng(9);
  const auto actions =
      mg::decide(s, {0, 4000}, std::vector<mg::WattHours>(10, 0), {}, rng);
  EXPECT_TRUE(has(actions, mg::ActionKind::ChargeBattery));
  EXPECT_FALSE(has(actions, mg::ActionKind::GridBuy));
}

TEST(Decide, NoBatteryHouseholdBuysDeficitOnly) {
  auto s = household(0, 0);
  mg::SimRng rng(10);
  const auto actions =
      mg::decide(s, {1200, 0}, std::vector<mg::WattHours>(10, 500), {}, rng);
  EXPECT_FALSE(has(actions, mg::ActionKind::SubmitBid));  // nowhere to store
  ASSERT_TRUE(has(actions, mg::ActionKind::GridBuy));
  const auto& buy = get(actions, mg::ActionKind::GridBuy);
  EXPECT_EQ(buy.quantity, 1200);
  EXPECT_EQ(buy.stored_wh, 0);
}

TEST(Decide, IdleWhenNothingToDo) {
  auto s = household(10000, 6000);
  mg::SimRng rng(11);
  const auto actions =
      mg::decide(s, {500, 500}, std::vector<mg::WattHours>(10, 0), {}, rng);
  ASSERT_EQ(actions.size(), 1u);
  EXPECT_EQ(actions[0].kind, mg::ActionKind::Idle);
}

TEST(Decide, DeterministicGivenSeed) {
  auto s = household(10000, 2500);
  const std::vector<mg::WattHours> forecast = {900, -100, 800, 0, 0, 0, 0, 0, 0, 0};
  mg::SimRng a(12), b(12);
  const auto x = mg::decide(s, {700, 200}, forecast, {}, a);
  const auto y = mg::decide(s, {700, 200}, forecast, {}, b);
  ASSERT_EQ(x.size(), y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    EXPECT_EQ(x[i].kind, y[i].kind);
    EXPECT_EQ(x[i].quantity, y[i].quantity);
    EXPECT_EQ(x[i].price, y[i].price);
  }
}

// Liveness and bound properties over randomized states and profiles.
TEST(Decide, RandomizedInvariants) {
  mg::SimRng rng(20250601);
  for (int round = 0; round < 5000; ++round) {
    const mg::WattHours cap = static_cast<mg::WattHours>(rng.bounded(4) * 5000);  // 0..15000
    auto s = household(cap, cap > 0 ? static_cast<mg::WattHours>(rng.bounded(
                                          static_cast<std::uint64_t>(cap) + 1))
                                    : 0);
    const mg::HourlyEntry now{static_cast<mg::WattHours>(rng.bounded(3000)),
                              static_cast<mg::WattHours>(rng.bounded(3000))};
    std::vector<mg::WattHours> forecast(10);
    for (auto& f : forecast)
      f = static_cast<mg::WattHours>(rng.bounded(4000)) - 2000;
    const auto actions = mg::decide(s, now, forecast, {}, rng);

    ASSERT_FALSE(actions.empty());
    int bids = 0, asks = 0;
    mg::WattHours charge = s.battery_charge_wh;
    for (const auto& a : actions) {
      if (a.kind != mg::ActionKind::Idle) {
        EXPECT_GT(a.quantity, 0);
      }
      switch (a.kind) {
        case mg::ActionKind::SubmitBid:
          ++bids;
          EXPECT_GE(a.price, s.price_dist->lower);
          EXPECT_LE(a.price, s.price_dist->upper);
          break;
        case mg::ActionKind::SubmitAsk:
          ++asks;
          EXPECT_GE(a.price, *s.lcoe);  // sell-side rationality
          break;
        case mg::ActionKind::ChargeBattery: charge += a.quantity; break;
        case mg::ActionKind::DischargeBattery: charge -= a.quantity; break;
        case mg::ActionKind::GridBuy: charge += a.stored_wh; break;
        default: break;
      }
    }
    EXPECT_LE(bids, 1);
    EXPECT_LE(asks, 1);
    // battery never driven outside its bounds by the planned actions
    EXPECT_GE(charge, 0);
    EXPECT_LE(charge, cap);
    // liveness: post-management charge below the floor forces a grid draw
    mg::WattHours managed = s.battery_charge_wh;
    for (const auto& a : actions) {
      if (a.kind == mg::ActionKind::ChargeBattery) managed += a.quantity;
      if (a.kind == mg::ActionKind::DischargeBattery) managed -= a.quantity;
    }
    if (s.below_safety_net(managed)) {
      EXPECT_TRUE(has(actions, mg::ActionKind::GridBuy)) << "round " << round;
    }
  }
}

TEST(BiomassDecide, ConstantBlockOffer) {
  mg::AgentState plant;
  plant.account = mg::AccountId{9};
  plant.name = "biomass1";
  plant.dispatchable = true;
  plant.dispatch_capacity_wh = 50000;
  plant.lcoe = 8000;
  plant.price_dist = mg::make_distribution(8000, 15000);
  mg::SimRng rng(13);
  for (int e = 0; e < 20; ++e) {
    const auto actions = mg::biomass_decide(plant, rng);
    ASSERT_EQ(actions.size(), 1u);
    EXPECT_EQ(actions[0].kind, mg::ActionKind::SubmitAsk);
    EXPECT_EQ(actions[0].quantity, 50000);
    EXPECT_GE(actions[0].price, 8000);
    EXPECT_LE(actions[0].price, 15000);
  }
  plant.dispatch_capacity_wh = 0;
  const auto idle = mg::biomass_decide(plant, rng);
  ASSERT_EQ(idle.size(), 1u);
  EXPECT_EQ(idle[0].kind, mg::ActionKind::Idle);
}

TEST(ApplyFills, BuyClampsAndReportsCurtailment) {
  auto s = household(10000, 9400);
  const mg::Trade t{s.account, mg::AccountId{3}, 9000, 1000, 0, 1, 2};
  const auto out = mg::apply_fills(s, {t});
  EXPECT_EQ(out.bought_wh, 1000);
  EXPECT_EQ(out.curtailed_wh, 400);
  EXPECT_EQ(s.battery_charge_wh, 10000);
}

TEST(ApplyFills, SellDrawsFromCommittedPool) {
  auto s = household(10000, 5000);
  s.pending_sale_wh = 800;
  const mg::Trade t{mg::AccountId{3}, s.account, 9000, 800, 0, 1, 2};
  const auto out = mg::apply_fills(s, {t});
  EXPECT_EQ(out.sold_wh, 800);
  EXPECT_EQ(s.pending_sale_wh, 0);
  EXPECT_EQ(s.battery_charge_wh, 5000);  // already deducted at ask time
}

TEST(ApplyFills, OverSoldThrows) {
  auto s = household(10000, 5000);
  s.pending_sale_wh = 100;
  const mg::Trade t{mg::AccountId{3}, s.account, 9000, 200, 0, 1, 2};
  EXPECT_THROW(mg::apply_fills(s, {t}), std::logic_error);
}

TEST(ApplyFills, NoTradesNoChange) {
  auto s = household(10000, 5000);
  const auto before_charge = s.battery_charge_wh;
  const auto out = mg::apply_fills(s, {});
  EXPECT_EQ(out.bought_wh, 0);
  EXPECT_EQ(out.sold_wh, 0);
  EXPECT_EQ(s.battery_charge_wh, before_charge);
}
