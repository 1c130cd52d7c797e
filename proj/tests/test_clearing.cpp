#include "microgrid/clearing.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "microgrid/rng.hpp"

namespace mg = microgrid;

namespace {

mg::Order order(std::uint64_t id, std::uint32_t agent, mg::Side side, mg::Millicents price,
                mg::WattHours qty, std::uint64_t seq) {
  return mg::Order{id, mg::AccountId{agent}, side, price, qty, 0, seq};
}

// Brute-force uniform-price oracle: evaluates every candidate price by direct
// summation, ties broken at the exact midpoint (half to even), allocation by
// price then arrival then id with the marginal order split.
struct OracleResult {
  std::optional<std::int64_t> price;
  std::int64_t volume = 0;
  std::map<std::uint64_t, std::int64_t> fills;  // order id -> matched qty
};

OracleResult oracle_clear(const std::vector<mg::Order>& orders) {
  OracleResult out;
  std::vector<std::int64_t> candidates;
  for (const auto& o : orders) candidates.push_back(o.price);
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  const auto demand = [&](std::int64_t p) {
    std::int64_t total = 0;
    for (const auto& o : orders)
      if (o.side == mg::Side::Bid && o.price >= p) total += o.quantity;
    return total;
  };
  const auto supply = [&](std::int64_t p) {
    std::int64_t total = 0;
    for (const auto& o : orders)
      if (o.side == mg::Side::Ask && o.price <= p) total += o.quantity;
    return total;
  };

  std::int64_t best = 0;
  std::optional<std::int64_t> lo, hi;
  for (const std::int64_t p : candidates) {
    const std::int64_t v = std::min(demand(p), supply(p));
    if (v > best) {
      best = v;
      lo = hi = p;
    } else if (v == best && v > 0) {
      hi = p;
    }
  }
  if (best == 0) return out;
  // midpoint of an integer pair, exact halves to the even neighbour
  const std::int64_t sum = *lo + *hi;
  std::int64_t mid = sum / 2;  // sum >= 0 here, floor
  if (sum % 2 != 0 && mid % 2 != 0) ++mid;
  out.price = mid;
  out.volume = best;

  const auto take = [&](mg::Side side, auto better) {
    std::vector<mg::Order> pool;
    for (const auto& o : orders)
      if (o.side == side) pool.push_back(o);
    std::sort(pool.begin(), pool.end(), better);
    std::int64_t left = best;
    for (const auto& o : pool) {
      if (left <= 0) break;
      const std::int64_t fill = std::min<std::int64_t>(left, o.quantity);
      out.fills[o.order_id] += fill;
      left -= fill;
    }
  };
  take(mg::Side::Bid, [](const mg::Order& a, const mg::Order& b) {
    if (a.price != b.price) return a.price > b.price;
    if (a.seq != b.seq) return a.seq < b.seq;
    return a.order_id < b.order_id;
  });
  take(mg::Side::Ask, [](const mg::Order& a, const mg::Order& b) {
    if (a.price != b.price) return a.price < b.price;
    if (a.seq != b.seq) return a.seq < b.seq;
    return a.order_id < b.order_id;
  });
  return out;
}

std::map<std::uint64_t, std::int64_t> fills_of(const mg::ClearingResult& r) {
  std::map<std::uint64_t, std::int64_t> fills;
  for (const auto& t : r.trades) {
    fills[t.buy_order_id] += t.quantity;
    fills[t.sell_order_id] += t.quantity;
  }
  return fills;
}

}  // namespace

TEST(StepClearing, EmptyAndOneSided) {
  EXPECT_FALSE(mg::clear_step({}).uniform_price.has_value());
  const std::vector<mg::Order> bids_only = {order(1, 1, mg::Side::Bid, 5000, 100, 0)};
  const auto r = mg::clear_step(bids_only);
  EXPECT_FALSE(r.uniform_price.has_value());
  EXPECT_EQ(r.cleared_volume, 0);
  ASSERT_EQ(r.unmatched.size(), 1u);
  EXPECT_EQ(r.unmatched[0].order_id, 1u);
}

TEST(StepClearing, NoCrossNoTrade) {
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 4000, 100, 0),
      order(2, 2, mg::Side::Ask, 6000, 100, 1),
  };
  const auto r = mg::clear_step(book);
  EXPECT_FALSE(r.uniform_price.has_value());
  EXPECT_TRUE(r.trades.empty());
  EXPECT_EQ(r.unmatched.size(), 2u);
}

TEST(StepClearing, TieMidpointInstance) {
  // maximizers are 7000 and 8000 -> price 7500, everything trades
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 10000, 5000, 0),
      order(2, 2, mg::Side::Bid, 8000, 5000, 1),
      order(3, 3, mg::Side::Ask, 6000, 5000, 2),
      order(4, 4, mg::Side::Ask, 7000, 5000, 3),
  };
  const auto r = mg::clear_step(book);
  ASSERT_TRUE(r.uniform_price.has_value());
  EXPECT_EQ(*r.uniform_price, 7500);
  EXPECT_EQ(r.cleared_volume, 10000);
  EXPECT_TRUE(r.unmatched.empty());
  for (const auto& t : r.trades) EXPECT_EQ(t.price, 7500);
}

TEST(StepClearing, MarginalRationingByArrival) {
  // two equal-priced asks, only 5 of 10 needed: the earlier one fills
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Ask, 5000, 5, 0),
      order(2, 2, mg::Side::Ask, 5000, 5, 1),
      order(3, 3, mg::Side::Bid, 5000, 5, 2),
  };
  const auto r = mg::clear_step(book);
  ASSERT_TRUE(r.uniform_price.has_value());
  EXPECT_EQ(*r.uniform_price, 5000);
  EXPECT_EQ(r.cleared_volume, 5);
  const auto fills = fills_of(r);
  EXPECT_EQ(fills.count(1u), 1u);
  EXPECT_EQ(fills.at(1u), 5);
  EXPECT_EQ(fills.count(2u), 0u);
  ASSERT_EQ(r.unmatched.size(), 1u);
  EXPECT_EQ(r.unmatched[0].order_id, 2u);
  EXPECT_EQ(r.unmatched[0].quantity, 5);
}

TEST(StepClearing, MatchesOracleOnRandomBooks) {
  mg::SimRng rng(424242);
  for (int round = 0; round < 1000; ++round) {
    std::vector<mg::Order> book;
    const std::size_t n = 1 + rng.bounded(8);
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_bid = rng.bounded(2) == 0;
      book.push_back(order(i + 1, static_cast<std::uint32_t>(1 + rng.bounded(5)),
                           is_bid ? mg::Side::Bid : mg::Side::Ask,
                           static_cast<mg::Millicents>(1 + rng.bounded(12)) * 500,
                           static_cast<mg::WattHours>(1 + rng.bounded(40)), i));
    }
    const auto want = oracle_clear(book);
    const auto got = mg::clear_step(book);
    ASSERT_EQ(got.uniform_price.has_value(), want.price.has_value()) << "round " << round;
    if (want.price) {
      EXPECT_EQ(*got.uniform_price, *want.price) << "round " << round;
      EXPECT_EQ(got.cleared_volume, want.volume) << "round " << round;
      EXPECT_EQ(fills_of(got), want.fills) << "round " << round;
    } else {
      EXPECT_TRUE(got.trades.empty());
    }
  }
}

TEST(StepClearing, VolumeBalanceAndIr) {
  mg::SimRng rng(7);
  for (int round = 0; round < 300; ++round) {
    std::vector<mg::Order> book;
    std::map<std::uint64_t, mg::Order> by_id;
    const std::size_t n = 2 + rng.bounded(10);
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_bid = rng.bounded(2) == 0;
      const auto o = order(i + 1, static_cast<std::uint32_t>(1 + rng.bounded(6)),
                           is_bid ? mg::Side::Bid : mg::Side::Ask,
                           static_cast<mg::Millicents>(1 + rng.bounded(16)) * 250,
                           static_cast<mg::WattHours>(1 + rng.bounded(30)), i);
      book.push_back(o);
      by_id[o.order_id] = o;
    }
    const auto r = mg::clear_step(book);
    std::int64_t bought = 0, sold = 0;
    for (const auto& t : r.trades) {
      bought += t.quantity;
      sold += t.quantity;
      // every matched order trades within its limit
      EXPECT_GE(by_id[t.buy_order_id].price, t.price);
      EXPECT_LE(by_id[t.sell_order_id].price, t.price);
    }
    EXPECT_EQ(bought, r.cleared_volume);
    EXPECT_EQ(sold, r.cleared_volume);
    // matched + unmatched = submitted, per order
    auto fills = fills_of(r);
    for (const auto& u : r.unmatched) fills[u.order_id] += u.quantity;
    for (const auto& [id, o] : by_id) EXPECT_EQ(fills[id], o.quantity) << "order " << id;
  }
}

TEST(CurveBuilding, StepCurvesAtUnionPrices) {
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 9000, 10, 0),
      order(2, 2, mg::Side::Bid, 5000, 20, 1),
      order(3, 3, mg::Side::Ask, 4000, 15, 2),
  };
  const auto [demand, supply] = mg::build_curves(book);
  ASSERT_EQ(demand.points.size(), 3u);  // 4000, 5000, 9000
  EXPECT_EQ(demand.points[0].price, 4000);
  EXPECT_EQ(demand.points[0].cumulative_quantity, 30);
  EXPECT_EQ(demand.points[1].cumulative_quantity, 30);
  EXPECT_EQ(demand.points[2].cumulative_quantity, 10);
  EXPECT_EQ(supply.points[0].cumulative_quantity, 15);
  EXPECT_EQ(supply.points[2].cumulative_quantity, 15);
}

TEST(LineFitting, ExactFitAndDegenerate) {
  // points on p = 12000 - q fit exactly
  const auto fit = mg::fit_line({{2000, 10000}, {3000, 9000}});
  ASSERT_TRUE(fit.valid);
  EXPECT_DOUBLE_EQ(fit.slope, -1.0);
  EXPECT_DOUBLE_EQ(fit.intercept, 12000.0);
  EXPECT_FALSE(mg::fit_line({{1000, 5000}}).valid);                // one point
  EXPECT_FALSE(mg::fit_line({{1000, 5000}, {7000, 5000}}).valid);  // zero quantity variance
}

TEST(LineFitting, ParallelLinesHaveNoIntersection) {
  const mg::LinearFit demand{true, -1.0, 12000.0};
  const mg::LinearFit supply{true, -1.0, 2000.0};
  EXPECT_FALSE(mg::line_intersection_price(demand, supply).has_value());
  const mg::LinearFit invalid{};
  EXPECT_FALSE(mg::line_intersection_price(demand, invalid).has_value());
}

TEST(RegressionClearing, AnalyticIntersection) {
  // demand corners on p = 12000 - q, supply corners on p = 2000 + q:
  // intersection exactly at p = 7000, everything crossing trades
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 11000, 1000, 0),
      order(2, 2, mg::Side::Bid, 10000, 1000, 1),
      order(3, 3, mg::Side::Bid, 9000, 1000, 2),
      order(4, 4, mg::Side::Ask, 3000, 1000, 3),
      order(5, 5, mg::Side::Ask, 4000, 1000, 4),
      order(6, 6, mg::Side::Ask, 5000, 1000, 5),
  };
  const auto r = mg::clear_regression(book);
  EXPECT_EQ(r.mode, mg::ClearingMode::Regression);
  EXPECT_FALSE(r.regression_fallback);
  ASSERT_TRUE(r.uniform_price.has_value());
  EXPECT_EQ(*r.uniform_price, 7000);
  EXPECT_EQ(r.cleared_volume, 3000);
  EXPECT_TRUE(r.unmatched.empty());
}

TEST(RegressionClearing, SharedGridZeroVolumeVariant) {
  // same demand line; supply priced mostly above the intersection: the
  // regression price stands but nothing on the supply side is eligible
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 11000, 1000, 0),
      order(2, 2, mg::Side::Bid, 10000, 1000, 1),
      order(3, 3, mg::Side::Bid, 9000, 1000, 2),
      order(4, 4, mg::Side::Ask, 9000, 7000, 3),
      order(5, 5, mg::Side::Ask, 10000, 1000, 4),
      order(6, 6, mg::Side::Ask, 11000, 1000, 5),
  };
  const auto r = mg::clear_regression(book);
  EXPECT_EQ(r.mode, mg::ClearingMode::Regression);
  ASSERT_TRUE(r.uniform_price.has_value());
  EXPECT_EQ(*r.uniform_price, 7000);
  EXPECT_EQ(r.cleared_volume, 0);
  EXPECT_TRUE(r.trades.empty());
}

TEST(RegressionClearing, CraftedPriceBelowMeanAsk) {
  // fitted lines cross at 5609.76 -> 5610; the mean ask is 6750, so the
  // uniform price undercuts the average seller's stated limit while the
  // cheapest ask still trades
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 9000, 2000, 0),
      order(2, 2, mg::Side::Bid, 3000, 2000, 1),
      order(3, 3, mg::Side::Bid, 2500, 2000, 2),
      order(4, 4, mg::Side::Bid, 2000, 2000, 3),
      order(5, 5, mg::Side::Bid, 1500, 2000, 4),
      order(6, 6, mg::Side::Ask, 4000, 1000, 5),
      order(7, 7, mg::Side::Ask, 6000, 3000, 6),
      order(8, 8, mg::Side::Ask, 8000, 3000, 7),
      order(9, 9, mg::Side::Ask, 9000, 3000, 8),
  };
  const auto r = mg::clear_regression(book);
  EXPECT_EQ(r.mode, mg::ClearingMode::Regression);
  EXPECT_FALSE(r.regression_fallback);
  ASSERT_TRUE(r.uniform_price.has_value());
  EXPECT_EQ(*r.uniform_price, 5610);
  EXPECT_EQ(r.cleared_volume, 1000);
  std::int64_t ask_sum = 0;
  int ask_count = 0;
  for (const auto& o : book)
    if (o.side == mg::Side::Ask) {
      ask_sum += o.price;
      ++ask_count;
    }
  EXPECT_LT(*r.uniform_price * ask_count, ask_sum);  // strictly below the mean ask
}

TEST(RegressionClearing, FallsBackWithoutTwoDistinctPricesPerSide) {
  // single distinct ask price -> no supply line -> step fallback
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 9000, 100, 0),
      order(2, 2, mg::Side::Bid, 8000, 100, 1),
      order(3, 3, mg::Side::Ask, 5000, 100, 2),
      order(4, 4, mg::Side::Ask, 5000, 100, 3),
  };
  const auto r = mg::clear_regression(book);
  EXPECT_TRUE(r.regression_fallback);
  EXPECT_EQ(r.mode, mg::ClearingMode::StepCurve);
  ASSERT_TRUE(r.uniform_price.has_value());
  // step clearing answers instead
  const auto step = mg::clear_step(book);
  EXPECT_EQ(*r.uniform_price, *step.uniform_price);
  EXPECT_EQ(r.cleared_volume, step.cleared_volume);
}

TEST(RegressionClearing, FallsBackOnNonPositiveIntersection) {
  // steep supply fit with a deeply negative intercept drags the fitted
  // intersection below zero (-32.9): regression degrades to step pricing
  const std::vector<mg::Order> book = {
      order(1, 1, mg::Side::Bid, 5, 50, 0),
      order(2, 2, mg::Side::Bid, 3, 50, 1),
      order(3, 3, mg::Side::Ask, 10, 1000, 2),
      order(4, 4, mg::Side::Ask, 2000, 100, 3),
  };
  const auto r = mg::clear_regression(book);
  EXPECT_TRUE(r.regression_fallback);
  EXPECT_EQ(r.mode, mg::ClearingMode::StepCurve);
  // the fallback book does not cross at all
  EXPECT_FALSE(r.uniform_price.has_value());
  EXPECT_TRUE(r.trades.empty());
}

TEST(RegressionClearing, OlsOracleOnRandomBooks) {
  // the fitted lines must match a from-scratch least-squares computation
  mg::SimRng rng(5150);
  for (int round = 0; round < 200; ++round) {
    std::vector<mg::Order> side_orders;
    const std::size_t n = 2 + rng.bounded(6);
    for (std::size_t i = 0; i < n; ++i)
      side_orders.push_back(order(i + 1, static_cast<std::uint32_t>(i + 1), mg::Side::Ask,
                                  static_cast<mg::Millicents>(1 + rng.bounded(20)) * 333,
                                  static_cast<mg::WattHours>(1 + rng.bounded(50)), i));
    const auto pts = mg::side_curve_points(side_orders, mg::CurveSide::Supply);
    const auto fit = mg::fit_line(pts);
    if (pts.size() < 2) {
      EXPECT_FALSE(fit.valid);
      continue;
    }
    // independent accumulation in long double
    long double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& pt : pts) {
      sx += pt.cumulative_quantity;
      sy += pt.price;
      sxx += static_cast<long double>(pt.cumulative_quantity) * pt.cumulative_quantity;
      sxy += static_cast<long double>(pt.cumulative_quantity) * pt.price;
    }
    const long double m = static_cast<long double>(pts.size());
    const long double denom = sxx - sx * sx / m;
    if (denom == 0.0L) {
      EXPECT_FALSE(fit.valid);
      continue;
    }
    const long double slope = (sxy - sx * sy / m) / denom;
    const long double intercept = sy / m - slope * sx / m;
    ASSERT_TRUE(fit.valid);
    EXPECT_NEAR(fit.slope, static_cast<double>(slope), 1e-6);
    EXPECT_NEAR(fit.intercept, static_cast<double>(intercept), 1e-3);
  }
}

TEST(RegressionClearing, MatchedOrdersRespectLimits) {
  mg::SimRng rng(31337);
  for (int round = 0; round < 300; ++round) {
    std::vector<mg::Order> book;
    std::map<std::uint64_t, mg::Order> by_id;
    const std::size_t n = 2 + rng.bounded(10);
    for (std::size_t i = 0; i < n; ++i) {
      const bool is_bid = rng.bounded(2) == 0;
      const auto o = order(i + 1, static_cast<std::uint32_t>(1 + rng.bounded(6)),
                           is_bid ? mg::Side::Bid : mg::Side::Ask,
                           static_cast<mg::Millicents>(1 + rng.bounded(15)) * 700,
                           static_cast<mg::WattHours>(1 + rng.bounded(40)), i);
      book.push_back(o);
      by_id[o.order_id] = o;
    }
    const auto r = mg::clear_regression(book);
    for (const auto& t : r.trades) {
      EXPECT_GE(by_id[t.buy_order_id].price, t.price) << "round " << round;
      EXPECT_LE(by_id[t.sell_order_id].price, t.price) << "round " << round;
    }
    std::int64_t total = 0;
    for (const auto& t : r.trades) total += t.quantity;
    EXPECT_EQ(total, r.cleared_volume);
  }
}
