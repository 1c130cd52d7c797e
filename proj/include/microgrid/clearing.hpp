#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "microgrid/orderbook.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

enum class ClearingMode : std::uint8_t { StepCurve, Regression };

struct ClearingResult {
  std::optional<Millicents> uniform_price;  // absent when nothing can trade
  std::vector<Trade> trades;                // all priced at uniform_price
  std::vector<Order> unmatched;             // residual quantities, bids then asks
  WattHours cleared_volume = 0;
  ClearingMode mode = ClearingMode::StepCurve;
  bool regression_fallback = false;  // regression request degraded to step pricing
};

enum class CurveSide : std::uint8_t { Demand, Supply };

struct CurvePoint {
  Millicents price = 0;
  WattHours cumulative_quantity = 0;
};

struct AggregateCurve {
  CurveSide side = CurveSide::Demand;
  std::vector<CurvePoint> points;  // ascending price
};

namespace detail {

inline bool bid_priority(const Order& a, const Order& b) {
  if (a.price != b.price) return a.price > b.price;
  if (a.seq != b.seq) return a.seq < b.seq;
  return a.order_id < b.order_id;
}

inline bool ask_priority(const Order& a, const Order& b) {
  if (a.price != b.price) return a.price < b.price;
  if (a.seq != b.seq) return a.seq < b.seq;
  return a.order_id < b.order_id;
}

inline void split_sides(const std::vector<Order>& orders, std::vector<Order>& bids,
                        std::vector<Order>& asks) {
  for (const Order& o : orders) (o.side == Side::Bid ? bids : asks).push_back(o);
}

// Total bid quantity priced at or above `p`.
inline WattHours demand_at(const std::vector<Order>& bids, Millicents p) {
  WattHours total = 0;
  for (const Order& o : bids)
    if (o.price >= p) total += o.quantity;
  return total;
}

// Total ask quantity priced at or below `p`.
inline WattHours supply_at(const std::vector<Order>& asks, Millicents p) {
  WattHours total = 0;
  for (const Order& o : asks)
    if (o.price <= p) total += o.quantity;
  return total;
}

// Takes the best `volume` of one side: orders sorted by `priority`, filled in
// order, the marginal order split. Returns (order, matched quantity) pairs and
// appends residuals to `unmatched`.
template <typename Priority>
inline std::vector<std::pair<Order, WattHours>> take_by_priority(
    std::vector<Order> side_orders, WattHours volume, Priority priority,
    std::vector<Order>& unmatched) {
  std::sort(side_orders.begin(), side_orders.end(), priority);
  std::vector<std::pair<Order, WattHours>> taken;
  for (const Order& o : side_orders) {
    const WattHours fill = std::min(volume, o.quantity);
    if (fill > 0) taken.emplace_back(o, fill);
    volume -= fill;
    if (fill < o.quantity) {
      Order rest = o;
      rest.quantity = o.quantity - fill;
      unmatched.push_back(rest);
    }
  }
  return taken;
}

// Pairs matched bid quantities against matched ask quantities in priority
// order, producing one trade per overlapping span.
inline void zip_trades(const std::vector<std::pair<Order, WattHours>>& matched_bids,
                       const std::vector<std::pair<Order, WattHours>>& matched_asks,
                       Millicents price, ClearingResult& result) {
  std::size_t bi = 0, ai = 0;
  WattHours bid_left = matched_bids.empty() ? 0 : matched_bids[0].second;
  WattHours ask_left = matched_asks.empty() ? 0 : matched_asks[0].second;
  while (bi < matched_bids.size() && ai < matched_asks.size()) {
    const Order& bid = matched_bids[bi].first;
    const Order& ask = matched_asks[ai].first;
    const WattHours qty = std::min(bid_left, ask_left);
    result.trades.push_back(
        Trade{bid.agent, ask.agent, price, qty, bid.epoch, bid.order_id, ask.order_id});
    result.cleared_volume += qty;
    bid_left -= qty;
    ask_left -= qty;
    if (bid_left == 0 && ++bi < matched_bids.size()) bid_left = matched_bids[bi].second;
    if (ask_left == 0 && ++ai < matched_asks.size()) ask_left = matched_asks[ai].second;
  }
}

// Matches both sides at `price` limited to `volume` and fills in the result.
inline void match_at_price(const std::vector<Order>& bids, const std::vector<Order>& asks,
                           Millicents price, WattHours volume, ClearingResult& result) {
  result.uniform_price = price;
  std::vector<Order> unmatched_bids, unmatched_asks;
  const auto matched_bids = take_by_priority(bids, volume, bid_priority, unmatched_bids);
  const auto matched_asks = take_by_priority(asks, volume, ask_priority, unmatched_asks);
  zip_trades(matched_bids, matched_asks, price, result);
  std::sort(unmatched_bids.begin(), unmatched_bids.end(), bid_priority);
  std::sort(unmatched_asks.begin(), unmatched_asks.end(), ask_priority);
  result.unmatched.insert(result.unmatched.end(), unmatched_bids.begin(), unmatched_bids.end());
  result.unmatched.insert(result.unmatched.end(), unmatched_asks.begin(), unmatched_asks.end());
}

inline std::vector<Millicents> distinct_prices(const std::vector<Order>& orders) {
  std::vector<Millicents> prices;
  prices.reserve(orders.size());
  for (const Order& o : orders) prices.push_back(o.price);
  std::sort(prices.begin(), prices.end());
  prices.erase(std::unique(prices.begin(), prices.end()), prices.end());
  return prices;
}

}  // namespace detail

// Demand and supply step curves evaluated at the sorted union of all order
// prices: demand(p) = bid quantity priced >= p, supply(p) = ask quantity
// priced <= p.
inline std::pair<AggregateCurve, AggregateCurve> build_curves(const std::vector<Order>& orders) {
  std::vector<Order> bids, asks;
  detail::split_sides(orders, bids, asks);
  AggregateCurve demand{CurveSide::Demand, {}};
  AggregateCurve supply{CurveSide::Supply, {}};
  for (const Millicents p : detail::distinct_prices(orders)) {
    demand.points.push_back({p, detail::demand_at(bids, p)});
    supply.points.push_back({p, detail::supply_at(asks, p)});
  }
  return {std::move(demand), std::move(supply)};
}

// Uniform-price clearing over one epoch's orders. The clearing price maximizes
// tradable volume min(demand(p), supply(p)) across the union of order prices;
// a tie takes the half-even midpoint of the lowest and highest maximizing
// price. Highest bids and lowest asks fill up to the cleared volume, the
// marginal order is split, and equal-priced marginal orders are rationed by
// arrival order.
inline ClearingResult clear_step(const std::vector<Order>& orders) {
  ClearingResult result;
  result.mode = ClearingMode::StepCurve;
  std::vector<Order> bids, asks;
  detail::split_sides(orders, bids, asks);

  WattHours best_volume = 0;
  Millicents lowest_best = 0, highest_best = 0;
  for (const Millicents p : detail::distinct_prices(orders)) {
    const WattHours volume = std::min(detail::demand_at(bids, p), detail::supply_at(asks, p));
    if (volume > best_volume) {
      best_volume = volume;
      lowest_best = highest_best = p;
    } else if (volume == best_volume && volume > 0) {
      highest_best = p;
    }
  }
  if (best_volume == 0) {
    std::sort(bids.begin(), bids.end(), detail::bid_priority);
    std::sort(asks.begin(), asks.end(), detail::ask_priority);
    result.unmatched.insert(result.unmatched.end(), bids.begin(), bids.end());
    result.unmatched.insert(result.unmatched.end(), asks.begin(), asks.end());
    return result;
  }
  const Millicents price = midpoint_half_even(lowest_best, highest_best);
  detail::match_at_price(bids, asks, price, best_volume, result);
  return result;
}

struct LinearFit {
  bool valid = false;
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of price (y) against cumulative quantity (x).
inline LinearFit fit_line(const std::vector<CurvePoint>& points) {
  if (points.size() < 2) return {};
  double mean_x = 0.0, mean_y = 0.0;
  for (const CurvePoint& pt : points) {
    mean_x += static_cast<double>(pt.cumulative_quantity);
    mean_y += static_cast<double>(pt.price);
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double var_x = 0.0, cov_xy = 0.0;
  for (const CurvePoint& pt : points) {
    const double dx = static_cast<double>(pt.cumulative_quantity) - mean_x;
    const double dy = static_cast<double>(pt.price) - mean_y;
    var_x += dx * dx;
    cov_xy += dx * dy;
  }
  if (var_x == 0.0) return {};
  const double slope = cov_xy / var_x;
  return {true, slope, mean_y - slope * mean_x};
}

// Price where the two fitted lines intersect; absent for parallel or
// degenerate fits.
inline std::optional<double> line_intersection_price(const LinearFit& demand,
                                                     const LinearFit& supply) {
  if (!demand.valid || !supply.valid) return std::nullopt;
  const double denom = demand.slope - supply.slope;
  if (denom == 0.0) return std::nullopt;
  const double q = (supply.intercept - demand.intercept) / denom;
  return demand.intercept + demand.slope * q;
}

// Corner points of one side's own step curve: the side's distinct order
// prices with the cumulative quantity at each.
inline std::vector<CurvePoint> side_curve_points(const std::vector<Order>& side_orders,
                                                 CurveSide side) {
  std::vector<CurvePoint> points;
  for (const Millicents p : detail::distinct_prices(side_orders)) {
    const WattHours q = side == CurveSide::Demand ? detail::demand_at(side_orders, p)
                                                  : detail::supply_at(side_orders, p);
    points.push_back({p, q});
  }
  return points;
}

// Uniform-price clearing with the price taken from the intersection of
// least-squares lines fitted to each side's own curve points. Falls back to
// clear_step (flagged in the result) when a side has fewer than two distinct
// prices, the fits are parallel or degenerate, or the intersection price is
// not positive. Matching admits bids priced >= and asks priced <= the
// regression price, trades min of the two sums, and rations the margin by
// priority.
inline ClearingResult clear_regression(const std::vector<Order>& orders) {
  std::vector<Order> bids, asks;
  detail::split_sides(orders, bids, asks);
  const auto fallback = [&] {
    ClearingResult r = clear_step(orders);
    r.regression_fallback = true;
    return r;
  };

  const auto demand_points = side_curve_points(bids, CurveSide::Demand);
  const auto supply_points = side_curve_points(asks, CurveSide::Supply);
  if (demand_points.size() < 2 || supply_points.size() < 2) return fallback();

  const LinearFit demand_fit = fit_line(demand_points);
  const LinearFit supply_fit = fit_line(supply_points);
  const auto raw_price = line_intersection_price(demand_fit, supply_fit);
  if (!raw_price || !(*raw_price > 0.0)) return fallback();
  const Millicents price = round_half_even(*raw_price);
  if (price <= 0) return fallback();

  ClearingResult result;
  result.mode = ClearingMode::Regression;
  const WattHours volume =
      std::min(detail::demand_at(bids, price), detail::supply_at(asks, price));
  detail::match_at_price(bids, asks, price, volume, result);
  return result;
}

}  // namespace microgrid
