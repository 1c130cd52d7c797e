#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "microgrid/units.hpp"

namespace microgrid {

enum class Side : std::uint8_t { Bid, Ask };

struct Order {
  std::uint64_t order_id = 0;
  AccountId agent;
  Side side = Side::Bid;
  Millicents price = 0;
  WattHours quantity = 0;
  Epoch epoch = 0;
  std::uint64_t seq = 0;  // arrival sequence within the epoch
};

struct Trade {
  AccountId buyer;
  AccountId seller;
  Millicents price = 0;
  WattHours quantity = 0;
  Epoch epoch = 0;
  std::uint64_t buy_order_id = 0;
  std::uint64_t sell_order_id = 0;
};

enum class SubmitError : std::uint8_t { None, InvalidOrder, SelfTrade };

struct SubmitResult {
  SubmitError error = SubmitError::None;
  std::uint64_t order_id = 0;
  std::vector<Trade> trades;
  WattHours resting_quantity = 0;  // unfilled remainder left in the book

  bool accepted() const { return error == SubmitError::None; }
};

enum class CancelError : std::uint8_t { None, NotFound, NotOwner };

struct CancelResult {
  CancelError error = CancelError::None;
  std::optional<Order> order;  // cancelled order with its remaining quantity
};

// Continuous double auction book. Incoming orders match greedily against the
// best opposite orders while prices cross (bid >= ask); each fill executes at
// the resting order's price. Priority is better price first, earlier arrival
// first. After every submit the book is uncrossed or one side is empty.
class Book {
 public:
  SubmitResult submit(AccountId agent, Side side, Millicents price, WattHours quantity,
                      Epoch epoch) {
    SubmitResult result;
    if (price <= 0 || quantity <= 0) {
      result.error = SubmitError::InvalidOrder;
      return result;
    }
    // Orders this submission would consume must not belong to the same agent;
    // a self-cross is rejected atomically, before any fill executes.
    if (would_self_trade(agent, side, price, quantity)) {
      result.error = SubmitError::SelfTrade;
      return result;
    }

    if (epoch != current_epoch_) {
      current_epoch_ = epoch;
      next_seq_ = 0;
    }
    Order incoming{next_order_id_++, agent, side, price, quantity, epoch, next_seq_++};
    result.order_id = incoming.order_id;

    if (side == Side::Bid) {
      match_incoming(incoming, asks_, result,
                     [](Millicents bid, Millicents ask) { return bid >= ask; });
      if (incoming.quantity > 0) rest(incoming, bids_);
    } else {
      match_incoming(incoming, bids_, result,
                     [](Millicents ask, Millicents bid) { return bid >= ask; });
      if (incoming.quantity > 0) rest(incoming, asks_);
    }
    result.resting_quantity = incoming.quantity;
    return result;
  }

  CancelResult cancel(std::uint64_t order_id, AccountId agent) {
    auto it = index_.find(order_id);
    if (it == index_.end()) return {CancelError::NotFound, std::nullopt};
    const auto [side, price] = it->second;
    CancelResult result{CancelError::NotFound, std::nullopt};
    auto remove_from = [&](auto& levels) {
      auto level = levels.find(price);
      auto& queue = level->second;
      for (auto q = queue.begin(); q != queue.end(); ++q) {
        if (q->order_id != order_id) continue;
        if (q->agent != agent) {
          result = {CancelError::NotOwner, std::nullopt};
          return;
        }
        Order removed = *q;
        queue.erase(q);
        if (queue.empty()) levels.erase(level);
        index_.erase(it);
        result = {CancelError::None, removed};
        return;
      }
    };
    if (side == Side::Bid) remove_from(bids_); else remove_from(asks_);
    return result;
  }

  std::pair<std::optional<Millicents>, std::optional<Millicents>> best_quotes() const {
    std::optional<Millicents> bid, ask;
    if (!bids_.empty()) bid = bids_.begin()->first;
    if (!asks_.empty()) ask = asks_.begin()->first;
    return {bid, ask};
  }

  bool contains(std::uint64_t order_id) const { return index_.contains(order_id); }

  std::size_t open_order_count() const { return index_.size(); }

  // Resting orders placed at or before `cutoff_epoch`, oldest first.
  std::vector<Order> orders_not_newer_than(Epoch cutoff_epoch) const {
    std::vector<Order> out;
    for_each_order([&](const Order& o) {
      if (o.epoch <= cutoff_epoch) out.push_back(o);
    });
    std::sort(out.begin(), out.end(),
              [](const Order& a, const Order& b) { return a.order_id < b.order_id; });
    return out;
  }

  std::vector<Order> all_orders() const {
    return orders_not_newer_than(std::numeric_limits<Epoch>::max());
  }

 private:
  using BidLevels = std::map<Millicents, std::deque<Order>, std::greater<>>;
  using AskLevels = std::map<Millicents, std::deque<Order>, std::less<>>;

  template <typename Levels>
  void rest(const Order& order, Levels& levels) {
    levels[order.price].push_back(order);
    index_.emplace(order.order_id, std::pair{order.side, order.price});
  }

  // Walks the opposite side in priority order, consuming resting orders while
  // the incoming order still crosses. Fills execute at the resting price.
  template <typename Levels, typename Crosses>
  void match_incoming(Order& incoming, Levels& opposite, SubmitResult& result, Crosses crosses) {
    while (incoming.quantity > 0 && !opposite.empty()) {
      auto level = opposite.begin();
      if (!crosses(incoming.price, level->first)) break;
      auto& queue = level->second;
      Order& resting = queue.front();
      const WattHours fill = std::min(incoming.quantity, resting.quantity);
      const bool incoming_buys = incoming.side == Side::Bid;
      result.trades.push_back(Trade{
          incoming_buys ? incoming.agent : resting.agent,
          incoming_buys ? resting.agent : incoming.agent,
          resting.price,
          fill,
          incoming.epoch,
          incoming_buys ? incoming.order_id : resting.order_id,
          incoming_buys ? resting.order_id : incoming.order_id,
      });
      incoming.quantity -= fill;
      resting.quantity -= fill;
      if (resting.quantity == 0) {
        index_.erase(resting.order_id);
        queue.pop_front();
        if (queue.empty()) opposite.erase(level);
      }
    }
  }

  bool would_self_trade(AccountId agent, Side side, Millicents price, WattHours quantity) const {
    const auto scan = [&](const auto& levels) {
      WattHours remaining = quantity;
      for (const auto& [level_price, queue] : levels) {
        const bool crosses = side == Side::Bid ? price >= level_price : level_price >= price;
        if (!crosses || remaining <= 0) break;
        for (const Order& resting : queue) {
          if (remaining <= 0) break;
          if (resting.agent == agent) return true;
          remaining -= resting.quantity;
        }
      }
      return false;
    };
    return side == Side::Bid ? scan(asks_) : scan(bids_);
  }

  template <typename Fn>
  void for_each_order(Fn&& fn) const {
    for (const auto& [price, queue] : bids_)
      for (const Order& o : queue) fn(o);
    for (const auto& [price, queue] : asks_)
      for (const Order& o : queue) fn(o);
  }

  BidLevels bids_;
  AskLevels asks_;
  std::unordered_map<std::uint64_t, std::pair<Side, Millicents>> index_;
  std::uint64_t next_order_id_ = 1;
  std::uint64_t next_seq_ = 0;
  Epoch current_epoch_ = std::numeric_limits<Epoch>::min();
};

}  // namespace microgrid
