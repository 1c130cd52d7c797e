#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "microgrid/simulator.hpp"

namespace microgrid {

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

inline std::string fixed6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", x);
  return buf;
}

inline UsdMicro daily_usd_micro(UsdMicro total, int epochs) {
  if (epochs == 0) return 0;
  return div_round_half_even_signed(total * 24, epochs);
}

}  // namespace detail

inline nlohmann::ordered_json summary_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["framework"] = to_string(r.framework);
  j["epochs"] = r.epochs;
  j["seed"] = r.seed;
  j["grid_price_millicents"] = r.grid_price;
  j["n_households"] = r.n_households;
  j["n_agents"] = r.agents.size();

  j["totals"] = {
      {"volume_wh", r.total_volume_wh},
      {"trades", r.trades.size()},
      {"gas_units", r.total_gas_units},
      {"gas_fee_wei", to_string(r.total_gas_fee_wei)},
      {"gas_fee_usd", format_usd_micro(wei_to_usd_micro(r.total_gas_fee_wei, r.gas.eth_usd))},
      {"price_volume_wh", to_string(r.price_volume_wh)},
  };
  j["prices"] = {
      {"mean_price_millicents", r.mean_price_millicents()},
      {"final_price_point_millicents",
       r.epoch_records.empty() ? 0 : r.epoch_records.back().price_point},
  };
  std::int64_t household_total = 0;
  for (const AgentSummary& a : r.agents)
    if (a.is_household) household_total += a.net_cost_usd_micro;
  j["costs"] = {
      {"mean_household_daily_cost_usd",
       format_usd_micro(r.mean_household_daily_cost_usd_micro())},
      {"total_household_net_cost_usd", format_usd_micro(household_total)},
  };
  j["checks"] = {
      {"all_epochs_conserved", r.all_epochs_conserved},
      {"all_energy_balanced", r.all_energy_balanced},
      {"battery_violations", r.battery_violations},
      {"safety_net_violations", r.safety_net_violations},
      {"ir_violations", r.ir_violations},
      {"anomaly_count", r.anomalies.size()},
  };
  j["anomalies"] = r.anomalies;

  j["agents"] = nlohmann::ordered_json::array();
  for (const AgentSummary& a : r.agents) {
    nlohmann::ordered_json e = {
        {"name", a.name},
        {"kind", a.is_household ? "household" : "plant"},
        {"battery_capacity_wh", a.battery_capacity_wh},
        {"final_charge_wh", a.final_charge_wh},
        {"initial_balance_wei", to_string(a.initial_balance)},
        {"final_balance_wei", to_string(a.final_balance)},
        {"net_cost_usd", format_usd_micro(a.net_cost_usd_micro)},
        {"daily_cost_usd",
         format_usd_micro(detail::daily_usd_micro(a.net_cost_usd_micro, r.epochs))},
        {"energy",
         {
             {"generation_wh", a.energy.generation},
             {"consumption_wh", a.energy.consumption},
             {"purchased_wh", a.energy.purchased},
             {"sold_wh", a.energy.sold},
             {"curtailed_wh", a.energy.curtailed},
             {"start_charge_wh", a.energy.start_charge},
         }},
        {"energy_balanced", a.energy_balanced},
    };
    if (a.lcoe)
      e["lcoe_millicents"] = *a.lcoe;
    else
      e["lcoe_millicents"] = nullptr;
    j["agents"].push_back(std::move(e));
  }
  return j;
}

// Writes the six report files. Same report -> byte-identical directory.
inline void write_report(const SimReport& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);

  {
    auto out = detail::open_out(dir / "summary.json");
    out << summary_json(r).dump(2) << '\n';
  }
  {
    auto out = detail::open_out(dir / "prices.csv");
    out << "epoch,price_point_millicents,volume_wh\n";
    for (const EpochRecord& e : r.epoch_records)
      out << e.epoch << ',' << e.price_point << ',' << e.volume_wh << '\n';
  }
  {
    auto out = detail::open_out(dir / "trades.csv");
    out << "epoch,buyer,seller,price_millicents_per_kwh,quantity_wh\n";
    for (const TradeRow& t : r.trades)
      out << t.epoch << ',' << t.buyer << ',' << t.seller << ',' << t.price << ','
          << t.quantity << '\n';
  }
  {
    auto out = detail::open_out(dir / "battery.csv");
    out << "epoch,mean_battery_fraction\n";
    for (const EpochRecord& e : r.epoch_records)
      out << e.epoch << ',' << detail::fixed6(e.mean_battery_fraction) << '\n';
  }
  {
    auto out = detail::open_out(dir / "ledger.csv");
    out << "epoch,kind,from,to,value_wei,gas_used,gas_price_wei,fee_wei\n";
    for (const TxRecord& t : r.ledger_log)
      out << t.epoch << ',' << to_string(t.kind) << ',' << r.account_names[t.from.value] << ','
          << r.account_names[t.to.value] << ',' << to_string(t.value) << ',' << t.gas_used
          << ',' << to_string(t.gas_price) << ',' << to_string(t.fee()) << '\n';
  }
  {
    auto out = detail::open_out(dir / "gas.csv");
    out << "epoch,gas_units,fee_wei,fee_usd\n";
    for (const EpochRecord& e : r.epoch_records)
      out << e.epoch << ',' << e.gas_units << ',' << to_string(e.gas_fee_wei) << ','
          << format_usd_micro(wei_to_usd_micro(e.gas_fee_wei, r.gas.eth_usd)) << '\n';
  }
}

inline nlohmann::ordered_json comparison_digest(const SimReport& r) {
  return nlohmann::ordered_json{
      {"framework", to_string(r.framework)},
      {"mean_price_millicents", r.mean_price_millicents()},
      {"mean_household_daily_cost_usd",
       format_usd_micro(r.mean_household_daily_cost_usd_micro())},
      {"total_volume_wh", r.total_volume_wh},
      {"trades", r.trades.size()},
      {"total_gas_units", r.total_gas_units},
      {"total_gas_fee_usd",
       format_usd_micro(wei_to_usd_micro(r.total_gas_fee_wei, r.gas.eth_usd))},
  };
}

// comparison.json plus both full report directories (a/ and b/).
inline void write_comparison(const ComparisonReport& cmp, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_report(cmp.a, dir / "a");
  write_report(cmp.b, dir / "b");
  nlohmann::ordered_json j;
  j["a"] = comparison_digest(cmp.a);
  j["b"] = comparison_digest(cmp.b);
  j["delta"] = {
      {"mean_price_millicents", cmp.a.mean_price_millicents() - cmp.b.mean_price_millicents()},
      {"mean_household_daily_cost_usd",
       format_usd_micro(cmp.a.mean_household_daily_cost_usd_micro() -
                        cmp.b.mean_household_daily_cost_usd_micro())},
      {"total_volume_wh", cmp.a.total_volume_wh - cmp.b.total_volume_wh},
      {"total_gas_units",
       static_cast<std::int64_t>(cmp.a.total_gas_units) -
           static_cast<std::int64_t>(cmp.b.total_gas_units)},
  };
  auto out = detail::open_out(dir / "comparison.json");
  out << j.dump(2) << '\n';
}

}  // namespace microgrid
