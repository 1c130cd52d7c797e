#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "microgrid/agents.hpp"
#include "microgrid/ledger.hpp"
#include "microgrid/pricing.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

enum class Framework : std::uint8_t { CDA, UniformStep, UniformRegression, GridBaseline };

inline const char* to_string(Framework f) {
  switch (f) {
    case Framework::CDA: return "cda";
    case Framework::UniformStep: return "uniform-step";
    case Framework::UniformRegression: return "uniform-regression";
    case Framework::GridBaseline: return "grid";
  }
  return "?";
}

inline std::optional<Framework> framework_from_string(const std::string& s) {
  if (s == "cda") return Framework::CDA;
  if (s == "uniform-step") return Framework::UniformStep;
  if (s == "uniform-regression") return Framework::UniformRegression;
  if (s == "grid") return Framework::GridBaseline;
  return std::nullopt;
}

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PricingConfig {
  CostTiers cost_tiers;
  StorageCatalog storage;
  int lifetime_years = 25;
  Millicents consumer_bid_floor = 5000;  // bid-price lower bound for non-producers
};

struct ScenarioConfig {
  Framework framework = Framework::CDA;
  int epochs = 168;
  std::uint64_t seed = 1;
  GasSchedule gas;
  Millicents grid_price = 15000;  // retail milli-cents per kWh
  AgentParams agent_defaults;
  PricingConfig pricing;
  std::string dataset_manifest;
  std::uint64_t initial_balance_eth = 100;
  int cda_order_ttl_epochs = 0;  // 0 = resting orders persist
  bool record_audit = true;      // keep per-order audit rows in the report

  Wei initial_balance_wei() const {
    return static_cast<Wei>(initial_balance_eth) * kWeiPerEther;
  }

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (grid_price <= 0) throw ConfigError("grid price must be positive");
    if (cda_order_ttl_epochs < 0) throw ConfigError("order ttl cannot be negative");
    if (pricing.lifetime_years < 1) throw ConfigError("lifetime_years must be >= 1");
    if (pricing.consumer_bid_floor <= 0) throw ConfigError("consumer bid floor must be positive");
    try {
      gas.validate();
      agent_defaults.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const char* where,
                                std::initializer_list<const char*> known) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) throw ConfigError(std::string(where) + ": unknown key '" + key + "'");
  }
}

template <typename T>
inline void maybe(const nlohmann::json& obj, const char* key, T& out) {
  if (const auto it = obj.find(key); it != obj.end()) {
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(std::string("bad value for '") + key + "'");
    }
  }
}

}  // namespace detail

// Scenario file: JSON, every key optional, unknown keys rejected. Flags given
// on the command line override file values.
inline ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw ConfigError(path.string() + ": top level must be an object");

  ScenarioConfig cfg;
  detail::reject_unknown_keys(doc, "config",
                              {"framework", "epochs", "seed", "grid_price_millicents",
                               "dataset", "initial_balance_eth", "cda_order_ttl_epochs",
                               "record_audit", "gas", "agent", "pricing"});

  if (doc.contains("framework")) {
    const auto name = doc["framework"].get<std::string>();
    const auto f = framework_from_string(name);
    if (!f) throw ConfigError("unknown framework '" + name + "'");
    cfg.framework = *f;
  }
  detail::maybe(doc, "epochs", cfg.epochs);
  detail::maybe(doc, "seed", cfg.seed);
  detail::maybe(doc, "grid_price_millicents", cfg.grid_price);
  detail::maybe(doc, "dataset", cfg.dataset_manifest);
  // a relative dataset path is anchored at the config file's directory
  if (!cfg.dataset_manifest.empty() &&
      std::filesystem::path(cfg.dataset_manifest).is_relative())
    cfg.dataset_manifest = (path.parent_path() / cfg.dataset_manifest).string();
  detail::maybe(doc, "initial_balance_eth", cfg.initial_balance_eth);
  detail::maybe(doc, "cda_order_ttl_epochs", cfg.cda_order_ttl_epochs);
  detail::maybe(doc, "record_audit", cfg.record_audit);

  if (doc.contains("gas")) {
    const auto& g = doc["gas"];
    detail::reject_unknown_keys(g, "gas",
                                {"transfer_gas", "submit_order_gas", "cancel_order_gas",
                                 "contract_store_gas", "gas_price_wei", "eth_usd"});
    detail::maybe(g, "transfer_gas", cfg.gas.transfer_gas);
    detail::maybe(g, "submit_order_gas", cfg.gas.submit_order_gas);
    detail::maybe(g, "cancel_order_gas", cfg.gas.cancel_order_gas);
    detail::maybe(g, "contract_store_gas", cfg.gas.contract_store_gas);
    std::uint64_t gas_price = 0;
    detail::maybe(g, "gas_price_wei", gas_price);
    if (gas_price > 0) cfg.gas.gas_price = gas_price;
    detail::maybe(g, "eth_usd", cfg.gas.eth_usd);
  }
  if (doc.contains("agent")) {
    const auto& a = doc["agent"];
    detail::reject_unknown_keys(a, "agent",
                                {"forecast_horizon_h", "safety_net_permille",
                                 "buy_trigger_permille", "forecast_noise"});
    detail::maybe(a, "forecast_horizon_h", cfg.agent_defaults.forecast_horizon_h);
    detail::maybe(a, "safety_net_permille", cfg.agent_defaults.safety_net_permille);
    detail::maybe(a, "buy_trigger_permille", cfg.agent_defaults.buy_trigger_permille);
    detail::maybe(a, "forecast_noise", cfg.agent_defaults.forecast_noise);
  }
  if (doc.contains("pricing")) {
    const auto& p = doc["pricing"];
    detail::reject_unknown_keys(
        p, "pricing",
        {"usd_per_kwp_0_4", "usd_per_kwp_4_10", "usd_per_kwp_10_50", "small_battery_kwh",
         "small_battery_cost_usd", "wall_battery_kwh", "wall_battery_cost_usd",
         "lifetime_years", "consumer_bid_floor_millicents"});
    detail::maybe(p, "usd_per_kwp_0_4", cfg.pricing.cost_tiers.usd_per_kwp_0_4);
    detail::maybe(p, "usd_per_kwp_4_10", cfg.pricing.cost_tiers.usd_per_kwp_4_10);
    detail::maybe(p, "usd_per_kwp_10_50", cfg.pricing.cost_tiers.usd_per_kwp_10_50);
    detail::maybe(p, "small_battery_kwh", cfg.pricing.storage.small_unit_kwh);
    detail::maybe(p, "small_battery_cost_usd", cfg.pricing.storage.small_unit_cost_usd);
    detail::maybe(p, "wall_battery_kwh", cfg.pricing.storage.wall_unit_kwh);
    detail::maybe(p, "wall_battery_cost_usd", cfg.pricing.storage.wall_unit_cost_usd);
    detail::maybe(p, "lifetime_years", cfg.pricing.lifetime_years);
    detail::maybe(p, "consumer_bid_floor_millicents", cfg.pricing.consumer_bid_floor);
  }
  cfg.validate();
  return cfg;
}

}  // namespace microgrid
