#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>

#include "microgrid/rng.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

// Installed-cost table per capacity tier, USD per kWp.
struct CostTiers {
  double usd_per_kwp_0_4 = 2000.0;
  double usd_per_kwp_4_10 = 1800.0;
  double usd_per_kwp_10_50 = 1600.0;

  double usd_per_kwp(double capacity_kwp) const {
    if (capacity_kwp <= 0.0 || capacity_kwp > 50.0)
      throw std::invalid_argument("capacity outside supported range (0, 50] kWp");
    if (capacity_kwp < 4.0) return usd_per_kwp_0_4;
    if (capacity_kwp < 10.0) return usd_per_kwp_4_10;
    return usd_per_kwp_10_50;
  }
};

struct BatterySpec {
  double capacity_kwh = 0.0;
  double unit_cost_usd = 0.0;
  int count = 1;

  double total_cost_usd() const { return unit_cost_usd * count; }
  double total_capacity_kwh() const { return capacity_kwh * count; }
};

struct SolarSystemSpec {
  double capacity_kwp = 0.0;
  double annual_generation_kwh = 0.0;
  CostTiers cost_tiers;
  std::optional<BatterySpec> battery;
  int lifetime_years = 25;
};

// Storage sizing rules: nothing under 2 kWp, one small unit for [2, 4) kWp,
// one large wall unit for [4, 6) kWp, two of them at 6 kWp and above.
struct StorageCatalog {
  double small_unit_kwh = 8.0;
  double small_unit_cost_usd = 3000.0;
  double wall_unit_kwh = 13.5;
  double wall_unit_cost_usd = 5500.0;

  std::optional<BatterySpec> battery_for(double capacity_kwp) const {
    if (capacity_kwp < 2.0) return std::nullopt;
    if (capacity_kwp < 4.0) return BatterySpec{small_unit_kwh, small_unit_cost_usd, 1};
    if (capacity_kwp < 6.0) return BatterySpec{wall_unit_kwh, wall_unit_cost_usd, 1};
    return BatterySpec{wall_unit_kwh, wall_unit_cost_usd, 2};
  }
};

// Levelised cost of energy: capital plus storage cost spread evenly over the
// system lifetime, divided by annual output. Absent when the system never
// generates (a pure consumer has no production cost).
inline std::optional<Millicents> lcoe(const SolarSystemSpec& spec) {
  if (spec.annual_generation_kwh <= 0.0) return std::nullopt;
  if (spec.lifetime_years <= 0) throw std::invalid_argument("lifetime_years must be positive");
  double system_cost_usd = spec.capacity_kwp * spec.cost_tiers.usd_per_kwp(spec.capacity_kwp);
  if (spec.battery) system_cost_usd += spec.battery->total_cost_usd();
  const double annualized_usd = system_cost_usd / static_cast<double>(spec.lifetime_years);
  const double usd_per_kwh = annualized_usd / spec.annual_generation_kwh;
  return round_half_even(usd_per_kwh * static_cast<double>(kMillicentsPerUsd));
}

// Deterministic production-cost draw for a dispatchable producer, uniform on
// [lo, hi] milli-cents/kWh.
inline Millicents biomass_lcoe(std::uint64_t seed, std::uint32_t kind_index,
                               Millicents lo = 5000, Millicents hi = 12000) {
  if (lo > hi) throw std::invalid_argument("biomass cost range inverted");
  SimRng rng(mix_seed(seed, 0x62696f6d61737300ull + kind_index));
  return rng.uniform_int(lo, hi);
}

// Order-price distribution: a normal centred between a household's production
// cost and the grid retail price, cut off at both, which sit two standard
// deviations out on each side.
struct PriceDistribution {
  double mean = 0.0;      // milli-cents/kWh
  double std_dev = 0.0;   // milli-cents/kWh
  Millicents lower = 0;   // production cost
  Millicents upper = 0;   // grid retail price
};

// Absent when cost >= grid price: such a household cannot profitably sell.
inline std::optional<PriceDistribution> make_distribution(Millicents lower_cost,
                                                          Millicents grid_price) {
  if (lower_cost >= grid_price) return std::nullopt;
  const double lo = static_cast<double>(lower_cost);
  const double hi = static_cast<double>(grid_price);
  return PriceDistribution{(lo + hi) / 2.0, (hi - lo) / 4.0, lower_cost, grid_price};
}

// Draws normals until one lands inside the bounds; with the bounds at +/- 2
// standard deviations roughly 95% of draws are accepted. The returned integer
// always satisfies lower <= p <= upper.
inline Millicents sample_price(const PriceDistribution& dist, SimRng& rng) {
  for (;;) {
    const double draw = rng.normal(dist.mean, dist.std_dev);
    const Millicents p = round_half_even(draw);
    if (p >= dist.lower && p <= dist.upper) return p;
  }
}

}  // namespace microgrid
