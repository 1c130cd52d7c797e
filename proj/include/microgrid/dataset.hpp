#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "microgrid/pricing.hpp"
#include "microgrid/rng.hpp"
#include "microgrid/units.hpp"

namespace microgrid {

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NegativeValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- civil-time helpers (proleptic Gregorian, UTC) ---

namespace timeutil {

// Days since 1970-01-01 for a civil date (valid far beyond any dataset span).
inline std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

inline void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int>(yoe) + static_cast<int>(era) * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp + (mp < 10 ? 3 : -9);
  y += m <= 2;
}

// "YYYY-MM-DDTHH:MM:SSZ" -> seconds since 1970-01-01T00:00:00Z.
inline std::int64_t parse_utc(const std::string& text) {
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
  char z = 0;
  if (std::sscanf(text.c_str(), "%d-%d-%dT%d:%d:%d%c", &y, &mo, &d, &h, &mi, &s, &z) != 7 ||
      z != 'Z' || mo < 1 || mo > 12 || d < 1 || d > 31 || h < 0 || h > 23 || mi < 0 ||
      mi > 59 || s < 0 || s > 59)
    throw ParseError("bad timestamp: " + text);
  return days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d)) * 86400 +
         h * 3600 + mi * 60 + s;
}

inline std::string format_utc(std::int64_t unix_seconds) {
  std::int64_t days = unix_seconds / 86400;
  std::int64_t rem = unix_seconds % 86400;
  if (rem < 0) {
    rem += 86400;
    --days;
  }
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[24];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", y, m, d,
                static_cast<long long>(rem / 3600), static_cast<long long>(rem % 3600 / 60),
                static_cast<long long>(rem % 60));
  return buf;
}

}  // namespace timeutil

// --- dataset model ---

struct HourlyEntry {
  WattHours load_wh = 0;
  WattHours generation_wh = 0;
};

struct HouseholdProfile {
  std::string id;
  double pv_capacity_kwp = 0.0;
  WattHours battery_capacity_wh = 0;
  std::vector<HourlyEntry> series;

  WattHours total_generation_wh() const {
    WattHours total = 0;
    for (const auto& e : series) total += e.generation_wh;
    return total;
  }

  // Season-independent annual estimate: the series' average hourly output
  // extended to a full year.
  double annual_generation_kwh_estimate() const {
    if (series.empty()) return 0.0;
    return static_cast<double>(total_generation_wh()) * 8760.0 /
           static_cast<double>(series.size()) / 1000.0;
  }
};

struct BiomassPlant {
  std::string id;
  WattHours capacity_wh_per_epoch = 0;
  Millicents lcoe_lower = 5000;
  Millicents lcoe_upper = 12000;
};

struct Dataset {
  std::int64_t start_unix = 0;  // first hour, UTC
  std::vector<HouseholdProfile> households;
  std::vector<BiomassPlant> biomass;

  std::size_t series_length() const {
    return households.empty() ? 0 : households.front().series.size();
  }
};

// --- ingestion ---

// One profile CSV: header then hourly rows "timestamp,load_wh,generation_wh".
// Rows must be strictly consecutive hours starting at `expected_start`
// (checked when >= 0); quantities must be non-negative integers.
inline std::vector<HourlyEntry> load_profile_csv(const std::filesystem::path& path,
                                                 std::int64_t expected_start = -1) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile: " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "timestamp,load_wh,generation_wh")
    throw ParseError(path.string() + ":1: bad or missing header");
  std::vector<HourlyEntry> series;
  std::int64_t expected = expected_start;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected 3 columns");
    const std::int64_t ts = timeutil::parse_utc(line.substr(0, c1));
    long long load = 0, gen = 0;
    try {
      std::size_t used = 0;
      const std::string load_s = line.substr(c1 + 1, c2 - c1 - 1);
      const std::string gen_s = line.substr(c2 + 1);
      load = std::stoll(load_s, &used);
      if (used != load_s.size()) throw std::invalid_argument(load_s);
      gen = std::stoll(gen_s, &used);
      if (used != gen_s.size()) throw std::invalid_argument(gen_s);
    } catch (const std::exception&) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": bad quantity");
    }
    if (load < 0 || gen < 0)
      throw NegativeValueError(path.string() + ":" + std::to_string(line_no) +
                               ": negative energy quantity");
    if (expected >= 0 && ts != expected)
      throw GapError(path.string() + ":" + std::to_string(line_no) + ": expected hour " +
                     timeutil::format_utc(expected) + ", got " + timeutil::format_utc(ts));
    expected = ts + 3600;
    series.push_back({load, gen});
  }
  if (series.empty()) throw ParseError(path.string() + ": no data rows");
  return series;
}

// Manifest JSON: {"start": "...Z", "households": [{"id", "file",
// "pv_capacity_kwp", "battery_capacity_wh"}, ...], "biomass": [{"id",
// "capacity_wh_per_epoch", "lcoe_lower_millicents", "lcoe_upper_millicents"}]}
inline Dataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw ParseError("cannot open manifest: " + manifest_path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  Dataset ds;
  try {
    ds.start_unix = timeutil::parse_utc(doc.at("start").get<std::string>());
    const auto base_dir = manifest_path.parent_path();
    for (const auto& h : doc.at("households")) {
      HouseholdProfile p;
      p.id = h.at("id").get<std::string>();
      p.pv_capacity_kwp = h.at("pv_capacity_kwp").get<double>();
      p.battery_capacity_wh = h.at("battery_capacity_wh").get<WattHours>();
      if (p.battery_capacity_wh < 0)
        throw NegativeValueError(p.id + ": negative battery capacity");
      p.series = load_profile_csv(base_dir / h.at("file").get<std::string>(), ds.start_unix);
      ds.households.push_back(std::move(p));
    }
    for (const auto& b : doc.value("biomass", nlohmann::json::array())) {
      BiomassPlant plant;
      plant.id = b.at("id").get<std::string>();
      plant.capacity_wh_per_epoch = b.at("capacity_wh_per_epoch").get<WattHours>();
      plant.lcoe_lower = b.at("lcoe_lower_millicents").get<Millicents>();
      plant.lcoe_upper = b.at("lcoe_upper_millicents").get<Millicents>();
      if (plant.capacity_wh_per_epoch < 0)
        throw NegativeValueError(plant.id + ": negative capacity");
      if (plant.lcoe_lower > plant.lcoe_upper)
        throw ParseError(plant.id + ": inverted cost bounds");
      ds.biomass.push_back(std::move(plant));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(manifest_path.string() + ": " + e.what());
  }
  if (ds.households.empty()) throw ParseError(manifest_path.string() + ": no households");
  const std::size_t len = ds.households.front().series.size();
  for (const auto& h : ds.households)
    if (h.series.size() != len)
      throw GapError(h.id + ": series length " + std::to_string(h.series.size()) +
                     " differs from " + std::to_string(len));
  return ds;
}

// --- synthesis ---

struct SyntheticGenSpec {
  int n_households = 20;
  int days = 7;
  std::uint64_t seed = 42;
  double pv_kwp_min = 2.0;
  double pv_kwp_max = 9.0;
  // load model: base + evening-peaked daily sinusoid + uniform noise, Wh
  WattHours load_base_wh = 800;
  WattHours load_amplitude_wh = 400;
  WattHours load_noise_wh = 100;
  int load_peak_hour = 19;
  // solar model: daylight bell between 06:00 and 18:00, scaled per kWp
  WattHours solar_peak_wh_per_kwp = 900;
  double weather_dip_max = 0.25;  // per-day multiplicative haircut, uniform [0, max]
  // dispatchable fleet: identical units, per-unit costs drawn inside the band;
  // either zero disables it
  int biomass_plants = 2;
  WattHours biomass_capacity_wh_per_epoch = 15000;  // per plant
  Millicents biomass_lcoe_lower = 5000;
  Millicents biomass_lcoe_upper = 12000;
  std::string start = "2025-06-01T00:00:00Z";
};

// Deterministic in-memory synthetic scenario; nothing touches disk.
inline Dataset build_synthetic(const SyntheticGenSpec& spec) {
  if (spec.n_households < 1) throw std::invalid_argument("n_households must be >= 1");
  if (spec.days < 1) throw std::invalid_argument("days must be >= 1");
  if (spec.pv_kwp_min > spec.pv_kwp_max || spec.pv_kwp_min < 0.0)
    throw std::invalid_argument("bad pv capacity range");
  if (spec.biomass_plants < 0)
    throw std::invalid_argument("biomass plant count cannot be negative");

  Dataset ds;
  ds.start_unix = timeutil::parse_utc(spec.start);
  const int hours = spec.days * 24;
  StorageCatalog catalog;

  for (int i = 0; i < spec.n_households; ++i) {
    SimRng rng(mix_seed(spec.seed, 1000u + static_cast<std::uint64_t>(i)));
    HouseholdProfile p;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "h%03d", i + 1);
    p.id = idbuf;
    const std::int64_t tenths_span =
        static_cast<std::int64_t>(std::llround((spec.pv_kwp_max - spec.pv_kwp_min) * 10.0));
    p.pv_capacity_kwp =
        spec.pv_kwp_min +
        static_cast<double>(rng.uniform_int(0, tenths_span)) / 10.0;
    const auto battery = catalog.battery_for(p.pv_capacity_kwp);
    p.battery_capacity_wh =
        battery ? static_cast<WattHours>(std::llround(battery->total_capacity_kwh() * 1000.0))
                : 0;

    p.series.reserve(static_cast<std::size_t>(hours));
    double weather = 1.0;
    for (int h = 0; h < hours; ++h) {
      const int hod = h % 24;
      if (hod == 0) weather = 1.0 - rng.uniform_real() * spec.weather_dip_max;
      const double phase =
          2.0 * 3.14159265358979323846 * static_cast<double>(hod - (spec.load_peak_hour - 6)) /
          24.0;
      const double sinusoid = static_cast<double>(spec.load_amplitude_wh) * std::sin(phase);
      const WattHours noise = rng.uniform_int(-spec.load_noise_wh, spec.load_noise_wh);
      WattHours load = static_cast<WattHours>(std::llround(
                           static_cast<double>(spec.load_base_wh) + sinusoid)) +
                       noise;
      if (load < 0) load = 0;
      WattHours gen = 0;
      if (hod > 6 && hod < 18) {
        const double bell = std::sin(3.14159265358979323846 * (hod - 6) / 12.0);
        gen = static_cast<WattHours>(
            std::floor(p.pv_capacity_kwp * static_cast<double>(spec.solar_peak_wh_per_kwp) *
                       bell * bell * weather));
      }
      p.series.push_back({load, gen});
    }
    ds.households.push_back(std::move(p));
  }

  if (spec.biomass_capacity_wh_per_epoch > 0) {
    for (int i = 0; i < spec.biomass_plants; ++i) {
      char idbuf[24];
      std::snprintf(idbuf, sizeof idbuf, "biomass%d", i + 1);
      ds.biomass.push_back({idbuf, spec.biomass_capacity_wh_per_epoch, spec.biomass_lcoe_lower,
                            spec.biomass_lcoe_upper});
    }
  }
  return ds;
}

// Synthetic scenario written under `out_dir` as profile CSVs plus a manifest.
// The same spec always produces byte-identical files.
inline Dataset generate_synthetic(const SyntheticGenSpec& spec,
                                  const std::filesystem::path& out_dir) {
  Dataset ds = build_synthetic(spec);
  std::filesystem::create_directories(out_dir);
  const int hours = spec.days * 24;

  nlohmann::ordered_json manifest;
  manifest["start"] = spec.start;
  manifest["households"] = nlohmann::ordered_json::array();

  for (const auto& p : ds.households) {
    const std::string file = p.id + ".csv";
    std::ofstream out(out_dir / file, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + (out_dir / file).string());
    out << "timestamp,load_wh,generation_wh\n";
    for (int h = 0; h < hours; ++h)
      out << timeutil::format_utc(ds.start_unix + 3600LL * h) << ',' << p.series[h].load_wh
          << ',' << p.series[h].generation_wh << '\n';

    manifest["households"].push_back(nlohmann::ordered_json{
        {"id", p.id},
        {"file", file},
        {"pv_capacity_kwp", p.pv_capacity_kwp},
        {"battery_capacity_wh", p.battery_capacity_wh},
    });
  }

  manifest["biomass"] = nlohmann::ordered_json::array();
  for (const auto& plant : ds.biomass)
    manifest["biomass"].push_back(nlohmann::ordered_json{
        {"id", plant.id},
        {"capacity_wh_per_epoch", plant.capacity_wh_per_epoch},
        {"lcoe_lower_millicents", plant.lcoe_lower},
        {"lcoe_upper_millicents", plant.lcoe_upper},
    });

  std::ofstream mout(out_dir / "manifest.json", std::ios::binary);
  if (!mout) throw std::runtime_error("cannot write manifest");
  mout << manifest.dump(2) << '\n';
  return ds;
}

}  // namespace microgrid
