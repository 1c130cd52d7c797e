#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace microgrid {

// Wei is the smallest currency unit: 1 Ether = 1e18 Wei. Balances can exceed
// 64 bits (e.g. 100 Ether = 1e20 Wei), so all Wei arithmetic is 128-bit.
using Wei = unsigned __int128;

using Gas = std::uint64_t;

// Prices are integer milli-cents per kWh: $0.15/kWh == 15'000.
using Millicents = std::int64_t;

// Energy quantities are integer watt-hours.
using WattHours = std::int64_t;

using Epoch = std::int64_t;

// USD amounts are integer micro-dollars: $0.105 == 105'000.
using UsdMicro = std::int64_t;

inline constexpr Wei kWeiPerEther = Wei(1'000'000'000ULL) * Wei(1'000'000'000ULL);

inline constexpr Millicents kMillicentsPerUsd = 100'000;

struct AccountId {
  std::uint32_t value = 0;
  friend constexpr bool operator==(AccountId, AccountId) = default;
  friend constexpr auto operator<=>(AccountId, AccountId) = default;
};

inline std::string to_string(Wei w) {
  if (w == 0) return "0";
  std::string digits;
  while (w > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<unsigned>(w % 10)));
    w /= 10;
  }
  return {digits.rbegin(), digits.rend()};
}

inline Wei wei_from_string(std::string_view s) {
  if (s.empty()) throw std::invalid_argument("empty Wei literal");
  Wei out = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw std::invalid_argument("non-digit in Wei literal");
    out = out * 10 + static_cast<unsigned>(c - '0');
  }
  return out;
}

// Integer division rounded half to even (banker's rounding).
inline Wei div_round_half_even(Wei num, Wei den) {
  if (den == 0) throw std::domain_error("division by zero");
  Wei q = num / den;
  Wei r = num % den;
  Wei twice = r * 2;
  if (twice > den || (twice == den && (q & 1) != 0)) ++q;
  return q;
}

// Signed integer division rounded half to even on the magnitude.
inline std::int64_t div_round_half_even_signed(std::int64_t num, std::int64_t den) {
  if (den <= 0) throw std::domain_error("denominator must be positive");
  const bool neg = num < 0;
  const Wei magnitude = neg ? Wei(static_cast<std::uint64_t>(-(num + 1)) + 1)
                            : Wei(static_cast<std::uint64_t>(num));
  const Wei q = div_round_half_even(magnitude, Wei(static_cast<std::uint64_t>(den)));
  const auto out = static_cast<std::int64_t>(static_cast<std::uint64_t>(q));
  return neg ? -out : out;
}

// Half-even midpoint of two integers (used for clearing-price tie breaks).
inline Millicents midpoint_half_even(Millicents a, Millicents b) {
  std::int64_t sum = a + b;
  std::int64_t q = sum >> 1;  // floor(sum / 2), sum is non-negative in practice
  if ((sum & 1) != 0 && (q & 1) != 0) ++q;
  return q;
}

// Half-even rounding of a finite double; relies on the default FE_TONEAREST mode.
inline std::int64_t round_half_even(double x) {
  return std::llrint(x);
}

// Ledger value of an energy parcel:
//   USD  = quantity_wh / 1000 * price / 100000
//   Wei  = USD / eth_usd * 1e18 = quantity_wh * price * 1e10 / eth_usd  (floor)
inline Wei energy_value_wei(WattHours quantity_wh, Millicents price, std::uint64_t eth_usd) {
  if (quantity_wh < 0 || price < 0) throw std::domain_error("negative energy value");
  if (eth_usd == 0) throw std::domain_error("eth_usd must be positive");
  Wei v = Wei(static_cast<std::uint64_t>(quantity_wh)) * Wei(static_cast<std::uint64_t>(price));
  return v * Wei(10'000'000'000ULL) / Wei(eth_usd);
}

// Wei -> micro-USD at a fixed exchange rate, rounded half-even.
inline UsdMicro wei_to_usd_micro(Wei wei, std::uint64_t eth_usd) {
  Wei micro = div_round_half_even(wei * Wei(eth_usd), Wei(1'000'000'000'000ULL));
  if (micro > Wei(std::numeric_limits<std::int64_t>::max()))
    throw std::overflow_error("USD value exceeds 64-bit micro-dollars");
  return static_cast<UsdMicro>(micro);
}

// Fixed 6-decimal USD formatting from integer micro-dollars. Pure integer
// formatting keeps report files locale-independent and exactly reproducible.
inline std::string format_usd_micro(UsdMicro micro) {
  bool neg = micro < 0;
  std::uint64_t m = neg ? 0ULL - static_cast<std::uint64_t>(micro) : static_cast<std::uint64_t>(micro);
  std::uint64_t whole = m / 1'000'000;
  std::uint64_t frac = m % 1'000'000;
  std::string out = neg ? "-" : "";
  out += std::to_string(whole);
  out += '.';
  std::string f = std::to_string(frac);
  out += std::string(6 - f.size(), '0');
  out += f;
  return out;
}

}  // namespace microgrid
