#pragma once

#include <charconv>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>

namespace bamsdn {

/// Bandwidth held as integral kilobits per second so that allocation sums
/// are exact. Scenario files and reports use megabits per second.
class Bandwidth {
 public:
  constexpr Bandwidth() = default;

  static constexpr Bandwidth kbps(std::int64_t v) {
    Bandwidth b;
    b.kbps_ = v;
    return b;
  }
  static constexpr Bandwidth mbps(std::int64_t v) { return kbps(v * 1000); }
  static constexpr Bandwidth zero() { return Bandwidth{}; }

  constexpr std::int64_t as_kbps() const { return kbps_; }
  constexpr double as_mbps() const { return static_cast<double>(kbps_) / 1000.0; }

  constexpr Bandwidth& operator+=(Bandwidth o) {
    kbps_ += o.kbps_;
    return *this;
  }
  constexpr Bandwidth& operator-=(Bandwidth o) {
    kbps_ -= o.kbps_;
    return *this;
  }
  friend constexpr Bandwidth operator+(Bandwidth a, Bandwidth b) { return a += b; }
  friend constexpr Bandwidth operator-(Bandwidth a, Bandwidth b) { return a -= b; }
  friend constexpr Bandwidth operator*(Bandwidth a, std::int64_t k) { return kbps(a.kbps_ * k); }
  friend constexpr Bandwidth operator*(std::int64_t k, Bandwidth a) { return a * k; }

  friend constexpr auto operator<=>(Bandwidth, Bandwidth) = default;

 private:
  std::int64_t kbps_ = 0;
};

/// Simulation time in milliseconds.
using Millis = std::int64_t;

inline constexpr Millis seconds(std::int64_t s) { return s * 1000; }

namespace detail {

// Fixed-point decimal with `scale` fractional digits, e.g. "2.5" at scale 3
// -> 2500. Rejects more fractional digits than the scale can hold.
inline std::optional<std::int64_t> parse_fixed(std::string_view s, int scale) {
  if (s.empty()) return std::nullopt;
  bool negative = false;
  if (s.front() == '-') {
    negative = true;
    s.remove_prefix(1);
  }
  auto dot = s.find('.');
  std::string_view whole = s.substr(0, dot);
  std::string_view frac = dot == std::string_view::npos ? std::string_view{} : s.substr(dot + 1);
  if (whole.empty() && frac.empty()) return std::nullopt;
  if (static_cast<int>(frac.size()) > scale) return std::nullopt;

  std::int64_t w = 0;
  if (!whole.empty()) {
    auto [p, ec] = std::from_chars(whole.data(), whole.data() + whole.size(), w);
    if (ec != std::errc{} || p != whole.data() + whole.size()) return std::nullopt;
  }
  std::int64_t f = 0;
  if (!frac.empty()) {
    auto [p, ec] = std::from_chars(frac.data(), frac.data() + frac.size(), f);
    if (ec != std::errc{} || p != frac.data() + frac.size()) return std::nullopt;
  }
  for (int i = static_cast<int>(frac.size()); i < scale; ++i) f *= 10;
  std::int64_t mult = 1;
  for (int i = 0; i < scale; ++i) mult *= 10;
  std::int64_t v = w * mult + f;
  return negative ? -v : v;
}

// Inverse of parse_fixed; trailing fractional zeros are dropped.
inline std::string format_fixed(std::int64_t v, int scale) {
  std::int64_t mult = 1;
  for (int i = 0; i < scale; ++i) mult *= 10;
  std::string out = v < 0 ? "-" : "";
  std::uint64_t a = v < 0 ? static_cast<std::uint64_t>(-v) : static_cast<std::uint64_t>(v);
  out += std::to_string(a / mult);
  std::uint64_t frac = a % mult;
  if (frac != 0) {
    std::string digits = std::to_string(frac);
    digits.insert(0, static_cast<std::size_t>(scale) - digits.size(), '0');
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += '.';
    out += digits;
  }
  return out;
}

}  // namespace detail

inline std::optional<Bandwidth> parse_mbps(std::string_view s) {
  auto v = detail::parse_fixed(s, 3);
  if (!v) return std::nullopt;
  return Bandwidth::kbps(*v);
}

inline std::string format_mbps(Bandwidth b) { return detail::format_fixed(b.as_kbps(), 3); }

inline std::optional<Millis> parse_seconds(std::string_view s) { return detail::parse_fixed(s, 3); }

// Always three decimals; used for CSV timestamps.
inline std::string format_seconds(Millis t) {
  std::string s = std::to_string(t / 1000) + ".";
  std::string ms = std::to_string(t % 1000);
  s.append(3 - ms.size(), '0');
  return s + ms;
}

}  // namespace bamsdn
