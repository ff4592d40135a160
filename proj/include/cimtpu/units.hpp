#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cimtpu {

using Cycles = std::uint64_t;
using Bytes = std::uint64_t;
using Count = std::uint64_t;
using Joules = double;

inline constexpr std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) {
  return b == 0 ? 0 : (a + b - 1) / b;
}

// ceil(bytes / bandwidth) for a fractional bytes-per-cycle rate.
inline Cycles ceil_cycles(double amount, double per_cycle) {
  if (amount <= 0.0) return 0;
  if (per_cycle <= 0.0) throw std::invalid_argument("rate must be positive");
  return static_cast<Cycles>(std::ceil(amount / per_cycle - 1e-12));
}

inline constexpr std::uint64_t round_up(std::uint64_t v, std::uint64_t multiple) {
  return multiple == 0 ? v : ceil_div(v, multiple) * multiple;
}

inline constexpr std::uint32_t ceil_log2(std::uint64_t v) {
  std::uint32_t bits = 0;
  std::uint64_t p = 1;
  while (p < v) {
    p <<= 1;
    ++bits;
  }
  return bits;
}

// Parses byte quantities with decimal (KB/MB/GB/TB) or binary (KiB/MiB/GiB/TiB)
// suffixes. Bandwidth strings may carry a trailing "/s". Whitespace between the
// number and the suffix is allowed: "614 GB/s", "16MiB", "1024".
inline std::uint64_t parse_bytes(std::string_view text) {
  size_t pos = 0;
  while (pos < text.size() && (std::isspace(static_cast<unsigned char>(text[pos])))) ++pos;
  size_t start = pos;
  while (pos < text.size() &&
         (std::isdigit(static_cast<unsigned char>(text[pos])) || text[pos] == '.')) {
    ++pos;
  }
  if (pos == start) throw std::invalid_argument("byte quantity: missing number in '" + std::string(text) + "'");
  double value = std::stod(std::string(text.substr(start, pos - start)));
  while (pos < text.size() && std::isspace(static_cast<unsigned char>(text[pos]))) ++pos;
  std::string suffix(text.substr(pos));
  if (auto slash = suffix.find("/s"); slash != std::string::npos) suffix.erase(slash);
  while (!suffix.empty() && std::isspace(static_cast<unsigned char>(suffix.back()))) suffix.pop_back();

  double scale = 1.0;
  if (suffix.empty() || suffix == "B") {
    scale = 1.0;
  } else if (suffix == "KB") {
    scale = 1e3;
  } else if (suffix == "MB") {
    scale = 1e6;
  } else if (suffix == "GB") {
    scale = 1e9;
  } else if (suffix == "TB") {
    scale = 1e12;
  } else if (suffix == "KiB") {
    scale = 1024.0;
  } else if (suffix == "MiB") {
    scale = 1024.0 * 1024.0;
  } else if (suffix == "GiB") {
    scale = 1024.0 * 1024.0 * 1024.0;
  } else if (suffix == "TiB") {
    scale = 1024.0 * 1024.0 * 1024.0 * 1024.0;
  } else {
    throw std::invalid_argument("byte quantity: unknown suffix '" + suffix + "'");
  }
  return static_cast<std::uint64_t>(std::llround(value * scale));
}

inline std::string format_bytes(std::uint64_t bytes) {
  constexpr std::uint64_t kib = 1024, mib = kib * 1024, gib = mib * 1024;
  auto whole = [&](std::uint64_t unit) { return bytes % unit == 0; };
  if (bytes >= gib && whole(gib)) return std::to_string(bytes / gib) + "GiB";
  if (bytes >= mib && whole(mib)) return std::to_string(bytes / mib) + "MiB";
  if (bytes >= kib && whole(kib)) return std::to_string(bytes / kib) + "KiB";
  return std::to_string(bytes) + "B";
}

}  // namespace cimtpu
