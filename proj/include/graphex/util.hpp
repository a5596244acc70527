#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace graphex {

// splitmix64 finalizer; used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

template <typename... Rest>
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                                 Rest... rest) {
  return mix_seed(mix_seed(a, b), static_cast<std::uint64_t>(rest)...);
}

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

// Fixed-point text with the given number of fractional digits.
std::string format_fixed(double value, int digits);

// Strict parse of the whole token; returns false on any trailing garbage.
bool parse_double(std::string_view token, double& out);
bool parse_uint64(std::string_view token, std::uint64_t& out);

std::vector<std::string_view> split(std::string_view line, char sep);
std::vector<std::string_view> split_whitespace(std::string_view line);

std::string_view trim(std::string_view s);

}  // namespace graphex
