#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <cstring>
#include <optional>
#include <random>
#include <span>
#include <string>

namespace provq {

// 128-bit UUID stored big-endian (RFC 4122 field order).
struct Uuid {
  std::array<std::uint8_t, 16> bytes{};

  auto operator<=>(const Uuid&) const = default;

  // Version nibble (high nibble of byte 6): 4 for random, 5 for name-based.
  int version() const { return bytes[6] >> 4; }
  // Variant: RFC 4122 layout has the top two bits of byte 8 equal to 10.
  bool rfc_variant() const { return (bytes[8] & 0xC0) == 0x80; }

  std::string to_string() const;
  static std::optional<Uuid> parse(const std::string& text);
  static Uuid nil() { return Uuid{}; }
};

struct UuidHash {
  std::size_t operator()(const Uuid& u) const {
    std::uint64_t hi, lo;
    std::memcpy(&hi, u.bytes.data(), 8);
    std::memcpy(&lo, u.bytes.data() + 8, 8);
    return std::size_t(hi * 0x9E3779B97F4A7C15ull ^ lo);
  }
};

// Random (v4) UUID from a caller-owned generator, so the whole pipeline can
// be made reproducible by seeding. Algorithm pinned: std::mt19937_64.
Uuid uuid_v4(std::mt19937_64& rng);

// Name-based (v5) UUID: SHA-1 over namespace bytes followed by the name.
Uuid uuid_v5(const Uuid& ns, std::span<const std::uint8_t> name);

}  // namespace provq
