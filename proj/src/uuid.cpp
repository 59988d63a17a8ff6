#include "provq/uuid.hpp"

#include <cstring>

#include "provq/sha1.hpp"

namespace provq {

std::string Uuid::to_string() const {
  static const char* digits = "0123456789abcdef";
  std::string out;
  out.reserve(36);
  for (int i = 0; i < 16; ++i) {
    if (i == 4 || i == 6 || i == 8 || i == 10) out.push_back('-');
    out.push_back(digits[bytes[i] >> 4]);
    out.push_back(digits[bytes[i] & 0xF]);
  }
  return out;
}

std::optional<Uuid> Uuid::parse(const std::string& text) {
  if (text.size() != 36) return std::nullopt;
  Uuid u;
  int byte_index = 0;
  int nibbles = 0;
  std::uint8_t current = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char ch = text[i];
    if (i == 8 || i == 13 || i == 18 || i == 23) {
      if (ch != '-') return std::nullopt;
      continue;
    }
    std::uint8_t v;
    if (ch >= '0' && ch <= '9') v = std::uint8_t(ch - '0');
    else if (ch >= 'a' && ch <= 'f') v = std::uint8_t(ch - 'a' + 10);
    else if (ch >= 'A' && ch <= 'F') v = std::uint8_t(ch - 'A' + 10);
    else return std::nullopt;
    current = std::uint8_t((current << 4) | v);
    if (++nibbles == 2) {
      u.bytes[byte_index++] = current;
      current = 0;
      nibbles = 0;
    }
  }
  return byte_index == 16 ? std::optional<Uuid>(u) : std::nullopt;
}

Uuid uuid_v4(std::mt19937_64& rng) {
  Uuid u;
  std::uint64_t hi = rng();
  std::uint64_t lo = rng();
  std::memcpy(u.bytes.data(), &hi, 8);
  std::memcpy(u.bytes.data() + 8, &lo, 8);
  u.bytes[6] = std::uint8_t((u.bytes[6] & 0x0F) | 0x40);
  u.bytes[8] = std::uint8_t((u.bytes[8] & 0x3F) | 0x80);
  return u;
}

Uuid uuid_v5(const Uuid& ns, std::span<const std::uint8_t> name) {
  Sha1 h;
  h.update(ns.bytes.data(), ns.bytes.size());
  h.update(name.data(), name.size());
  auto d = h.digest();
  Uuid u;
  std::memcpy(u.bytes.data(), d.data(), 16);
  u.bytes[6] = std::uint8_t((u.bytes[6] & 0x0F) | 0x50);
  u.bytes[8] = std::uint8_t((u.bytes[8] & 0x3F) | 0x80);
  return u;
}

}  // namespace provq
