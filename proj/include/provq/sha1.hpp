#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>

namespace provq {

// Minimal SHA-1 (RFC 3174), streaming interface. Used only for content
// addressing of circuit gates (UUIDv5); not a security boundary.
class Sha1 {
 public:
  Sha1();

  void update(const void* data, std::size_t len);
  std::array<std::uint8_t, 20> digest();

  static std::array<std::uint8_t, 20> hash(const void* data, std::size_t len);
  static std::string hex(const std::array<std::uint8_t, 20>& d);

 private:
  void process_block(const std::uint8_t* block);

  std::array<std::uint32_t, 5> state_;
  std::array<std::uint8_t, 64> buffer_;
  std::uint64_t total_len_ = 0;
  std::size_t buffer_len_ = 0;
};

}  // namespace provq
