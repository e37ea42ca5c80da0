#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

namespace notai {

// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);
std::string sha256_hex(std::span<const std::uint8_t> bytes);

// Incremental SHA-256 for hashing large tables without concatenating them.
class Sha256 {
 public:
  Sha256();
  ~Sha256();
  Sha256(const Sha256&) = delete;
  Sha256& operator=(const Sha256&) = delete;

  void update(std::string_view bytes);
  void update(const void* data, std::size_t size);
  std::string hex_digest();

 private:
  void* ctx_;
};

}  // namespace notai
