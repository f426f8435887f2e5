#ifndef PROMPTLENS_COMMON_HASH_H_
#define PROMPTLENS_COMMON_HASH_H_

#include <cstdint>
#include <string>
#include <string_view>

namespace promptlens {

// 64-bit FNV-1a. Stable across platforms; used for config hashes and seeds.
uint64_t Fnv1a64(std::string_view data);
std::string Fnv1a64Hex(std::string_view data);

// Lowercase hex SHA-256 digest (OpenSSL).
std::string Sha256Hex(std::string_view data);

std::string Base64Encode(std::string_view data);
// Throws Error(kParse) on malformed input.
std::string Base64Decode(std::string_view data);

}  // namespace promptlens

#endif  // PROMPTLENS_COMMON_HASH_H_
