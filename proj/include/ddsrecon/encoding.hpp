#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ddsrecon::enc {

std::string base64_encode(std::string_view data);
/// Throws InputError on characters outside the base64 alphabet or bad padding.
std::string base64_decode(std::string_view text);

/// Percent-encodes bytes that would break whitespace-separated key=value
/// records: space, '%', '=', '"' and control bytes.
std::string percent_encode(std::string_view text);
std::string percent_decode(std::string_view text);

bool is_hex_string(std::string_view text);
std::string to_lower(std::string_view text);

/// HMAC-SHA256 over `data`, returned as raw 32 bytes.
std::string hmac_sha256(std::string_view key, std::string_view data);

}  // namespace ddsrecon::enc
