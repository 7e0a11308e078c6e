#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fin::base64 {

/// RFC 4648 standard alphabet with '=' padding.
std::string encode(std::span<const std::uint8_t> bytes);

/// Throws std::invalid_argument on bad length, characters or padding.
std::vector<std::uint8_t> decode(std::string_view text);

}  // namespace fin::base64
