#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace crowdscore {

/// Hex-encoded SHA-256 of a byte string.
std::string sha256_hex(std::string_view data);

/// Hex-encoded SHA-256 over a sequence of parts. Each part is fed
/// length-prefixed so that ("ab","c") and ("a","bc") never collide.
std::string sha256_hex(const std::vector<std::string_view>& parts);

/// SHA-256 of a file's contents. Throws FileNotFoundError.
std::string sha256_file(const std::string& path);

}  // namespace crowdscore
