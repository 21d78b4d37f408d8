#pragma once

#include "heatperim/common.hpp"

#include <string>
#include <string_view>

namespace heatperim {

/// Lowercase hex SHA-256 digest.
std::string sha256Hex(std::string_view bytes);

/// Digest of the raw little-endian doubles of `v`.
std::string vectorHash(const Vector& v);

}  // namespace heatperim
