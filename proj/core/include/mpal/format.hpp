#pragma once

#include <string>

namespace mpal {

/// Locale-independent shortest-roundtrip-safe text for a double ('.' decimal,
/// 17 significant digits).
std::string format_double(double value);

}  // namespace mpal
