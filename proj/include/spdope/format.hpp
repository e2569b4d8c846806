#pragma once

#include <string>

namespace spdope {

/// Shortest text that parses back to the same double ("nan"/"inf" spelled out).
std::string format_double(double v);

}  // namespace spdope
