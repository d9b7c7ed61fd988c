#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace divret {

/// Serializes with sorted keys and every floating value printed via "%.<digits>g",
/// so output bytes depend only on the values. Non-finite floats are emitted as null.
std::string dump_stable(const nlohmann::json& value, int significant_digits = 9);

}  // namespace divret
