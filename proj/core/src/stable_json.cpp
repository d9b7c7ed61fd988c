#include "divret/stable_json.hpp"

#include <cmath>
#include <cstdio>
#include <map>

namespace divret {
namespace {

void emit(const nlohmann::json& v, int digits, std::string& out) {
    using nlohmann::json;
    switch (v.type()) {
    case json::value_t::object: {
        // nlohmann's default object is std::map, but don't rely on it.
        std::map<std::string, const json*> sorted;
        for (const auto& [key, child] : v.items()) sorted.emplace(key, &child);
        out += '{';
        bool first = true;
        for (const auto& [key, child] : sorted) {
            if (!first) out += ',';
            first = false;
            out += json(key).dump();
            out += ':';
            emit(*child, digits, out);
        }
        out += '}';
        break;
    }
    case json::value_t::array: {
        out += '[';
        bool first = true;
        for (const auto& child : v) {
            if (!first) out += ',';
            first = false;
            emit(child, digits, out);
        }
        out += ']';
        break;
    }
    case json::value_t::number_float: {
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            out += "null";
            break;
        }
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.*g", digits, d == 0.0 ? 0.0 : d);
        out += buf;
        break;
    }
    default:
        out += v.dump();
    }
}

}  // namespace

std::string dump_stable(const nlohmann::json& value, int significant_digits) {
    std::string out;
    emit(value, significant_digits, out);
    return out;
}

}  // namespace divret
