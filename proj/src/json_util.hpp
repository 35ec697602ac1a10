#pragma once

// Field accessors that report the JSON path of schema violations.

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/errors.hpp"

namespace edg::detail {

using nlohmann::json;

inline std::string join_path(const std::string& base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

inline std::string index_path(const std::string& base, std::size_t i) {
    return base + "[" + std::to_string(i) + "]";
}

inline const json& require(const json& obj, std::string_view key, const std::string& path) {
    if (!obj.is_object()) throw SchemaError(path + ": expected an object");
    const auto it = obj.find(std::string(key));
    if (it == obj.end()) throw SchemaError(join_path(path, key) + ": missing required field");
    return *it;
}

inline const json* optional_field(const json& obj, std::string_view key) {
    if (!obj.is_object()) return nullptr;
    const auto it = obj.find(std::string(key));
    if (it == obj.end() || it->is_null()) return nullptr;
    return &*it;
}

inline std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw SchemaError(path + ": expected a string");
    return j.get<std::string>();
}

inline double as_number(const json& j, const std::string& path) {
    if (!j.is_number()) throw SchemaError(path + ": expected a number");
    return j.get<double>();
}

inline bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw SchemaError(path + ": expected a boolean");
    return j.get<bool>();
}

inline const json& as_array(const json& j, const std::string& path) {
    if (!j.is_array()) throw SchemaError(path + ": expected an array");
    return j;
}

inline std::vector<std::string> as_string_list(const json& j, const std::string& path) {
    std::vector<std::string> out;
    const auto& arr = as_array(j, path);
    for (std::size_t i = 0; i < arr.size(); ++i) out.push_back(as_string(arr[i], index_path(path, i)));
    return out;
}

inline std::string string_field(const json& obj, std::string_view key, const std::string& path) {
    return as_string(require(obj, key, path), join_path(path, key));
}

inline std::vector<std::string> string_list_field(const json& obj, std::string_view key, const std::string& path) {
    const json* f = optional_field(obj, key);
    return f ? as_string_list(*f, join_path(path, key)) : std::vector<std::string>{};
}

// Wraps a conversion that may throw the library's InvalidArgument/MalformedCpe
// into a SchemaError carrying the field path.
template <typename F>
auto convert_at(const std::string& path, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const SchemaError&) {
        throw;
    } catch (const Error& e) {
        throw SchemaError(path + ": " + e.what());
    }
}

}  // namespace edg::detail
