#pragma once

#include <algorithm>
#include <compare>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>

#include "mgsim/errors.hpp"

namespace mgsim {

/// Object identifier: 1-32 characters from [a-z0-9_].
class Id {
public:
    static constexpr std::size_t kMaxLength = 32;

    Id() = default;
    explicit Id(std::string value) : value_(std::move(value)) {
        if (!is_valid(value_)) throw InvalidParameter("invalid identifier '" + value_ + "'");
    }
    Id(const char* value) : Id(std::string(value)) {}

    [[nodiscard]] static bool is_valid(std::string_view s) noexcept {
        return !s.empty() && s.size() <= kMaxLength &&
               std::all_of(s.begin(), s.end(), [](char c) {
                   return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
               });
    }

    [[nodiscard]] const std::string& str() const noexcept { return value_; }

    auto operator<=>(const Id&) const = default;
    bool operator==(const Id&) const = default;

    friend std::ostream& operator<<(std::ostream& os, const Id& id) { return os << id.value_; }

private:
    std::string value_;
};

using BusId = Id;

}  // namespace mgsim

template <>
struct std::hash<mgsim::Id> {
    std::size_t operator()(const mgsim::Id& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
