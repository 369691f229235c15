#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace longdep::props {

struct PropertyResult {
    std::size_t cases = 0;
    std::size_t failures = 0;
    std::string first_failure;
};

using PropertyFn = PropertyResult (*)(std::uint64_t seed, std::size_t cases);

struct Property {
    std::string module;
    std::string name;
    PropertyFn fn;
};

inline constexpr std::size_t kMinCases = 1000;

/// Every invariant property, grouped by module.
const std::vector<Property>& all_properties();

}  // namespace longdep::props
