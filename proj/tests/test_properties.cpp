#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "properties.hpp"

using namespace longdep::props;

TEST_CASE("invariant properties") {
    for (const auto& p : all_properties()) {
        SUBCASE((p.module + ": " + p.name).c_str()) {
            const auto r = p.fn(0x5eed0000ULL + std::hash<std::string>{}(p.name) % 1000, kMinCases);
            INFO(r.first_failure);
            CHECK(r.cases >= kMinCases);
            CHECK(r.failures == 0);
        }
    }
}
