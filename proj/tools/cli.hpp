#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "longdep/lds.hpp"
#include "longdep/pipeline.hpp"

namespace longdep::cli {

enum ExitCode : int {
    kOk = 0,
    kFatal = 1,
    kUsage = 2,
    kBackendUnreachable = 3,
    kPartial = 4,
};

/// Every knob of a run. Precedence: flags > config file > the built-in profile.
struct RunConfig {
    LdsConfig lds;
    SegmentationConfig segmentation;
    int workers = 1;
    double fraction = 0.5;
    std::string backend;  // "ngram:<model-file>" or "external[:<endpoint>]"

    nlohmann::ordered_json to_json() const;
    /// Overlays the keys present in `j`; unknown keys are a ConfigError.
    void apply(const nlohmann::json& j);
};

inline constexpr const char* kDefaultProfile = "default-32k";

/// L=128, M=32768, sampled LDS with T=5000, alpha=beta=1, tau=0.05, fraction 0.5.
RunConfig default_profile();

/// Entry point shared by the binary and the tests.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace longdep::cli
