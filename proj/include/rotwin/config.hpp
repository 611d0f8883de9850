#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rotwin/endpoint.hpp"
#include "rotwin/hierarchy.hpp"
#include "rotwin/study.hpp"

namespace rotwin {

struct BootstrapSettings {
    int replicates = 0; // 0 disables the bootstrap
    std::uint64_t seed = 1;
};

struct StrataSettings {
    bool stratified = false;
    bool exclude_undersized = false; // drop strata too small for variance estimation
    std::map<std::string, double> weights; // default weight 1 per stratum
};

// One declarative JSON file drives both analysis and simulation; the
// hierarchy references endpoints by id.
struct StudyConfigFile {
    int schema_version = 1;
    double alpha = 0.05;
    std::int64_t rotation_cap = kDefaultRotationCap;
    std::vector<EndpointSpec> endpoints;
    Hierarchy hierarchy;
    StrataSettings strata;
    BootstrapSettings bootstrap;
    std::optional<StudyConfig> study; // present when a scenario section exists
};

StudyConfigFile load_config(const std::string& path);
StudyConfigFile parse_config(const std::string& text, const std::string& origin);

} // namespace rotwin
