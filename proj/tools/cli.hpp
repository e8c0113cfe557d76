#pragma once

#include "baro/pipeline.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace baro::cli {

/// Effective settings after defaults, the config file and flags are merged.
struct CliConfig {
    BaroConfig baro;
    std::size_t top = 0;  ///< 0 keeps every entry
    unsigned jobs = 1;
    std::uint64_t seed = 0;
    int repeats = 1;
    bool json = false;
    std::string overrides;  ///< kind/identity override file, empty for none
};

/// `-40..40 step 10`, `-40..40:10`, `-40..40` (step 10) or `-10,0,10`.
std::vector<int> parse_bias_list(std::string_view spec);

/// Exit codes: 0 success, 1 error, 2 anomaly detected (`detect` only).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace baro::cli
