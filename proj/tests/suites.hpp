#pragma once

#include "baro/eval.hpp"

#include <cstdint>
#include <vector>

namespace testing_support {

/// Single root metric with an 8 sigma step at t=150; the root rotates over
/// services and metrics with the seed.
inline std::vector<baro::eval::FailureCase> step_suite(int n, std::uint64_t base_seed = 1) {
    std::vector<baro::eval::FailureCase> out;
    const auto names = baro::eval::synthetic_metric_names(4);
    for (int i = 0; i < n; ++i) {
        baro::eval::SyntheticSpec s;
        s.root_service = baro::eval::synthetic_service_name(i % s.n_services);
        s.root_metric = names[static_cast<std::size_t>((i / s.n_services) % names.size())];
        out.push_back(baro::eval::generate_synthetic_case(s, base_seed + static_cast<std::uint64_t>(i)));
    }
    return out;
}

/// Heavy-tailed spike train on svc0_cpu with lagged level shifts on the other
/// services' latency.
inline baro::eval::SyntheticSpec spike_spec() {
    baro::eval::SyntheticSpec s;
    s.fault_shape = baro::eval::FaultShape::SpikeTrain;
    s.propagation = {{"svc1", 5, 0.5}, {"svc2", 8, 0.5}, {"svc3", 10, 0.5}, {"svc4", 15, 0.5}};
    return s;
}

inline std::vector<baro::eval::FailureCase> spike_suite(int n, std::uint64_t base_seed = 100) {
    std::vector<baro::eval::FailureCase> out;
    for (int i = 0; i < n; ++i) {
        out.push_back(baro::eval::generate_synthetic_case(spike_spec(), base_seed + static_cast<std::uint64_t>(i)));
    }
    return out;
}

}  // namespace testing_support
