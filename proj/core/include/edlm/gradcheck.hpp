#pragma once

#include <cstdint>

#include "edlm/model.hpp"

namespace edlm {

struct GradCheckReport {
    int networks = 0;
    long long checked_values = 0;
    double max_rel_err = 0.0;
};

/// Builds `networks` random small networks (up to 3 parameterized layers,
/// <= 500 parameters) in double precision, and compares the analytic backward
/// pass against central finite differences for every parameter and the input.
/// Relative error per value is |a - f| / max(|a|, |f|, 1e-6).
GradCheckReport run_gradcheck_suite(std::uint64_t seed, int networks = 100, double eps = 1e-5);

}  // namespace edlm
