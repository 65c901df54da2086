#pragma once

#include <cstdint>
#include <vector>

#include "rvisc/manifold.hpp"
#include "rvisc/report.hpp"

namespace rvisc {

struct GeometrySuiteOptions {
    long samples = 1000;
    std::uint64_t seed = 1;
};

// Transport isometry and inversion, exp/log inversion, geodesic additivity,
// distance symmetry, triangle inequality and sectional curvature.
std::vector<CheckReport> geometry_suite(const ManifoldPtr& m, const GeometrySuiteOptions& opts = {});

}  // namespace rvisc
