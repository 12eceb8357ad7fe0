#pragma once

#include <limits>
#include <string>
#include <vector>

namespace ffnet {

struct LocusPoint {
    double p1 = 0.0;
    double p2 = 0.0;
    int segment = 0; // separate pieces of one named curve (branches, degenerate lines)
    double aux = std::numeric_limits<double>::quiet_NaN();
};

/// Ordered samples of a named analytic curve.
struct LocusCurve {
    std::string id;
    std::string p1_name;
    std::string p2_name;
    std::string aux_name;
    std::vector<LocusPoint> points;
};

} // namespace ffnet
