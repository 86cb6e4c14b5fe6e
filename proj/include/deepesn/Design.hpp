#pragma once

#include "Init.hpp"

#include <Eigen/Dense>

#include <vector>

namespace deepesn {

struct DepthSelection {
    std::size_t depth = 1;
    /// Spectral centroid of the top layer for every depth evaluated, in order.
    std::vector<double> centroid_trace;
};

/// Grows the stack one layer at a time, driving each candidate with `probe`
/// and measuring the spectral centroid of its top layer. Stops at the first
/// depth whose centroid moved by less than eps * centroid(depth 1) from the
/// previous depth, or at `max_layers`. This is a simplified surrogate for
/// frequency-driven depth design, not a published algorithm.
DepthSelection select_depth(const InitConfig& cfg, const Eigen::MatrixXd& probe, std::size_t max_layers, double eps,
                            Eigen::Index washout = 100, Eigen::Index window = 256);

} // namespace deepesn
