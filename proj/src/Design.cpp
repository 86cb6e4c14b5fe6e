#include "deepesn/Design.hpp"

#include "deepesn/Analysis.hpp"

#include <cmath>

namespace deepesn {

DepthSelection select_depth(const InitConfig& cfg, const Eigen::MatrixXd& probe, std::size_t max_layers, double eps,
                            Eigen::Index washout, Eigen::Index window)
{
    if (max_layers < 1) throw ConfigError("max_layers must be at least 1");
    if (!(eps > 0.0)) throw ConfigError("eps must be positive");

    DepthSelection out;
    for (std::size_t depth = 1; depth <= max_layers; ++depth) {
        InitConfig c = cfg;
        c.n_layers = depth;
        const auto res = build_reservoir<double>(c);
        const auto traj = run(res, probe, washout);
        out.centroid_trace.push_back(spectral_profile(traj, window).per_layer_centroid.back());
        out.depth = depth;
        if (depth >= 2) {
            const double delta = std::abs(out.centroid_trace[depth - 1] - out.centroid_trace[depth - 2]);
            if (delta < eps * out.centroid_trace.front()) break;
        }
    }
    return out;
}

} // namespace deepesn
