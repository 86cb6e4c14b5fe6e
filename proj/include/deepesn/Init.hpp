#pragma once

#include "Errors.hpp"
#include "Random.hpp"
#include "Reservoir.hpp"
#include "Seeds.hpp"
#include "SpectralRadius.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <cstdint>
#include <string>
#include <vector>

namespace deepesn {

/// Hyperparameters for building a reservoir stack. Per-layer lists hold
/// either one value (shared by all layers) or exactly `n_layers` values.
struct InitConfig {
    std::size_t n_layers = 1;
    Eigen::Index units_per_layer = 100;
    Eigen::Index input_dim = 1;
    std::vector<double> leak_rates{1.0};
    std::vector<double> spectral_radius_targets{0.9};
    double input_scaling = 1.0;
    double inter_layer_scaling = 1.0;
    bool use_bias = true;
    double bias_scaling = 0.1;
    double recurrent_density = 1.0;
    Activation activation = Activation::Tanh;
    std::uint64_t master_seed = 0;

    double leak_rate(std::size_t layer) const { return per_layer(leak_rates, layer, "leak_rates"); }
    double spectral_target(std::size_t layer) const
    {
        return per_layer(spectral_radius_targets, layer, "spectral_radius_targets");
    }

    void validate() const
    {
        if (n_layers < 1) throw ConfigError("n_layers must be at least 1");
        if (units_per_layer < 1) throw ConfigError("units_per_layer must be at least 1");
        if (input_dim < 1) throw ConfigError("input_dim must be at least 1");
        for (std::size_t i = 0; i < n_layers; ++i) {
            const double a = leak_rate(i);
            const double rho = spectral_target(i);
            if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("leak_rates must lie in [0,1]");
            if (!(rho > 0.0) || !std::isfinite(rho)) throw ConfigError("spectral_radius_targets must be positive");
            if (rho <= 1.0 - a)
                throw ConfigError("spectral_radius_targets[" + std::to_string(i) +
                                  "] must exceed 1 - leak_rate, the radius of the leak term alone");
        }
        auto check_scaling = [](double v, const char* name) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(name) + " must be finite and non-negative");
        };
        check_scaling(input_scaling, "input_scaling");
        check_scaling(inter_layer_scaling, "inter_layer_scaling");
        check_scaling(bias_scaling, "bias_scaling");
        if (!(recurrent_density > 0.0 && recurrent_density <= 1.0))
            throw ConfigError("recurrent_density must lie in (0,1]");
    }

private:
    static double per_layer(const std::vector<double>& values, std::size_t layer, const char* name)
    {
        if (values.size() == 1) return values.front();
        if (layer < values.size()) return values[layer];
        throw ConfigError(std::string(name) + " has " + std::to_string(values.size()) +
                          " entries; expected 1 or one per layer");
    }
};

inline constexpr int kMaxRecurrentDraws = 8;
inline constexpr double kDegenerateRadius = 1e-12;

namespace detail {

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> draw_uniform(Eigen::Index rows, Eigen::Index cols, double scale,
                                                                   std::uint64_t seed)
{
    Rng rng(seed);
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(scale * rng.uniform(-1.0, 1.0));
    return m;
}

/// Recurrent draw before scaling. Dense when density is 1, otherwise each
/// entry is kept with probability `density` and stored sparsely.
template <typename Scalar>
WeightMatrix<Scalar> draw_recurrent(Eigen::Index n, double density, std::uint64_t seed)
{
    if (density >= 1.0) return WeightMatrix<Scalar>(draw_uniform<Scalar>(n, n, 1.0, seed));
    Rng rng(seed);
    std::vector<Eigen::Triplet<Scalar>> entries;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i)
            if (rng.uniform01() < density) entries.emplace_back(i, j, static_cast<Scalar>(rng.uniform(-1.0, 1.0)));
    typename WeightMatrix<Scalar>::Sparse s(n, n);
    s.setFromTriplets(entries.begin(), entries.end());
    return WeightMatrix<Scalar>(std::move(s));
}

} // namespace detail

/// Factor c such that the spectral radius of (1 - a) I + c W equals
/// `target`, given the eigenvalues of W. Each eigenvalue l of W becomes
/// (1 - a) + c l, and |(1 - a) + c l| = target has one positive root in c
/// when target > 1 - a. The radius is at most `target` exactly up to the
/// smallest of those roots.
template <typename Scalar>
Scalar recurrent_scale_for_target(const Eigen::Matrix<std::complex<Scalar>, Eigen::Dynamic, 1>& eig, Scalar leak,
                                  Scalar target)
{
    const Scalar shift = Scalar(1) - leak;
    if (!(target > shift)) throw ConfigError("spectral radius target must exceed 1 - leak_rate");
    Scalar best = std::numeric_limits<Scalar>::infinity();
    for (const auto& l : eig) {
        const Scalar a = std::norm(l);
        if (a == Scalar(0)) continue;
        const Scalar b = Scalar(2) * shift * l.real();
        const Scalar c = shift * shift - target * target;
        const Scalar disc = std::sqrt(b * b - Scalar(4) * a * c);
        // c < 0, so the roots have opposite signs; pick the stable form.
        const Scalar root = b > 0 ? (Scalar(2) * c) / (-b - disc) : (-b + disc) / (Scalar(2) * a);
        best = std::min(best, root);
    }
    if (!std::isfinite(best)) throw NumericalError("recurrent matrix has no nonzero eigenvalue");
    return best;
}

/// Builds a reservoir stack from `cfg`. Input, inter-layer and bias weights
/// are uniform on [-1,1] times their scaling; recurrent weights are uniform
/// on [-1,1] with the configured density, rescaled so that the radius of
/// (1 - a) I + W_rec hits the layer's target. Layers are numbered from 1
/// for seed derivation, so a deeper stack built from the same seed shares
/// its lower layers with a shallower one.
template <typename Scalar = double>
DeepReservoir<Scalar> build_reservoir(const InitConfig& cfg)
{
    cfg.validate();
    std::vector<LayerSpec<Scalar>> layers;
    layers.reserve(cfg.n_layers);
    Eigen::Index below = cfg.input_dim;

    for (std::size_t i = 0; i < cfg.n_layers; ++i) {
        const std::uint64_t layer_id = i + 1;
        LayerSpec<Scalar> layer;
        layer.units = cfg.units_per_layer;
        layer.leak_rate = static_cast<Scalar>(cfg.leak_rate(i));
        layer.activation = cfg.activation;

        const double in_scale = i == 0 ? cfg.input_scaling : cfg.inter_layer_scaling;
        layer.input_weights = WeightMatrix<Scalar>(detail::draw_uniform<Scalar>(
            layer.units, below, in_scale, derive_layer_seed(cfg.master_seed, layer_id, SeedStream::Input)));

        const std::uint64_t rec_seed = derive_layer_seed(cfg.master_seed, layer_id, SeedStream::Recurrent);
        bool drawn = false;
        for (int attempt = 0; attempt < kMaxRecurrentDraws && !drawn; ++attempt) {
            WeightMatrix<Scalar> w =
                detail::draw_recurrent<Scalar>(layer.units, cfg.recurrent_density, derive_retry_seed(rec_seed, attempt));
            const auto eig = eigenvalues(w.to_dense());
            if (eig.cwiseAbs().maxCoeff() < kDegenerateRadius) continue;
            w.scale(recurrent_scale_for_target<Scalar>(eig, layer.leak_rate,
                                                       static_cast<Scalar>(cfg.spectral_target(i))));
            layer.recurrent_weights = std::move(w);
            drawn = true;
        }
        if (!drawn)
            throw NumericalError("layer " + std::to_string(layer_id) + ": recurrent draw degenerate after " +
                                 std::to_string(kMaxRecurrentDraws) + " attempts");

        if (cfg.use_bias)
            layer.bias = detail::draw_uniform<Scalar>(layer.units, 1, cfg.bias_scaling,
                                                      derive_layer_seed(cfg.master_seed, layer_id, SeedStream::Bias))
                             .col(0);
        below = layer.units;
        layers.push_back(std::move(layer));
    }
    return DeepReservoir<Scalar>(cfg.input_dim, std::move(layers));
}

/// Radius of the linearization at zero, (1 - a) I + W_rec, for one layer.
template <typename Scalar>
Scalar linearized_radius(const LayerSpec<Scalar>& layer)
{
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Dense m = layer.recurrent_weights.to_dense();
    m.diagonal().array() += Scalar(1) - layer.leak_rate;
    return spectral_radius(m);
}

} // namespace deepesn
