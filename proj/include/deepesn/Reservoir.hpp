#pragma once

#include "Errors.hpp"
#include "WeightMatrix.hpp"

#include <Eigen/Dense>

#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace deepesn {

enum class Activation { Tanh, Identity };

inline const char* to_string(Activation a)
{
    return a == Activation::Tanh ? "tanh" : "identity";
}

inline Activation activation_from_string(const std::string& name)
{
    if (name == "tanh") return Activation::Tanh;
    if (name == "identity" || name == "linear") return Activation::Identity;
    throw ConfigError("unknown activation '" + name + "'");
}

/// Units per layer, bottom layer first.
using LayerLayout = std::vector<Eigen::Index>;

inline Eigen::Index total_units(const LayerLayout& layout)
{
    return std::accumulate(layout.begin(), layout.end(), Eigen::Index{0});
}

/// Offset of `layer` inside the concatenated global state.
inline Eigen::Index layer_offset(const LayerLayout& layout, std::size_t layer)
{
    return std::accumulate(layout.begin(), layout.begin() + static_cast<std::ptrdiff_t>(layer),
                           Eigen::Index{0});
}

/// One leaky-integrator reservoir layer.
///
/// `input_weights` maps the external input (bottom layer) or the current
/// state of the layer below (every other layer). The nonlinear term is not
/// multiplied by the leak rate:
///
///     x(t) = (1 - a) x(t-1) + f(W_in in(t) + W_rec x(t-1) + b)
template <typename Scalar>
struct LayerSpec {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Eigen::Index units = 0;
    Scalar leak_rate = Scalar(1);
    Activation activation = Activation::Tanh;
    WeightMatrix<Scalar> input_weights;
    WeightMatrix<Scalar> recurrent_weights;
    std::optional<Vector> bias;

    Eigen::Index input_dim() const { return input_weights.cols(); }

    void validate(Eigen::Index expected_input_dim) const
    {
        if (units < 1) throw StructuralError("layer has no units");
        if (!(leak_rate >= Scalar(0) && leak_rate <= Scalar(1)))
            throw ConfigError("leak rate must lie in [0,1]");
        if (input_weights.rows() != units || input_weights.cols() != expected_input_dim)
            throw StructuralError("input weights are " + std::to_string(input_weights.rows()) + "x" +
                                  std::to_string(input_weights.cols()) + ", expected " +
                                  std::to_string(units) + "x" + std::to_string(expected_input_dim));
        if (recurrent_weights.rows() != units || recurrent_weights.cols() != units)
            throw StructuralError("recurrent weights must be square with side equal to the unit count");
        if (bias && bias->size() != units) throw StructuralError("bias length differs from unit count");
        if (!input_weights.all_finite() || !recurrent_weights.all_finite() || (bias && !bias->allFinite()))
            throw DataError("layer weights contain non-finite entries");
    }
};

/// A stack of reservoir layers wired as a strict pipeline: the external
/// input feeds only the bottom layer and each layer feeds only the layer
/// directly above it. No other coupling can be represented.
template <typename Scalar>
class DeepReservoir {
public:
    using Layer = LayerSpec<Scalar>;

    DeepReservoir() = default;

    DeepReservoir(Eigen::Index input_dim, std::vector<Layer> layers)
        : input_dim_(input_dim), layers_(std::move(layers))
    {
        if (input_dim_ < 1) throw StructuralError("input dimension must be positive");
        if (layers_.empty()) throw StructuralError("a reservoir needs at least one layer");
        Eigen::Index below = input_dim_;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            try {
                layers_[i].validate(below);
            } catch (const StructuralError& e) {
                throw StructuralError("layer " + std::to_string(i + 1) + ": " + e.what());
            }
            below = layers_[i].units;
        }
    }

    Eigen::Index input_dim() const { return input_dim_; }
    std::size_t num_layers() const { return layers_.size(); }
    const Layer& layer(std::size_t i) const { return layers_.at(i); }
    const std::vector<Layer>& layers() const { return layers_; }

    LayerLayout layout() const
    {
        LayerLayout out;
        out.reserve(layers_.size());
        for (const auto& l : layers_) out.push_back(l.units);
        return out;
    }

    Eigen::Index state_dim() const { return total_units(layout()); }

    /// Copy with every bias vector removed.
    DeepReservoir without_bias() const
    {
        DeepReservoir copy = *this;
        for (auto& l : copy.layers_) l.bias.reset();
        return copy;
    }

private:
    Eigen::Index input_dim_ = 0;
    std::vector<Layer> layers_;
};

/// Per-layer states at one time step.
template <typename Scalar>
struct GlobalState {
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    std::vector<Vector> per_layer;

    static GlobalState zero(const LayerLayout& layout)
    {
        GlobalState s;
        for (auto n : layout) s.per_layer.push_back(Vector::Zero(n));
        return s;
    }

    LayerLayout layout() const
    {
        LayerLayout out;
        for (const auto& v : per_layer) out.push_back(v.size());
        return out;
    }
};

/// Concatenates the layer states, bottom layer first.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> concat_state(const GlobalState<Scalar>& s)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> flat(total_units(s.layout()));
    Eigen::Index off = 0;
    for (const auto& v : s.per_layer) {
        flat.segment(off, v.size()) = v;
        off += v.size();
    }
    return flat;
}

template <typename Derived>
GlobalState<typename Derived::Scalar> split_state(const Eigen::MatrixBase<Derived>& flat,
                                                  const LayerLayout& layout)
{
    if (flat.size() != total_units(layout))
        throw StructuralError("flat state length does not match the layer layout");
    GlobalState<typename Derived::Scalar> s;
    Eigen::Index off = 0;
    for (auto n : layout) {
        s.per_layer.emplace_back(flat.segment(off, n));
        off += n;
    }
    return s;
}

/// States over time, one row per step holding the concatenated global
/// state. Washout steps are kept; consumers skip them.
template <typename Scalar>
struct StateTrajectory {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix states;
    LayerLayout layout;
    Eigen::Index washout = 0;

    Eigen::Index steps() const { return states.rows(); }

    GlobalState<Scalar> state(Eigen::Index t) const
    {
        return split_state(states.row(t).transpose(), layout);
    }

    /// Post-washout rows restricted to one layer's columns.
    auto layer_block(std::size_t layer) const
    {
        return states.block(washout, layer_offset(layout, layer), steps() - washout, layout.at(layer));
    }

    auto post_washout() const { return states.bottomRows(steps() - washout); }
};

namespace detail {

template <typename Scalar, typename Derived>
void apply_activation(Activation f, Eigen::MatrixBase<Derived>& v)
{
    if (f == Activation::Tanh) v = v.array().tanh().matrix();
}

/// Pre-activation W_in in + W_rec x_prev + b.
template <typename Scalar, typename InVec, typename PrevVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> preactivation(const LayerSpec<Scalar>& spec,
                                                       const Eigen::MatrixBase<InVec>& in,
                                                       const Eigen::MatrixBase<PrevVec>& x_prev)
{
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> pre =
        spec.bias ? *spec.bias : Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(spec.units);
    spec.input_weights.multiply_add(in, pre);
    spec.recurrent_weights.multiply_add(x_prev, pre);
    return pre;
}

template <typename Scalar, typename InVec, typename PrevVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> advance_layer(const LayerSpec<Scalar>& spec,
                                                       const Eigen::MatrixBase<InVec>& in,
                                                       const Eigen::MatrixBase<PrevVec>& x_prev)
{
    if (in.size() != spec.input_dim())
        throw StructuralError("layer input has length " + std::to_string(in.size()) + ", expected " +
                              std::to_string(spec.input_dim()));
    if (x_prev.size() != spec.units)
        throw StructuralError("previous layer state has length " + std::to_string(x_prev.size()) +
                              ", expected " + std::to_string(spec.units));
    if (!in.allFinite() || !x_prev.allFinite()) throw DataError("non-finite value entering a layer");
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next = preactivation(spec, in, x_prev);
    apply_activation<Scalar>(spec.activation, next);
    if (spec.leak_rate != Scalar(1)) next += (Scalar(1) - spec.leak_rate) * x_prev;
    return next;
}

} // namespace detail

/// Bottom-layer update driven by the external input.
template <typename Scalar, typename InVec, typename PrevVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> step_first_layer(const LayerSpec<Scalar>& spec,
                                                          const Eigen::MatrixBase<InVec>& u,
                                                          const Eigen::MatrixBase<PrevVec>& x_prev)
{
    return detail::advance_layer(spec, u, x_prev);
}

/// Update of a layer above the bottom one. `x_below_now` must be the state
/// of the layer below at the current time step.
template <typename Scalar, typename InVec, typename PrevVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> step_higher_layer(const LayerSpec<Scalar>& spec,
                                                           const Eigen::MatrixBase<InVec>& x_below_now,
                                                           const Eigen::MatrixBase<PrevVec>& x_prev)
{
    return detail::advance_layer(spec, x_below_now, x_prev);
}

/// One time step of the whole stack. Layers are updated bottom to top and
/// each layer reads the freshly updated state of the layer below.
template <typename Scalar, typename InVec>
GlobalState<Scalar> step_global(const DeepReservoir<Scalar>& res, const Eigen::MatrixBase<InVec>& u,
                                const GlobalState<Scalar>& prev)
{
    if (prev.per_layer.size() != res.num_layers())
        throw StructuralError("state has " + std::to_string(prev.per_layer.size()) + " layers, reservoir has " +
                              std::to_string(res.num_layers()));
    GlobalState<Scalar> next;
    next.per_layer.reserve(res.num_layers());
    for (std::size_t i = 0; i < res.num_layers(); ++i) {
        try {
            if (i == 0)
                next.per_layer.push_back(step_first_layer(res.layer(0), u, prev.per_layer[0]));
            else
                next.per_layer.push_back(step_higher_layer(res.layer(i), next.per_layer[i - 1], prev.per_layer[i]));
        } catch (const StructuralError& e) {
            throw StructuralError("layer " + std::to_string(i + 1) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError("layer " + std::to_string(i + 1) + ": " + e.what());
        }
        if (!next.per_layer.back().allFinite())
            throw NumericalError("layer " + std::to_string(i + 1) + ": state diverged");
    }
    return next;
}

/// Drives the reservoir with `inputs` (one row per time step) from
/// `initial`. Row t of the result is the global state after consuming
/// input row t.
template <typename Scalar, typename InMat>
StateTrajectory<Scalar> run(const DeepReservoir<Scalar>& res, const Eigen::MatrixBase<InMat>& inputs,
                            const GlobalState<Scalar>& initial, Eigen::Index washout = 0)
{
    if (inputs.rows() == 0) throw DataError("empty input sequence");
    if (inputs.cols() != res.input_dim())
        throw StructuralError("inputs have " + std::to_string(inputs.cols()) + " columns, reservoir expects " +
                              std::to_string(res.input_dim()));
    if (washout < 0 || washout >= inputs.rows())
        throw ConfigError("washout " + std::to_string(washout) + " must be below the sequence length " +
                          std::to_string(inputs.rows()));

    StateTrajectory<Scalar> traj;
    traj.layout = res.layout();
    traj.washout = washout;
    traj.states.resize(inputs.rows(), res.state_dim());

    GlobalState<Scalar> state = initial;
    for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
        try {
            state = step_global(res, inputs.row(t).transpose(), state);
        } catch (const NumericalError& e) {
            throw NumericalError("step " + std::to_string(t) + ": " + e.what());
        }
        Eigen::Index off = 0;
        for (const auto& v : state.per_layer) {
            traj.states.row(t).segment(off, v.size()) = v.transpose();
            off += v.size();
        }
    }
    return traj;
}

template <typename Scalar, typename InMat>
StateTrajectory<Scalar> run(const DeepReservoir<Scalar>& res, const Eigen::MatrixBase<InMat>& inputs,
                            Eigen::Index washout = 0)
{
    return run(res, inputs, GlobalState<Scalar>::zero(res.layout()), washout);
}

} // namespace deepesn
