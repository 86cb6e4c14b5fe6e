#pragma once

// Literal loop-based evaluation of the layered leaky update, kept
// independent of the Eigen stepping path. Used as an oracle only.

#include "deepesn/Reservoir.hpp"

#include <cmath>
#include <vector>

namespace deepesn::testing {

struct NaiveLayer {
    std::vector<std::vector<double>> w_in;
    std::vector<std::vector<double>> w_rec;
    std::vector<double> bias;
    double leak = 1.0;
    bool tanh_act = true;
};

inline std::vector<NaiveLayer> to_naive(const DeepReservoir<double>& res)
{
    std::vector<NaiveLayer> out;
    for (const auto& l : res.layers()) {
        NaiveLayer n;
        const auto win = l.input_weights.to_dense();
        const auto wrec = l.recurrent_weights.to_dense();
        n.w_in.assign(win.rows(), std::vector<double>(win.cols()));
        n.w_rec.assign(wrec.rows(), std::vector<double>(wrec.cols()));
        for (int i = 0; i < win.rows(); ++i)
            for (int j = 0; j < win.cols(); ++j) n.w_in[i][j] = win(i, j);
        for (int i = 0; i < wrec.rows(); ++i)
            for (int j = 0; j < wrec.cols(); ++j) n.w_rec[i][j] = wrec(i, j);
        n.bias.assign(l.units, 0.0);
        if (l.bias)
            for (int i = 0; i < l.units; ++i) n.bias[i] = (*l.bias)(i);
        n.leak = l.leak_rate;
        n.tanh_act = l.activation == Activation::Tanh;
        out.push_back(std::move(n));
    }
    return out;
}

inline std::vector<double> naive_layer_step(const NaiveLayer& l, const std::vector<double>& in,
                                            const std::vector<double>& prev)
{
    std::vector<double> next(prev.size());
    for (std::size_t i = 0; i < prev.size(); ++i) {
        double acc = l.bias[i];
        for (std::size_t j = 0; j < in.size(); ++j) acc += l.w_in[i][j] * in[j];
        for (std::size_t j = 0; j < prev.size(); ++j) acc += l.w_rec[i][j] * prev[j];
        const double f = l.tanh_act ? std::tanh(acc) : acc;
        next[i] = (1.0 - l.leak) * prev[i] + f;
    }
    return next;
}

/// Returns the concatenated state after every input row.
inline std::vector<std::vector<double>> naive_run(const std::vector<NaiveLayer>& layers,
                                                  const std::vector<std::vector<double>>& inputs,
                                                  std::vector<std::vector<double>> state)
{
    std::vector<std::vector<double>> out;
    for (const auto& u : inputs) {
        for (std::size_t i = 0; i < layers.size(); ++i)
            state[i] = naive_layer_step(layers[i], i == 0 ? u : state[i - 1], state[i]);
        std::vector<double> flat;
        for (const auto& s : state) flat.insert(flat.end(), s.begin(), s.end());
        out.push_back(std::move(flat));
    }
    return out;
}

inline std::vector<std::vector<double>> naive_run(const std::vector<NaiveLayer>& layers,
                                                  const std::vector<std::vector<double>>& inputs)
{
    std::vector<std::vector<double>> state;
    for (const auto& l : layers) state.emplace_back(l.bias.size(), 0.0);
    return naive_run(layers, inputs, std::move(state));
}

} // namespace deepesn::testing
