#pragma once

#include "Errors.hpp"
#include "Reservoir.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

namespace deepesn {

// ---------------------------------------------------------------------------
// Echo state property

template <typename Scalar>
struct EspReport {
    std::vector<Scalar> distance_curve;
    Scalar final_distance = 0;
    bool converged = false;
};

/// Drives two copies of the reservoir, started from `s1` and `s2`, with the
/// same input and records the Euclidean distance between their global
/// states after every step.
template <typename Scalar, typename InMat>
EspReport<Scalar> esp_convergence_test(const DeepReservoir<Scalar>& res, const Eigen::MatrixBase<InMat>& inputs,
                                       const GlobalState<Scalar>& s1, const GlobalState<Scalar>& s2, Scalar tol)
{
    if (s1.layout() != res.layout() || s2.layout() != res.layout())
        throw StructuralError("initial states do not match the reservoir layout");
    if (inputs.rows() == 0) throw DataError("empty input sequence");
    EspReport<Scalar> report;
    report.distance_curve.reserve(static_cast<std::size_t>(inputs.rows()));
    GlobalState<Scalar> a = s1;
    GlobalState<Scalar> b = s2;
    for (Eigen::Index t = 0; t < inputs.rows(); ++t) {
        a = step_global(res, inputs.row(t).transpose(), a);
        b = step_global(res, inputs.row(t).transpose(), b);
        report.distance_curve.push_back((concat_state(a) - concat_state(b)).norm());
    }
    report.final_distance = report.distance_curve.back();
    report.converged = report.final_distance < tol;
    return report;
}

// ---------------------------------------------------------------------------
// Jacobian of the layered transition

namespace detail {

template <typename Scalar, typename Pre>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> activation_derivative(Activation f, const Eigen::MatrixBase<Pre>& pre)
{
    if (f == Activation::Identity) return Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Ones(pre.size());
    return (Scalar(1) - pre.array().tanh().square()).matrix();
}

/// Dense weights and layer offsets, reused across Jacobian evaluations.
template <typename Scalar>
struct Linearizer {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    const DeepReservoir<Scalar>& res;
    std::vector<Matrix> input;
    std::vector<Matrix> recurrent;
    std::vector<Vector> bias;
    LayerLayout layout;
    std::vector<Eigen::Index> offset;
    Eigen::Index dim = 0;
    Vector pre;

    explicit Linearizer(const DeepReservoir<Scalar>& r) : res(r), layout(r.layout())
    {
        for (std::size_t i = 0; i < res.num_layers(); ++i) {
            const auto& l = res.layer(i);
            input.push_back(l.input_weights.to_dense());
            recurrent.push_back(l.recurrent_weights.to_dense());
            bias.push_back(l.bias ? *l.bias : Vector::Zero(l.units));
            offset.push_back(dim);
            dim += l.units;
        }
    }

    /// Writes d x(t) / d x(t-1) into `jac` and x(t) into `next`, both
    /// flat. `prev` and `next` must not alias.
    template <typename InVec>
    void step(const Eigen::MatrixBase<InVec>& u, const Vector& prev, Vector& next, Matrix& jac)
    {
        if (u.size() != res.input_dim()) throw StructuralError("input length does not match the reservoir");
        if (prev.size() != dim) throw StructuralError("state does not match the reservoir layout");
        jac.setZero(dim, dim);
        next.resize(dim);
        for (std::size_t i = 0; i < layout.size(); ++i) {
            const auto& layer = res.layer(i);
            const Eigen::Index n = layout[i];
            const Eigen::Index row = offset[i];
            const auto x_prev = prev.segment(row, n);
            pre = bias[i];
            pre.noalias() += recurrent[i] * x_prev;
            if (i == 0)
                pre.noalias() += input[i] * u;
            else
                pre.noalias() += input[i] * next.segment(offset[i - 1], layout[i - 1]);

            // f'(pre) goes into `d`; the activated value into `pre`.
            Vector d;
            if (layer.activation == Activation::Tanh) {
                pre = pre.array().tanh();
                d = (Scalar(1) - pre.array().square()).matrix();
            } else {
                d = Vector::Ones(n);
            }

            // Own block: (1 - a) I + D W_rec.
            jac.block(row, row, n, n).noalias() = d.asDiagonal() * recurrent[i];
            jac.block(row, row, n, n).diagonal().array() += Scalar(1) - layer.leak_rate;
            // Lower blocks: D W_in times the block row of the layer below.
            if (i > 0) {
                const Eigen::Index below = layout[i - 1];
                const Eigen::Index row_below = offset[i - 1];
                jac.block(row, 0, n, row_below + below).noalias() =
                    (d.asDiagonal() * input[i]) * jac.block(row_below, 0, below, row_below + below);
            }
            next.segment(row, n) = pre + (Scalar(1) - layer.leak_rate) * x_prev;
        }
    }
};

/// In-place Gram-Schmidt with one re-orthogonalization pass. Columns of
/// `frame` become orthonormal and `rdiag` receives the norms removed, i.e.
/// |R_kk| of frame = Q R. A column that vanishes against the earlier ones
/// is replaced by a unit vector orthogonal to them and reports 0.
template <typename Scalar>
void orthonormalize(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& frame,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& rdiag)
{
    const Eigen::Index n = frame.cols();
    rdiag.resize(n);
    auto project_out = [&](auto&& v, Eigen::Index upto) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index j = 0; j < upto; ++j) v -= frame.col(j).dot(v) * frame.col(j);
    };
    for (Eigen::Index k = 0; k < n; ++k) {
        const Scalar before = frame.col(k).norm();
        project_out(frame.col(k), k);
        const Scalar r = frame.col(k).norm();
        if (r > before * std::numeric_limits<Scalar>::epsilon() * Scalar(4) && r > Scalar(0)) {
            frame.col(k) /= r;
            rdiag(k) = r;
            continue;
        }
        rdiag(k) = Scalar(0);
        for (Eigen::Index e = 0; e < frame.rows(); ++e) {
            frame.col(k).setZero();
            frame(e, k) = Scalar(1);
            project_out(frame.col(k), k);
            const Scalar len = frame.col(k).norm();
            if (len > Scalar(0.5)) {
                frame.col(k) /= len;
                break;
            }
        }
    }
}

} // namespace detail

/// Jacobian of the whole within-step pipeline with respect to the previous
/// global state. Block lower-triangular: layer i depends on layers j <= i
/// only.
template <typename Scalar, typename InVec>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>
global_jacobian(const DeepReservoir<Scalar>& res, const GlobalState<Scalar>& prev, const Eigen::MatrixBase<InVec>& u)
{
    if (prev.layout() != res.layout()) throw StructuralError("state does not match the reservoir layout");
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> jac;
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> next;
    detail::Linearizer<Scalar> lin(res);
    lin.step(u, concat_state(prev), next, jac);
    return jac;
}

// ---------------------------------------------------------------------------
// Local Lyapunov exponents

/// Exponents are never reported below this value (nats/step). Directions
/// that the Jacobian annihilates would otherwise give -inf.
inline constexpr double kLyapunovFloor = -50.0;

template <typename Scalar>
struct LyapunovReport {
    std::vector<Scalar> exponents;  // descending
    Scalar mlle = 0;
    Eigen::Index steps_used = 0;
};

/// Finite-time Lyapunov spectrum along the trajectory driven by `inputs`,
/// by re-orthonormalizing a tangent frame (Gram-Schmidt QR) every step. The first `warmup` steps
/// move the state and align the frame without being averaged; the next
/// `steps` steps accumulate log |R_ii|. A diagonal entry at round-off level
/// relative to the Jacobian counts as the floor. `count` > 0 tracks only
/// the leading `count` directions, which is much cheaper for large states.
template <typename Scalar, typename InMat>
LyapunovReport<Scalar> lyapunov_exponents(const DeepReservoir<Scalar>& res, const Eigen::MatrixBase<InMat>& inputs,
                                          Eigen::Index warmup, Eigen::Index steps, Eigen::Index count = 0,
                                          const GlobalState<Scalar>* initial = nullptr)
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (steps < 100) throw ConfigError("lyapunov analysis needs at least 100 averaging steps");
    if (warmup < 0) throw ConfigError("warmup must be non-negative");
    if (count < 0) throw ConfigError("exponent count must be non-negative");
    if (inputs.rows() < warmup + steps)
        throw ConfigError("input has " + std::to_string(inputs.rows()) + " steps, need warmup + steps = " +
                          std::to_string(warmup + steps));

    const Eigen::Index dim = res.state_dim();
    const Scalar floor = static_cast<Scalar>(kLyapunovFloor);
    if (initial && initial->layout() != res.layout())
        throw StructuralError("initial state does not match the reservoir layout");
    Vector state = initial ? concat_state(*initial) : Vector::Zero(dim);
    Vector next(dim);
    detail::Linearizer<Scalar> lin(res);
    const Eigen::Index tracked = count == 0 ? dim : std::min(count, dim);
    Matrix frame = Matrix::Identity(dim, tracked);
    Vector sums = Vector::Zero(tracked);
    Matrix propagated(dim, tracked);
    Matrix jac(dim, dim);
    Vector rdiag(tracked);

    for (Eigen::Index t = 0; t < warmup + steps; ++t) {
        lin.step(inputs.row(t).transpose(), state, next, jac);
        state.swap(next);
        if (!state.allFinite())
            throw NumericalError("lyapunov: state diverged at step " + std::to_string(t));
        propagated.noalias() = jac * frame;
        if (!propagated.allFinite())
            throw NumericalError("lyapunov: non-finite tangent growth at step " + std::to_string(t));
        detail::orthonormalize(propagated, rdiag);
        frame.swap(propagated);
        if (t < warmup) continue;
        const Scalar negligible =
            std::numeric_limits<Scalar>::epsilon() * static_cast<Scalar>(dim) * std::max(Scalar(1), jac.norm());
        for (Eigen::Index k = 0; k < tracked; ++k) {
            const Scalar rk = rdiag(k);
            sums(k) += rk <= negligible ? floor : std::max(floor, std::log(rk));
        }
    }

    LyapunovReport<Scalar> report;
    report.steps_used = steps;
    report.exponents.resize(static_cast<std::size_t>(tracked));
    for (Eigen::Index k = 0; k < tracked; ++k)
        report.exponents[static_cast<std::size_t>(k)] = std::max(floor, sums(k) / static_cast<Scalar>(steps));
    std::sort(report.exponents.begin(), report.exponents.end(), std::greater<Scalar>());
    report.mlle = report.exponents.front();
    return report;
}

// ---------------------------------------------------------------------------
// Frequency content

inline constexpr Eigen::Index kDefaultSpectralWindow = 256;

/// Averaged magnitude spectrum of a single series: mean removed, Hann
/// windowed segments with 50% overlap, |FFT| averaged over segments.
/// Entry k corresponds to frequency k / window cycles/step, k = 0..window/2.
/// A series that is constant to round-off yields an all-zero spectrum.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> averaged_spectrum(const Eigen::MatrixBase<Derived>& series,
                                                                             Eigen::Index window)
{
    using Scalar = typename Derived::Scalar;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (window < 4 || window % 2 != 0) throw ConfigError("spectral window must be an even count >= 4");
    if (series.size() < window) throw ConfigError("series shorter than the spectral window");

    const Eigen::Index bins = window / 2 + 1;
    Vector spectrum = Vector::Zero(bins);
    const Scalar mean = series.mean();
    Vector x = series.array() - mean;
    if (x.cwiseAbs().maxCoeff() <= Scalar(1e-12) * (Scalar(1) + std::abs(mean))) return spectrum;

    Vector hann(window);
    for (Eigen::Index n = 0; n < window; ++n)
        hann(n) = Scalar(0.5) - Scalar(0.5) * std::cos(Scalar(2) * std::numbers::pi_v<Scalar> * Scalar(n) / Scalar(window));

    Eigen::FFT<Scalar> fft;
    std::vector<Scalar> segment(static_cast<std::size_t>(window));
    std::vector<std::complex<Scalar>> freq;
    const Eigen::Index hop = window / 2;
    Eigen::Index count = 0;
    for (Eigen::Index start = 0; start + window <= x.size(); start += hop) {
        for (Eigen::Index n = 0; n < window; ++n)
            segment[static_cast<std::size_t>(n)] = x(start + n) * hann(n);
        fft.fwd(freq, segment);
        for (Eigen::Index k = 0; k < bins; ++k) spectrum(k) += std::abs(freq[static_cast<std::size_t>(k)]);
        ++count;
    }
    return spectrum / static_cast<Scalar>(count);
}

/// Magnitude-weighted mean of the positive frequencies (bins 1..window/2)
/// in cycles/step. Zero when there is no mass at positive frequencies.
template <typename Derived>
typename Derived::Scalar spectral_centroid(const Eigen::MatrixBase<Derived>& spectrum)
{
    using Scalar = typename Derived::Scalar;
    const Eigen::Index window = 2 * (spectrum.size() - 1);
    Scalar mass = 0;
    Scalar moment = 0;
    for (Eigen::Index k = 1; k < spectrum.size(); ++k) {
        mass += spectrum(k);
        moment += spectrum(k) * Scalar(k) / Scalar(window);
    }
    return mass > Scalar(0) ? moment / mass : Scalar(0);
}

template <typename Scalar>
struct SpectralProfile {
    std::vector<Scalar> per_layer_centroid;
    std::vector<Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> per_layer_spectrum;
    Eigen::Index window = kDefaultSpectralWindow;
    std::string probe_description;
};

/// Per-layer frequency profile of the post-washout trajectory: unit spectra
/// are averaged within each layer and the centroid is taken of the average.
template <typename Scalar>
SpectralProfile<Scalar> spectral_profile(const StateTrajectory<Scalar>& traj,
                                         Eigen::Index window = kDefaultSpectralWindow, std::string probe = {})
{
    if (traj.steps() - traj.washout < 2 * window)
        throw ConfigError("spectral profile needs at least " + std::to_string(2 * window) +
                          " post-washout steps, trajectory has " + std::to_string(traj.steps() - traj.washout));
    SpectralProfile<Scalar> profile;
    profile.window = window;
    profile.probe_description = std::move(probe);
    for (std::size_t layer = 0; layer < traj.layout.size(); ++layer) {
        const auto block = traj.layer_block(layer);
        Eigen::Matrix<Scalar, Eigen::Dynamic, 1> avg = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>::Zero(window / 2 + 1);
        for (Eigen::Index u = 0; u < block.cols(); ++u) avg += averaged_spectrum(block.col(u), window);
        avg /= static_cast<Scalar>(block.cols());
        profile.per_layer_centroid.push_back(spectral_centroid(avg));
        profile.per_layer_spectrum.push_back(std::move(avg));
    }
    return profile;
}

// ---------------------------------------------------------------------------
// State entropy

enum class EntropyEstimator { GaussianApprox };

template <typename Scalar>
struct EntropyReport {
    std::vector<Scalar> per_layer_entropy;
    EntropyEstimator estimator = EntropyEstimator::GaussianApprox;
};

/// Per-layer mean over units of 0.5 ln(2 pi e var), with the population
/// variance of each unit over the post-washout steps. A constant unit
/// makes its layer -inf.
template <typename Scalar>
EntropyReport<Scalar> state_entropy(const StateTrajectory<Scalar>& traj)
{
    if (traj.steps() - traj.washout < 30) throw ConfigError("state entropy needs at least 30 post-washout steps");
    const Scalar two_pi_e = Scalar(2) * std::numbers::pi_v<Scalar> * std::numbers::e_v<Scalar>;
    EntropyReport<Scalar> report;
    for (std::size_t layer = 0; layer < traj.layout.size(); ++layer) {
        const auto block = traj.layer_block(layer);
        const Scalar t = static_cast<Scalar>(block.rows());
        Scalar total = 0;
        for (Eigen::Index u = 0; u < block.cols(); ++u) {
            // Constant columns can leave a round-off residue in the two-pass variance.
            if (block.col(u).maxCoeff() == block.col(u).minCoeff()) {
                total = -std::numeric_limits<Scalar>::infinity();
                break;
            }
            const Scalar var = (block.col(u).array() - block.col(u).mean()).square().sum() / t;
            total += Scalar(0.5) * std::log(two_pi_e * var);
        }
        report.per_layer_entropy.push_back(total / static_cast<Scalar>(block.cols()));
    }
    return report;
}

} // namespace deepesn
