#pragma once

#include "Errors.hpp"
#include "Reservoir.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <string>

namespace deepesn {

/// Linear map from concatenated reservoir states to outputs,
/// y(t) = W_out x(t) (+ intercept).
template <typename Scalar>
struct Readout {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    Matrix weights;  // N_Y x state_dim
    std::optional<Vector> intercept;
    Scalar regularization = 0;
    Eigen::Index trained_on_dims = 0;

    Eigen::Index output_dim() const { return weights.rows(); }
};

/// Post-washout states (rows are time steps) and aligned targets.
template <typename Scalar>
struct RegressionProblem {
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

    Matrix states;
    Matrix targets;

    void validate() const
    {
        if (states.rows() < 1) throw DataError("regression problem has no rows");
        if (states.rows() != targets.rows())
            throw StructuralError("states have " + std::to_string(states.rows()) + " rows, targets " +
                                  std::to_string(targets.rows()));
        if (!states.allFinite() || !targets.allFinite()) throw DataError("regression data has non-finite entries");
    }
};

/// Ridge solver that factors the (centred) state matrix once with an SVD
/// and then solves for any regularization strength in O(D^2 N_Y):
///
///     W^T = V diag(s / (s^2 + lambda)) U^T Y
///
/// which is the solution of (S^T S + lambda I) W^T = S^T Y. At lambda = 0
/// singular values below the rank tolerance are dropped, giving the
/// minimum-norm least-squares solution. With an intercept, columns are
/// centred first; that is the same as adding an unpenalized column of ones.
template <typename Scalar>
class RidgeSolver {
public:
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

    RidgeSolver(const RegressionProblem<Scalar>& p, bool fit_intercept) : fit_intercept_(fit_intercept)
    {
        p.validate();
        dims_ = p.states.cols();
        Matrix s = p.states;
        Matrix y = p.targets;
        if (fit_intercept_) {
            state_mean_ = s.colwise().mean();
            target_mean_ = y.colwise().mean();
            s.rowwise() -= state_mean_;
            y.rowwise() -= target_mean_;
        }
        Eigen::BDCSVD<Matrix> svd(s, Eigen::ComputeThinU | Eigen::ComputeThinV);
        singular_ = svd.singularValues();
        v_ = svd.matrixV();
        projected_ = svd.matrixU().transpose() * y;
        const Scalar smax = singular_.size() ? singular_(0) : Scalar(0);
        rank_tol_ = smax * static_cast<Scalar>(std::max(s.rows(), s.cols())) * std::numeric_limits<Scalar>::epsilon();
    }

    Readout<Scalar> solve(Scalar lambda) const
    {
        if (!(lambda >= Scalar(0)) || !std::isfinite(lambda))
            throw ConfigError("regularization must be finite and non-negative");
        Vector gain(singular_.size());
        for (Eigen::Index k = 0; k < singular_.size(); ++k) {
            const Scalar sk = singular_(k);
            if (lambda == Scalar(0))
                gain(k) = sk > rank_tol_ ? Scalar(1) / sk : Scalar(0);
            else
                gain(k) = sk / (sk * sk + lambda);
        }
        Readout<Scalar> r;
        r.weights = (v_ * gain.asDiagonal() * projected_).transpose();
        r.regularization = lambda;
        r.trained_on_dims = dims_;
        if (fit_intercept_) r.intercept = (target_mean_ - state_mean_ * r.weights.transpose()).transpose();
        if (!r.weights.allFinite()) throw NumericalError("readout solve produced non-finite weights");
        return r;
    }

private:
    bool fit_intercept_;
    Eigen::Index dims_ = 0;
    RowVector state_mean_;
    RowVector target_mean_;
    Vector singular_;
    Matrix v_;
    Matrix projected_;
    Scalar rank_tol_ = 0;
};

template <typename Scalar>
Readout<Scalar> train_ridge(const RegressionProblem<Scalar>& p, Scalar lambda, bool fit_intercept = false)
{
    if (!(lambda >= Scalar(0))) throw ConfigError("regularization must be non-negative");
    return RidgeSolver<Scalar>(p, fit_intercept).solve(lambda);
}

/// Outputs for state rows (one row per time step).
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> predict(const Readout<Scalar>& r,
                                                              const Eigen::MatrixBase<Derived>& states)
{
    if (states.cols() != r.trained_on_dims)
        throw StructuralError("state dimension " + std::to_string(states.cols()) + " differs from trained " +
                              std::to_string(r.trained_on_dims));
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> out = states * r.weights.transpose();
    if (r.intercept) out.rowwise() += r.intercept->transpose();
    return out;
}

/// Outputs for every step of a trajectory, washout included.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> predict(const Readout<Scalar>& r,
                                                              const StateTrajectory<Scalar>& traj)
{
    return predict(r, traj.states);
}

/// Relative residual of the regularized normal equations at the readout,
/// ||A^T (A theta - Y) + lambda P theta|| / (1 + ||A^T Y||), where A is the
/// state matrix (plus a ones column when the readout has an intercept) and
/// P leaves the intercept unpenalized.
template <typename Scalar>
Scalar normal_equations_residual(const RegressionProblem<Scalar>& p, const Readout<Scalar>& r)
{
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    const Eigen::Index d = p.states.cols();
    const bool icpt = r.intercept.has_value();
    Matrix a(p.states.rows(), d + (icpt ? 1 : 0));
    a.leftCols(d) = p.states;
    Matrix theta(a.cols(), r.weights.rows());
    theta.topRows(d) = r.weights.transpose();
    if (icpt) {
        a.col(d).setOnes();
        theta.row(d) = r.intercept->transpose();
    }
    Matrix grad = a.transpose() * (a * theta - p.targets);
    grad.topRows(d) += r.regularization * theta.topRows(d);
    const Scalar scale = Scalar(1) + (a.transpose() * p.targets).norm();
    return grad.norm() / scale;
}

enum class Metric { MSE, NRMSE, Accuracy };

inline const char* to_string(Metric m)
{
    switch (m) {
    case Metric::MSE: return "mse";
    case Metric::NRMSE: return "nrmse";
    case Metric::Accuracy: return "accuracy";
    }
    return "?";
}

/// Scores predictions against targets (rows are time steps or items).
/// NRMSE is sqrt(sum_c MSE_c / sum_c Var_c) over output channels c with
/// population variances, i.e. sqrt(MSE / Var) for a single output.
/// Accuracy compares the row-wise argmax of both matrices.
template <typename P, typename T>
typename P::Scalar evaluate(const Eigen::MatrixBase<P>& pred, const Eigen::MatrixBase<T>& target, Metric metric)
{
    using Scalar = typename P::Scalar;
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw StructuralError("prediction and target shapes differ");
    if (pred.size() == 0) throw DataError("nothing to evaluate");
    const Scalar n = static_cast<Scalar>(pred.rows());
    switch (metric) {
    case Metric::MSE: return (pred - target).squaredNorm() / static_cast<Scalar>(pred.size());
    case Metric::NRMSE: {
        const auto centred = (target.rowwise() - target.colwise().mean()).eval();
        const Scalar var_sum = centred.squaredNorm() / n;
        if (!(var_sum > Scalar(0))) throw NumericalError("NRMSE undefined: target has zero variance");
        return std::sqrt(((pred - target).squaredNorm() / n) / var_sum);
    }
    case Metric::Accuracy: {
        Eigen::Index hits = 0;
        for (Eigen::Index i = 0; i < pred.rows(); ++i) {
            Eigen::Index pi = 0;
            Eigen::Index ti = 0;
            pred.row(i).maxCoeff(&pi);
            target.row(i).maxCoeff(&ti);
            hits += pi == ti;
        }
        return static_cast<Scalar>(hits) / n;
    }
    }
    throw ConfigError("unknown metric");
}

} // namespace deepesn
