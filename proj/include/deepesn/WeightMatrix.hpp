#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <variant>

namespace deepesn {

/// A reservoir weight matrix held either densely or in compressed sparse
/// form. Stepping and analysis code only sees products and dense copies, so
/// both storage kinds are interchangeable.
template <typename Scalar>
class WeightMatrix {
public:
    using Dense = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Sparse = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;
    using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

    WeightMatrix() = default;
    WeightMatrix(Dense m) : storage_(std::move(m)) {}
    WeightMatrix(Sparse m) : storage_(std::move(m)) { std::get<Sparse>(storage_).makeCompressed(); }

    bool is_sparse() const { return std::holds_alternative<Sparse>(storage_); }

    Eigen::Index rows() const
    {
        return std::visit([](const auto& m) { return m.rows(); }, storage_);
    }
    Eigen::Index cols() const
    {
        return std::visit([](const auto& m) { return m.cols(); }, storage_);
    }

    /// Number of stored entries (all entries for dense storage).
    Eigen::Index stored_entries() const
    {
        if (is_sparse()) return std::get<Sparse>(storage_).nonZeros();
        return rows() * cols();
    }

    /// Accumulates `this * x` into `out`.
    template <typename In, typename Out>
    void multiply_add(const Eigen::MatrixBase<In>& x, Eigen::MatrixBase<Out>& out) const
    {
        if (is_sparse())
            out.noalias() += std::get<Sparse>(storage_) * x;
        else
            out.noalias() += std::get<Dense>(storage_) * x;
    }

    Vector operator*(const Vector& x) const
    {
        Vector out = Vector::Zero(rows());
        multiply_add(x, out);
        return out;
    }

    Dense to_dense() const
    {
        if (is_sparse()) return Dense(std::get<Sparse>(storage_));
        return std::get<Dense>(storage_);
    }

    const Dense* dense() const { return std::get_if<Dense>(&storage_); }
    const Sparse* sparse() const { return std::get_if<Sparse>(&storage_); }

    bool all_finite() const
    {
        if (is_sparse()) {
            const Sparse& s = std::get<Sparse>(storage_);
            return Eigen::Map<const Vector>(s.valuePtr(), s.nonZeros()).allFinite();
        }
        return std::get<Dense>(storage_).allFinite();
    }

    /// In-place scaling of every stored value.
    void scale(Scalar factor)
    {
        std::visit([factor](auto& m) { m *= factor; }, storage_);
    }

private:
    std::variant<Dense, Sparse> storage_{Dense()};
};

} // namespace deepesn
