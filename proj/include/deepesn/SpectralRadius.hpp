#pragma once

#include "Errors.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

namespace deepesn {

/// Eigenvalues of a real square matrix, in no particular order.
template <typename Derived>
Eigen::Matrix<std::complex<typename Derived::Scalar>, Eigen::Dynamic, 1>
eigenvalues(const Eigen::MatrixBase<Derived>& m)
{
    using Scalar = typename Derived::Scalar;
    if (m.rows() != m.cols()) throw StructuralError("eigenvalues need a square matrix");
    if (!m.allFinite()) throw DataError("matrix has non-finite entries");
    if (m.rows() == 0) return {};
    Eigen::EigenSolver<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> es(m.eval(), false);
    if (es.info() != Eigen::Success) throw NumericalError("eigenvalue iteration did not converge");
    return es.eigenvalues();
}

/// Largest eigenvalue modulus.
template <typename Derived>
typename Derived::Scalar spectral_radius(const Eigen::MatrixBase<Derived>& m)
{
    if (m.rows() == 0) {
        if (m.cols() != 0) throw StructuralError("spectral radius needs a square matrix");
        return 0;
    }
    return eigenvalues(m).cwiseAbs().maxCoeff();
}

} // namespace deepesn
