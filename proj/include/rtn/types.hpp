#pragma once

#include <complex>

#include <Eigen/Dense>

namespace rtn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

using Complex = std::complex<double>;
using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using MatrixXcd = Matrix<Complex>;
using VectorXcd = Vector<Complex>;
using RowVectorXcd = RowVector<Complex>;

}  // namespace rtn
