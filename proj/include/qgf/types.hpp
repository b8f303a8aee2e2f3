#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace qgf {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;
using MatrixXi = Matrix<int>;
using VectorXi = Vector<int>;

// Node positions, one row per node.
using Coords = Eigen::Matrix<double, Eigen::Dynamic, 2>;

using Seed = std::uint64_t;

}  // namespace qgf
