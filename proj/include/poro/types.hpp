// SPDX-License-Identifier: Apache-2.0

#ifndef PORO_TYPES_HPP
#define PORO_TYPES_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <stdexcept>
#include <string>

namespace poro {

using Vec = Eigen::VectorXd;
using Vec2 = Eigen::Vector2d;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Raised for invalid run configurations (maps to exit code 2 in the CLI).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a linear solve or factorization fails (exit code 3).
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace poro

#endif
