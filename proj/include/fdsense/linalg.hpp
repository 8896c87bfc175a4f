#pragma once

#include <Eigen/Dense>

namespace fdsense {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
/// Sample and score matrices are stored one draw per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Coordinates of a point in parameter space.
using ParamPoint = Eigen::VectorXd;

bool all_finite(const Eigen::Ref<const Matrix>& m);
bool all_finite(const Eigen::Ref<const RowMatrix>& m);

/// Spectral pseudo-inverse of a symmetric matrix. Eigenvalues with
/// |ev| <= rtol * max|ev| are treated as zero.
Matrix symmetric_pinv(const Matrix& a, double rtol = 1e-12);

/// Square root of a symmetric PSD matrix; negative round-off eigenvalues
/// are clipped to zero.
Matrix symmetric_sqrt(const Matrix& a);

/// Throws DomainError naming `what` if `a` is not symmetric positive definite.
void require_spd(const Matrix& a, const char* what);

}  // namespace fdsense
