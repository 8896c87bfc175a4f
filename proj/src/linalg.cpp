#include "fdsense/linalg.hpp"

#include <string>

#include "fdsense/errors.hpp"

namespace fdsense {

bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }
bool all_finite(const Eigen::Ref<const RowMatrix>& m) { return m.allFinite(); }

Matrix symmetric_pinv(const Matrix& a, double rtol) {
  if (a.size() == 0) return a;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector& ev = es.eigenvalues();
  const double cutoff = rtol * ev.cwiseAbs().maxCoeff();
  Vector inv(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    inv[k] = std::abs(ev[k]) > cutoff ? 1.0 / ev[k] : 0.0;
  }
  return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

Matrix symmetric_sqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(a);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

void require_spd(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw DomainError(std::string(what) + " must be a non-empty square matrix");
  }
  if (!a.allFinite()) throw DomainError(std::string(what) + " has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (!a.isApprox(a.transpose(), 1e-12) && (a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw DomainError(std::string(what) + " is not symmetric");
  }
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + " is not positive definite");
}

}  // namespace fdsense
