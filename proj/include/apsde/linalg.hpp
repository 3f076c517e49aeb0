#pragma once

#include <Eigen/Dense>

namespace apsde::linalg {

/// Matrix exponential by scaling and squaring with a fixed degree-13 Padé
/// approximant. 1x1 inputs use std::exp directly.
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// (a + aᵀ) / 2
Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

/// Symmetric square root of a PSD matrix; eigenvalues below zero are
/// clamped to 0 after symmetrization.
Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a);

/// Largest singular value.
double spectral_norm(const Eigen::MatrixXd& a);

/// Largest eigenvalue of the symmetric part (the logarithmic 2-norm).
double log_norm(const Eigen::MatrixXd& a);

struct EigenRange {
    double min;
    double max;
};

/// Extreme eigenvalues of the symmetric part of `a`.
EigenRange sym_eigen_range(const Eigen::MatrixXd& a);

/// Symmetrizes `a` in place and throws NonPsdError when its smallest
/// eigenvalue is below -rel_tol * max(|λ_max|, abs_floor).
void enforce_psd(Eigen::MatrixXd& a, double rel_tol = 1e-10, double abs_floor = 1e-300);

} // namespace apsde::linalg
