#include "apsde/linalg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "apsde/errors.hpp"

namespace apsde::linalg {

namespace {

constexpr std::array<double, 14> kPade13 = {
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0,  129060195264000.0,   10559470521600.0,
    670442572800.0,      33522128640.0,       1323241920.0,
    40840800.0,          960960.0,            16380.0,
    182.0,               1.0};

// Higham (2005) backward-error bound for degree 13.
constexpr double kTheta13 = 5.371920351148152;

} // namespace

Eigen::MatrixXd expm(const Eigen::MatrixXd& a) {
    const Eigen::Index n = a.rows();
    if (n == 1) {
        return Eigen::MatrixXd::Constant(1, 1, std::exp(a(0, 0)));
    }
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
    int squarings = 0;
    if (norm1 > kTheta13) {
        squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    }
    const Eigen::MatrixXd x = a / std::ldexp(1.0, squarings);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd x2 = x * x;
    const Eigen::MatrixXd x4 = x2 * x2;
    const Eigen::MatrixXd x6 = x4 * x2;
    const auto& b = kPade13;

    const Eigen::MatrixXd u_inner = x6 * (b[13] * x6 + b[11] * x4 + b[9] * x2) +
                                    b[7] * x6 + b[5] * x4 + b[3] * x2 + b[1] * id;
    const Eigen::MatrixXd u = x * u_inner;
    const Eigen::MatrixXd v = x6 * (b[12] * x6 + b[10] * x4 + b[8] * x2) +
                              b[6] * x6 + b[4] * x4 + b[2] * x2 + b[0] * id;

    Eigen::MatrixXd r = (v - u).partialPivLu().solve(v + u);
    for (int i = 0; i < squarings; ++i) {
        r = r * r;
    }
    return r;
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) {
    return 0.5 * (a + a.transpose());
}

Eigen::MatrixXd sqrtm_psd(const Eigen::MatrixXd& a) {
    if (a.rows() == 1) {
        return Eigen::MatrixXd::Constant(1, 1, std::sqrt(std::max(a(0, 0), 0.0)));
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

double spectral_norm(const Eigen::MatrixXd& a) {
    if (a.size() == 1) {
        return std::abs(a(0, 0));
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

EigenRange sym_eigen_range(const Eigen::MatrixXd& a) {
    if (a.rows() == 1) {
        return {a(0, 0), a(0, 0)};
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symmetrize(a), Eigen::EigenvaluesOnly);
    return {es.eigenvalues().minCoeff(), es.eigenvalues().maxCoeff()};
}

double log_norm(const Eigen::MatrixXd& a) {
    return sym_eigen_range(a).max;
}

void enforce_psd(Eigen::MatrixXd& a, double rel_tol, double abs_floor) {
    a = symmetrize(a);
    if (a.size() == 0) {
        return;
    }
    const auto range = sym_eigen_range(a);
    const double scale = std::max(std::abs(range.max), abs_floor);
    if (range.min < -rel_tol * scale) {
        std::ostringstream msg;
        msg << "covariance is not positive semidefinite: smallest eigenvalue "
            << range.min << ", largest " << range.max;
        throw NonPsdError(msg.str());
    }
}

} // namespace apsde::linalg
