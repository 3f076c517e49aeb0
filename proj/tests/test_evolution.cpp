#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "apsde/errors.hpp"
#include "apsde/evolution.hpp"
#include "apsde/linalg.hpp"
#include "oracles.hpp"

using namespace apsde;

namespace {

constexpr double kPi = std::numbers::pi;

EvolutionSystem constant_scalar(double a, double g) {
    EvolutionSystem sys;
    sys.name = "constant_scalar";
    sys.drift = [a](double) { return Eigen::MatrixXd::Constant(1, 1, a); };
    sys.noise = [g](double) { return Eigen::MatrixXd::Constant(1, 1, g); };
    sys.noise_cov = Eigen::MatrixXd::Identity(1, 1);
    return sys;
}

/// A(t) = [[-2, sin t], [-sin t, -2]], g = I, Q = I. The skew part commutes
/// with -2I, so U(t,s) = e^{-2(t-s)} R(cos s - cos t) with R a rotation.
EvolutionSystem rotating_system() {
    EvolutionSystem sys;
    sys.name = "rotating";
    sys.dim_state = 2;
    sys.dim_noise = 2;
    sys.drift = [](double t) {
        Eigen::MatrixXd a(2, 2);
        a << -2.0, std::sin(t), -std::sin(t), -2.0;
        return a;
    };
    sys.noise = [](double) { return Eigen::MatrixXd::Identity(2, 2); };
    sys.noise_cov = Eigen::MatrixXd::Identity(2, 2);
    sys.period_hint = 2 * kPi;
    return sys;
}

Eigen::MatrixXd rotating_u(double t, double s) {
    const double phi = std::cos(s) - std::cos(t);
    Eigen::MatrixXd r(2, 2);
    r << std::cos(phi), std::sin(phi), -std::sin(phi), std::cos(phi);
    return std::exp(-2.0 * (t - s)) * r;
}

} // namespace

TEST(Validate, RejectsInconsistentSystems) {
    auto sys = rotating_system();
    EXPECT_NO_THROW(validate(sys));
    sys.noise_cov = Eigen::MatrixXd::Identity(3, 3);
    EXPECT_THROW(validate(sys), std::invalid_argument);
    sys = rotating_system();
    sys.noise_cov(0, 0) = -1.0;
    EXPECT_THROW(validate(sys), std::invalid_argument);
    sys = rotating_system();
    sys.period_hint = -1.0;
    EXPECT_THROW(validate(sys), std::invalid_argument);
}

TEST(Propagator, ConstantDecayAgainstRk4) {
    const auto sys = constant_scalar(-1.0, 0.0);
    const auto eval = propagator(sys, 0.0, 1.0, 1e-3);
    const auto rk4 = oracle::rk4_propagator<double>([](double) { return -1.0; }, 0.0, 1.0, 1e-5, 1.0);
    EXPECT_NEAR(eval.U(0, 0), rk4, 1e-8);
    EXPECT_NEAR(eval.U(0, 0), 0.367879, 1e-6);
    EXPECT_LE(eval.err_est, 1e-6 * eval.U.norm());
    EXPECT_GT(eval.step, 0.0);
}

TEST(Propagator, PeriodicClosedForm) {
    const auto sys = periodic_example_system();
    const auto eval = propagator(sys, 0.0, kPi, 1e-3);
    EXPECT_NEAR(eval.U(0, 0), std::exp(-kPi), 1e-10);
    EXPECT_NEAR(eval.U(0, 0), 0.043214, 1e-6);
    const auto rk4 = oracle::rk4_propagator<double>([](double t) { return -1.0 + std::cos(t); }, 0.0,
                                                    kPi, 1e-5, 1.0);
    EXPECT_NEAR(eval.U(0, 0), rk4, 1e-10);
}

TEST(Propagator, IdentityAtEqualTimes) {
    for (const auto& sys : {rotating_system(), periodic_example_system()}) {
        const auto eval = propagator(sys, 2.5, 2.5, 1e-3);
        EXPECT_EQ(eval.U, Eigen::MatrixXd::Identity(sys.dim_state, sys.dim_state));
        EXPECT_EQ(eval.err_est, 0.0);
    }
}

TEST(Propagator, RotatingSystemClosedFormAndRk4) {
    const auto sys = rotating_system();
    std::mt19937_64 gen(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 10; ++i) {
        double s = u(gen);
        double t = u(gen);
        if (s > t) {
            std::swap(s, t);
        }
        t = std::min(t, s + 6.0);
        const auto eval = propagator(sys, s, t, 1e-3);
        EXPECT_LT((eval.U - rotating_u(t, s)).norm(), 1e-9);
        const Eigen::MatrixXd rk4 = oracle::rk4_propagator<Eigen::MatrixXd>(
            sys.drift, s, t, 1e-4, Eigen::MatrixXd::Identity(2, 2));
        EXPECT_LT((eval.U - rk4).norm(), 1e-9);
    }
}

TEST(Propagator, RejectsBadArgumentsAndCoarseSteps) {
    const auto sys = periodic_example_system();
    EXPECT_THROW(propagator(sys, 1.0, 0.0, 1e-3), std::invalid_argument);
    EXPECT_THROW(propagator(sys, 0.0, 1.0, 0.0), std::invalid_argument);

    EvolutionSystem stiff = constant_scalar(0.0, 0.0);
    stiff.drift = [](double t) { return Eigen::MatrixXd::Constant(1, 1, 40.0 * std::cos(40.0 * t)); };
    EXPECT_THROW(propagator(stiff, 0.0, 1.0, 0.5), StepTooLargeError);
}

TEST(Propagator, CocycleProperty) {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (const auto& sys : {rotating_system(), periodic_example_system()}) {
        for (int i = 0; i < 15; ++i) {
            std::array<double, 3> pts{u(gen), u(gen), u(gen)};
            std::sort(pts.begin(), pts.end());
            const auto [s, r, t] = pts;
            const Eigen::MatrixXd lhs = propagator(sys, r, t, 1e-3).U * propagator(sys, s, r, 1e-3).U;
            EXPECT_LE((lhs - propagator(sys, s, t, 1e-3).U).norm(), 1e-7);
        }
    }
}

TEST(Dissipativity, Examples) {
    std::vector<double> grid;
    for (int i = 0; i < 100; ++i) {
        grid.push_back(-5.0 + 0.1 * i);
    }
    EXPECT_DOUBLE_EQ(check_dissipativity(ou_system(OuParams(1.7, 1.0)), grid), 1.7);
    EXPECT_NEAR(check_dissipativity(periodic_example_system(), grid), 0.0, 1e-12);

    // Oracle: the scalar maximum of -1 + cos t over the grid.
    double worst = -1e300;
    for (double t : grid) {
        worst = std::max(worst, -1.0 + std::cos(t));
    }
    EXPECT_DOUBLE_EQ(check_dissipativity(periodic_example_system(), grid), -worst);

    const auto rot = rotating_system();
    for (double t : grid) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (rot.drift(t) + rot.drift(t).transpose()));
        EXPECT_NEAR(es.eigenvalues().maxCoeff(), -2.0, 1e-14);
    }
    EXPECT_NEAR(check_dissipativity(rot, grid), 2.0, 1e-14);
    EXPECT_THROW(check_dissipativity(rot, std::vector<double>{}), std::invalid_argument);
}

TEST(ExponentialStability, ConstantDecay) {
    const auto est = check_exponential_stability(constant_scalar(-1.0, 1.0), 10.0, 1e-2);
    EXPECT_NEAR(est.M, 1.0, 1e-3);
    EXPECT_NEAR(est.delta, 1.0, 1e-3);
    EXPECT_DOUBLE_EQ(est.beta, 1.0);
}

TEST(ExponentialStability, PeriodicExample) {
    const auto sys = periodic_example_system();
    const auto est = check_exponential_stability(sys, 6 * kPi, 1e-3);
    EXPECT_NEAR(est.delta, 1.0, 1e-2);
    EXPECT_LE(est.M, std::exp(2.0) * 1.01);
    // M must dominate the closed form on the fitting grid.
    double grid_max = 0.0;
    for (double s = 0; s < 2 * kPi; s += 0.01) {
        for (double tau = 0; tau <= 6 * kPi; tau += 0.01) {
            grid_max = std::max(grid_max, oracle::periodic_u(s + tau, s) * std::exp(est.delta * tau));
        }
    }
    EXPECT_GE(est.M, grid_max * (1 - 1e-12));
    EXPECT_TRUE(est.grid.periodic_bases);
    EXPECT_NEAR(est.beta, 0.0, 1e-9);
}

TEST(ExponentialStability, UnstableIsReported) {
    EXPECT_THROW(check_exponential_stability(constant_scalar(1.0, 1.0), 20.0, 1e-2), UnstableError);
    EXPECT_THROW(check_exponential_stability(constant_scalar(-1.0, 1.0), 0.0, 1e-2),
                 std::invalid_argument);
}

TEST(ExponentialStability, CertificateIsSoundOnFinerGrid) {
    for (const auto& sys : {rotating_system(), periodic_example_system()}) {
        const auto est = check_exponential_stability(sys, 4 * kPi, 1e-2);
        const double fine = 2.5e-3;
        for (double s = -3.0; s < 2 * kPi; s += 0.37) {
            Eigen::MatrixXd u = Eigen::MatrixXd::Identity(sys.dim_state, sys.dim_state);
            for (double tau = fine; tau <= 4 * kPi; tau += fine) {
                u = propagator(sys, s + tau - fine, s + tau, 1e-3).U * u;
                const double norm = linalg::spectral_norm(u);
                EXPECT_LE(norm, est.M * std::exp(-est.delta * tau) + 1e-9) << s << "," << tau;
            }
        }
    }
}

TEST(ConvolutionCovariance, OuClosedForm) {
    const OuParams p(1.0, 1.0);
    const auto sys = ou_system(p);
    for (double t : {0.0, 3.0}) {
        EXPECT_NEAR(convolution_covariance(sys, t, t, 1e-2, 1e-12)(0, 0), 1.0, 1e-8);
    }
    const OuParams q(0.5, 2.0);
    EXPECT_NEAR(convolution_covariance(ou_system(q), 0.0, 2.0, 1e-2, 1e-12)(0, 0),
                4.0 * std::exp(-1.0), 1e-8);
}

TEST(ConvolutionCovariance, PeriodicAgainstQuadrature) {
    const auto sys = periodic_example_system();
    const auto stab = check_exponential_stability(sys, 6 * kPi, 1e-2);
    for (auto [t1, t2] : {std::pair{0.0, 0.0}, std::pair{0.0, 2 * kPi}, std::pair{1.0, 2.5},
                          std::pair{-4.0, 0.3}}) {
        const double num = convolution_covariance(sys, t1, t2, 1e-2, 1e-12, stab)(0, 0);
        EXPECT_NEAR(num, oracle::periodic_cov_quadrature(t1, t2), 1e-6) << t1 << "," << t2;
    }
    EXPECT_NEAR(convolution_covariance(sys, 0.0, 2 * kPi, 1e-2, 1e-12, stab)(0, 0),
                0.5 * std::exp(-2 * kPi), 1e-6);
}

TEST(ConvolutionCovariance, RotatingSystemStationaryLaw) {
    // Σ solves Σ' = AΣ + ΣAᵀ + I with A = -2I + skew, so Σ = I/4 is stationary.
    const auto sys = rotating_system();
    const Eigen::MatrixXd c = convolution_covariance(sys, 1.0, 1.0, 1e-2, 1e-12);
    EXPECT_LT((c - 0.25 * Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-8);
    const Eigen::MatrixXd cross = convolution_covariance(sys, 1.0, 2.5, 1e-2, 1e-12);
    EXPECT_LT((cross - 0.25 * rotating_u(2.5, 1.0).transpose()).norm(), 1e-8);
}

TEST(ConvolutionCovariance, RequiresStability) {
    EXPECT_THROW(convolution_covariance(constant_scalar(0.0, 1.0), 0.0, 0.0, 1e-2, 1e-12),
                 NotStableError);
    EXPECT_THROW(convolution_covariance(ou_system(OuParams(1, 1)), 1.0, 0.0, 1e-2, 1e-12),
                 std::invalid_argument);
}

TEST(VarianceCondition, Examples) {
    EXPECT_NEAR(variance_condition(ou_system(OuParams(1, 1)), 2.0, 1e-2, 1e-12), 1.0, 1e-8);
    const auto sys = periodic_example_system();
    const auto stab = check_exponential_stability(sys, 6 * kPi, 1e-2);
    for (double t : {0.0, 1.0, 2.0, 4.0}) {
        EXPECT_NEAR(variance_condition(sys, t, 1e-2, 1e-12, stab), 0.5, 1e-6);
    }
    EXPECT_EQ(variance_condition(constant_scalar(-1.0, 0.0), 0.0, 1e-2, 1e-12), 0.0);
}

TEST(ConvolutionCovariance, DecayBoundHolds) {
    for (const auto& sys : {rotating_system(), periodic_example_system()}) {
        const auto stab = check_exponential_stability(sys, 4 * kPi, 1e-2);
        for (double t : {0.0, 1.7}) {
            const double v = variance_condition(sys, t, 1e-2, 1e-12, stab);
            for (double tau : {0.5, 2.0, 5.0, 9.0}) {
                const double off =
                    linalg::spectral_norm(convolution_covariance(sys, t, t + tau, 1e-2, 1e-12, stab));
                EXPECT_LE(off, stab.M * std::exp(-stab.delta * tau) * v + 1e-12);
            }
        }
    }
}

TEST(EvolutionSpec, KernelMatchesClosedForm) {
    const auto spec = evolution_spec(periodic_example_system(), 1e-2, 1e-12);
    EXPECT_NEAR(spec.kernel(0.0, 1.0)(0, 0), 0.5 * std::exp(-1.0 + std::sin(1.0)), 1e-6);
    EXPECT_NEAR(spec.kernel(1.0, 0.0)(0, 0), 0.5 * std::exp(-1.0 + std::sin(1.0)), 1e-6);
    EXPECT_THROW(evolution_spec(constant_scalar(0.0, 1.0), 1e-2, 1e-12), NotStableError);
}

TEST(ExpressionSystem, BuildsFromExpressions) {
    auto sys = expression_system("expr", MatrixExpr({{TimeExpr::parse("-1 + cos(t)")}}),
                                 MatrixExpr({{TimeExpr::parse("sqrt(1 - cos(t))")}}),
                                 Eigen::MatrixXd::Identity(1, 1), 2 * kPi);
    EXPECT_NEAR(propagator(sys, 0.0, kPi, 1e-3).U(0, 0), std::exp(-kPi), 1e-10);
    EXPECT_THROW(expression_system("bad", MatrixExpr({{TimeExpr::constant(1), TimeExpr::constant(0)}}),
                                   MatrixExpr({{TimeExpr::constant(1)}}),
                                   Eigen::MatrixXd::Identity(1, 1)),
                 std::invalid_argument);
}
