#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "apsde/ap_analysis.hpp"
#include "apsde/errors.hpp"
#include "oracles.hpp"

using namespace apsde;

namespace {

constexpr double kPi = std::numbers::pi;

/// Sup over the grid t0 + i h <= end of |f(t + τ) - f(t)|, evaluated directly.
template <typename F>
double brute_sup(F f, double tau, double t0, double end, double h) {
    double worst = 0.0;
    for (double t = t0; t <= end + 1e-12; t += h) {
        worst = std::max(worst, std::abs(f(t + tau) - f(t)));
    }
    return worst;
}

Eigen::MatrixXd random_psd(std::mt19937_64& gen, int d) {
    std::normal_distribution<double> z;
    Eigen::MatrixXd b(d, d);
    for (int i = 0; i < d * d; ++i) {
        b.data()[i] = z(gen);
    }
    return b * b.transpose();
}

/// X_t = e^{t} Z: non-stationary, variance growing without bound.
GaussianProcessSpec exploding_spec() {
    GaussianProcessSpec spec;
    spec.name = "exploding";
    spec.dim = 1;
    spec.mean = [](double) { return Eigen::VectorXd::Zero(1); };
    spec.kernel = [](double s, double t) { return Eigen::MatrixXd::Constant(1, 1, std::exp(s + t)); };
    return spec;
}

} // namespace

TEST(ScanAlmostPeriods, SineFindsTwoPi) {
    const auto f = expression_function(TimeExpr::parse("sin(t)"), 0.0, 40.0, 0.01);
    const auto r = scan_almost_periods(f, 1e-9, 1.0, 20.0, 0.01);
    ASSERT_FALSE(r.taus_found.empty());
    EXPECT_NEAR(r.taus_found.front(), 2 * kPi, 1e-6);
    EXPECT_TRUE(std::any_of(r.taus_found.begin(), r.taus_found.end(),
                            [](double t) { return std::abs(t - 4 * kPi) < 1e-6; }));
    EXPECT_GE(r.refined, 2u);
    EXPECT_EQ(r.curve.size(), 1901u);
    for (const auto& w : r.witnesses) {
        EXPECT_LE(w.distance, 1e-9);
    }
}

TEST(ScanAlmostPeriods, IdentityHasNoAlmostPeriods) {
    const auto f = expression_function(TimeExpr::parse("t"), 0.0, 40.0, 0.05);
    const auto r = scan_almost_periods(f, 0.5, 1.0, 20.0, 0.05);
    EXPECT_TRUE(r.taus_found.empty());
    EXPECT_FALSE(r.relatively_dense);
    EXPECT_TRUE(std::isinf(r.inclusion_length));
    for (const auto& w : r.curve) {
        EXPECT_NEAR(w.distance, w.tau, 1e-9);
    }
}

TEST(ScanAlmostPeriods, WindowTooShort) {
    const auto f = expression_function(TimeExpr::parse("sin(t)"), 0.0, 10.0, 0.1);
    EXPECT_THROW(scan_almost_periods(f, 0.1, 1.0, 20.0, 0.1), WindowTooShortError);
}

TEST(ScanAlmostPeriods, QuasiPeriodicSumIsRelativelyDense) {
    const double h = 0.05;
    const auto f = expression_function(TimeExpr::parse("sin(t) + sin(sqrt(2)*t)"), 0.0, 600.0, h);
    const auto r = scan_almost_periods(f, 0.1, 0.0, 500.0, 0.01);
    ASSERT_FALSE(r.taus_found.empty());
    EXPECT_LE(r.inclusion_length, 200.0);
    EXPECT_TRUE(r.relatively_dense);
    EXPECT_TRUE(relatively_dense(r.taus_found, 0.0, 500.0, r.inclusion_length));
    ::testing::Test::RecordProperty("inclusion_length", std::to_string(r.inclusion_length));

    // Re-validation on a 2x finer grid; g(t) = f(t+τ) - f(t) has Lipschitz
    // constant 2(1 + √2), so midpoints can exceed the grid sup by at most that times h/2.
    const double slack = 2.0 * (1.0 + std::sqrt(2.0)) * h / 2.0;
    const auto fn = [](double t) { return std::sin(t) + std::sin(std::sqrt(2.0) * t); };
    for (double tau : r.taus_found) {
        EXPECT_LE(brute_sup(fn, tau, 0.0, r.compare_end, h / 2), 0.1 + slack) << tau;
        EXPECT_LE(brute_sup(fn, tau, 0.0, r.compare_end, h), 0.1 + 1e-12) << tau;
    }
}

TEST(ScanAlmostPeriods, CandidateList) {
    const auto f = expression_function(TimeExpr::parse("cos(t)"), 0.0, 30.0, 0.01);
    const std::vector<double> cands{1.0, 2 * kPi, 3.0};
    const auto r = scan_almost_periods(f, 1e-9, cands);
    ASSERT_EQ(r.taus_found.size(), 1u);
    EXPECT_EQ(r.taus_found[0], 2 * kPi);
    EXPECT_EQ(r.curve.size(), 3u);
}

TEST(RelativelyDense, Examples) {
    std::vector<double> multiples;
    for (double t = 0.0; t <= 100.0; t += 2 * kPi) {
        multiples.push_back(t);
    }
    EXPECT_TRUE(relatively_dense(multiples, 0.0, 100.0, 7.0));
    EXPECT_FALSE(relatively_dense(multiples, 0.0, 100.0, 6.0));
    const std::vector<double> one{1.0};
    EXPECT_FALSE(relatively_dense(one, 0.0, 100.0, 10.0));
    EXPECT_DOUBLE_EQ(inclusion_length(one, 0.0, 100.0), 99.0);
    EXPECT_TRUE(std::isinf(inclusion_length(std::vector<double>{}, 0.0, 1.0)));
    const std::vector<double> unsorted{3.0, 1.0};
    EXPECT_THROW(inclusion_length(unsorted, 0.0, 5.0), std::invalid_argument);
}

TEST(RelativelyDense, AgreesWithSlidingIntervalDefinition) {
    std::mt19937_64 gen(4);
    std::uniform_real_distribution<double> u(0.0, 50.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> taus(static_cast<std::size_t>(1 + trial % 12));
        for (auto& t : taus) {
            t = u(gen);
        }
        std::sort(taus.begin(), taus.end());
        const double L = 1.0 + u(gen) / 5.0;
        bool all_hit = true;
        for (double a = 0.0; a + L <= 50.0 + 1e-12; a += 0.01) {
            const bool hit = std::any_of(taus.begin(), taus.end(),
                                         [&](double t) { return t >= a && t <= a + L; });
            all_hit = all_hit && hit;
        }
        // The sliding check is a sample of intervals, so it can only miss failures near 0.01 slack.
        if (relatively_dense(taus, 0.0, 50.0, L)) {
            EXPECT_TRUE(all_hit);
        } else if (inclusion_length(taus, 0.0, 50.0) > L + 0.02) {
            EXPECT_FALSE(all_hit);
        }
    }
}

TEST(MsFalsify, OuFromOne) {
    const auto r = ms_ap_falsify(ou_spec(OuParams(1, 1)), LinGrid{1.0, 50.0, 491}, LinGrid{0.0, 20.0, 41});
    EXPECT_NEAR(r.c, 2.0 * (1.0 - std::exp(-1.0)), 1e-12);
    EXPECT_NEAR(r.c, 1.26424, 1e-5);
    EXPECT_EQ(r.argmin_tau, 1.0);
    EXPECT_EQ(r.verdict, FalsifyVerdict::NotMeanSquareAp);
    EXPECT_NEAR(r.epsilon_bound, std::sqrt(r.c), 1e-15);

    // Monte Carlo oracle for the increment at the argmin.
    const auto pairs = oracle::ou_pairs(1.0, 1.0, 1.0, 200'000, 41);
    std::vector<double> sq(pairs.x0.size());
    for (std::size_t i = 0; i < sq.size(); ++i) {
        sq[i] = (pairs.x1[i] - pairs.x0[i]) * (pairs.x1[i] - pairs.x0[i]);
    }
    const auto mc = oracle::mean_se(sq);
    EXPECT_NEAR(r.c, mc.mean, 4 * mc.se);
}

TEST(MsFalsify, OuFromZeroIsInconclusive) {
    const auto r = ms_ap_falsify(ou_spec(OuParams(1, 1)), LinGrid{0.0, 50.0, 501}, LinGrid{0.0, 20.0, 21});
    EXPECT_EQ(r.c, 0.0);
    EXPECT_EQ(r.verdict, FalsifyVerdict::Inconclusive);
    EXPECT_THROW(ms_ap_falsify(ou_spec(OuParams(1, 1)), LinGrid{-1.0, 5.0, 3}, LinGrid{0.0, 1.0, 2}),
                 std::invalid_argument);
}

TEST(MsFalsify, PeriodicExample) {
    const auto r = ms_ap_falsify(periodic_example_spec(), LinGrid{kPi, 100.0, 2001},
                                 LinGrid{0.0, 2 * kPi, 629});
    EXPECT_GE(r.c, 1.0 - std::exp(-kPi + 2.0) - 1e-12);
    EXPECT_NEAR(r.c, 1.0 - std::exp(2.0 - kPi), 1e-4);
    EXPECT_NEAR(r.argmin_tau, kPi, 1e-12);
    EXPECT_EQ(r.verdict, FalsifyVerdict::NotMeanSquareAp);

    // Monte Carlo increment at the argmin from the exact two-point law.
    std::mt19937_64 gen(43);
    std::normal_distribution<double> z;
    const double u = oracle::periodic_u(r.argmin_t + r.argmin_tau, r.argmin_t);
    std::vector<double> sq(200'000);
    for (auto& v : sq) {
        const double x0 = std::sqrt(0.5) * z(gen);
        const double x1 = u * x0 + std::sqrt(0.5 * (1 - u * u)) * z(gen);
        v = (x1 - x0) * (x1 - x0);
    }
    const auto mc = oracle::mean_se(sq);
    EXPECT_NEAR(r.c, mc.mean, 4 * mc.se);
}

TEST(LemmaCheck, OuClosedForm) {
    ProbeSequence probe;
    for (int n = 1; n <= 30; ++n) {
        probe.times.push_back(n);
    }
    probe.direction = Eigen::VectorXd::Ones(1);
    const auto r = lemma_check(ou_spec(OuParams(1, 1)), probe, 100'000, 3);
    EXPECT_TRUE(r.closed_form);
    for (int i = 0; i < 30; ++i) {
        for (int j = 0; j < 30; ++j) {
            EXPECT_NEAR(r.cov(i, j), std::exp(-std::abs(i - j)), 1e-15);
        }
    }
    EXPECT_NEAR(r.max_far_cov, std::exp(-10.0), 1e-15);
    const double truth = 1.0 - 2.0 / kPi;
    for (const auto& v : r.norm_variance) {
        EXPECT_TRUE(v.covers(truth)) << v.value << " +- " << v.std_error;
    }
    EXPECT_EQ(r.verdict, LemmaVerdict::HypothesesSatisfied) << r.detail;
}

TEST(LemmaCheck, PeriodicExampleAtMultiplesOfTwoPi) {
    ProbeSequence probe;
    for (int n = 1; n <= 15; ++n) {
        probe.times.push_back(2 * kPi * n);
    }
    probe.direction = Eigen::VectorXd::Ones(1);
    LemmaOptions opt;
    opt.gap = 2;
    const auto r = lemma_check(periodic_example_spec(), probe, 50'000, 4, opt);
    EXPECT_NEAR(r.cov(0, 3), 0.5 * std::exp(-6 * kPi), 1e-14);
    EXPECT_NEAR(r.max_far_cov, 0.5 * std::exp(-4 * kPi), 1e-12);
    for (const auto& v : r.norm_variance) {
        EXPECT_TRUE(v.covers(0.5 * (1.0 - 2.0 / kPi)));
    }
    EXPECT_EQ(r.verdict, LemmaVerdict::HypothesesSatisfied) << r.detail;
}

TEST(LemmaCheck, ConstantProcessFails) {
    ProbeSequence probe{{0.0, 1.0, 2.0, 3.0}, Eigen::VectorXd::Ones(1)};
    LemmaOptions opt;
    opt.gap = 2;
    const auto sampler = constant_sampler(Eigen::VectorXd::Constant(1, 2.0));
    const auto mc = lemma_check(sampler, probe, 1000, 1, opt);
    EXPECT_EQ(mc.verdict, LemmaVerdict::HypothesesFailed) << mc.detail;
    const auto cf = lemma_check(*sampler.law, probe, 1000, 1, opt);
    EXPECT_EQ(cf.verdict, LemmaVerdict::HypothesesFailed) << cf.detail;
}

TEST(LemmaCheck, MonteCarloOverloadOnOu) {
    ProbeSequence probe;
    for (int n = 0; n < 14; ++n) {
        probe.times.push_back(n);
    }
    probe.direction = Eigen::VectorXd::Ones(1);
    const auto r = lemma_check(ou_sampler(OuParams(1, 1)), probe, 50'000, 5);
    EXPECT_FALSE(r.closed_form);
    for (int i = 0; i < 14; ++i) {
        for (int j = 0; j < 14; ++j) {
            EXPECT_NEAR(r.cov(i, j), std::exp(-std::abs(i - j)), 4 * r.cov_se(i, j) + 1e-12);
        }
    }
    // Far covariances are ~e^{-10}; 4 SE at 5e4 paths is ~0.02, far above cov_tol.
    EXPECT_EQ(r.verdict, LemmaVerdict::Undecided) << r.detail;
}

TEST(LemmaCheck, RejectsBadProbe) {
    const auto spec = ou_spec(OuParams(1, 1));
    EXPECT_THROW(lemma_check(spec, ProbeSequence{{1.0, 0.0}, Eigen::VectorXd::Ones(1)}, 100, 1),
                 std::invalid_argument);
    EXPECT_THROW(lemma_check(spec, ProbeSequence{{0.0, 1.0}, Eigen::VectorXd::Ones(2)}, 100, 1),
                 std::invalid_argument);
}

TEST(FalsificationRoutes, AgreeOnBothExamples) {
    for (const auto& spec : {ou_spec(OuParams(1, 1)), periodic_example_spec()}) {
        const auto ms = ms_ap_falsify(spec, LinGrid{kPi, 50.0, 200}, LinGrid{0.0, 2 * kPi, 64});
        ASSERT_EQ(ms.verdict, FalsifyVerdict::NotMeanSquareAp);
        ProbeSequence probe;
        for (int n = 0; n < 20; ++n) {
            probe.times.push_back(kPi * (n + 1));
        }
        probe.direction = Eigen::VectorXd::Ones(1);
        LemmaOptions opt;
        opt.gap = 4;
        EXPECT_EQ(lemma_check(spec, probe, 20'000, 6, opt).verdict, LemmaVerdict::HypothesesSatisfied)
            << spec.name;
    }
}

TEST(GaussianW2, ClosedFormCases) {
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
    const Eigen::VectorXd z1 = Eigen::VectorXd::Ones(1);
    const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(1, 1);
    EXPECT_EQ(gaussian_w2(z0, i1, z0, i1), 0.0);
    EXPECT_DOUBLE_EQ(gaussian_w2(z0, i1, z1, i1), 1.0);
    EXPECT_DOUBLE_EQ(gaussian_w2(z0, i1, z0, 4.0 * i1), 1.0);

    std::mt19937_64 gen(9);
    const Eigen::MatrixXd c = random_psd(gen, 4);
    const Eigen::VectorXd m = Eigen::VectorXd::LinSpaced(4, -1.0, 2.0);
    EXPECT_LT(gaussian_w2(m, c, m, c), 1e-12);

    Eigen::MatrixXd bad = -i1;
    EXPECT_THROW(gaussian_w2(z0, bad, z0, i1), NonPsdError);
}

TEST(GaussianW2, EmpiricalCouplingOracle) {
    std::mt19937_64 gen(10);
    std::normal_distribution<double> z;
    const std::size_t n = 1'000'000;
    std::vector<double> a(n), b(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
        a[i] = z(gen);
        b[i] = 1.0 + z(gen);
        c[i] = 2.0 * z(gen);
    }
    const Eigen::VectorXd z0 = Eigen::VectorXd::Zero(1);
    const Eigen::MatrixXd i1 = Eigen::MatrixXd::Identity(1, 1);
    EXPECT_NEAR(gaussian_w2(z0, i1, Eigen::VectorXd::Ones(1), i1), oracle::empirical_w2_1d(a, b), 1e-2);
    EXPECT_NEAR(gaussian_w2(z0, i1, z0, 4.0 * i1), oracle::empirical_w2_1d(a, c), 1e-2);
}

TEST(GaussianW2, MatchesTraceFormulaAndIsAMetric) {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> z;
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + trial % 4;
        const Eigen::MatrixXd c1 = random_psd(gen, d);
        const Eigen::MatrixXd c2 = random_psd(gen, d);
        const Eigen::MatrixXd c3 = random_psd(gen, d);
        Eigen::VectorXd m1(d), m2(d), m3(d);
        for (int i = 0; i < d; ++i) {
            m1(i) = z(gen);
            m2(i) = z(gen);
            m3(i) = z(gen);
        }
        const double d12 = gaussian_w2(m1, c1, m2, c2);
        EXPECT_NEAR(d12, gaussian_w2(m2, c2, m1, c1), 1e-12);
        EXPECT_LE(d12, gaussian_w2(m1, c1, m3, c3) + gaussian_w2(m3, c3, m2, c2) + 1e-12);

        // Independent evaluation of the trace formula through eigen-decompositions.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> e2(c2);
        const Eigen::MatrixXd r2 = e2.eigenvectors() *
                                   e2.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
                                   e2.eigenvectors().transpose();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(r2 * c1 * r2);
        const double cross = em.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
        const double trace_form = (m1 - m2).squaredNorm() + c1.trace() + c2.trace() - 2.0 * cross;
        EXPECT_NEAR(d12 * d12, trace_form, 1e-9 * (1.0 + c1.trace() + c2.trace()));
    }
}

TEST(DistributionAp, PeriodicExampleTwoPiIsExact) {
    const std::vector<double> offsets{0, 1, 2, 3, 4};
    const std::vector<double> taus{2 * kPi, kPi};
    const auto r = distribution_ap_check(periodic_example_spec(), offsets, taus, 1e-10, 0.0, 2 * kPi, 0.05);
    ASSERT_EQ(r.taus_found.size(), 1u);
    EXPECT_EQ(r.taus_found[0], 2 * kPi);
    EXPECT_LE(r.witnesses[0].distance, 1e-10);
    EXPECT_GT(r.curve[1].distance, 0.01);
}

TEST(DistributionAp, OuStationaryAtAnyShift) {
    const std::vector<double> offsets{0, 0.5, 2};
    const std::vector<double> taus{0.3, 1.0, 7.7};
    const auto r = distribution_ap_check(ou_spec(OuParams(1, 1)), offsets, taus, 1e-12, 0.0, 5.0, 0.1);
    EXPECT_EQ(r.taus_found.size(), 3u);
    for (const auto& w : r.curve) {
        EXPECT_LE(w.distance, 1e-12);
    }
}

TEST(DistributionAp, ExplodingProcessHasNoSmallAlmostPeriods) {
    const std::vector<double> offsets{0, 1};
    const auto r = distribution_ap_scan(exploding_spec(), offsets, 0.1, 1.0, 10.0, 0.1, 0.0, 5.0, 0.1);
    EXPECT_TRUE(r.taus_found.empty());
    EXPECT_FALSE(r.relatively_dense);
}

TEST(DistributionAp, ScanRecoversTwoPiMultiples) {
    const std::vector<double> offsets{0, 1};
    const auto r = distribution_ap_scan(periodic_example_spec(), offsets, 1e-8, 1.0, 13.0, 0.05, 0.0,
                                        2 * kPi, 0.1);
    ASSERT_EQ(r.taus_found.size(), 2u);
    EXPECT_NEAR(r.taus_found[0], 2 * kPi, 1e-6);
    EXPECT_NEAR(r.taus_found[1], 4 * kPi, 1e-6);
    EXPECT_THROW(distribution_ap_scan(periodic_example_spec(), std::vector<double>{1, 0}, 1e-8, 1.0,
                                      2.0, 0.1, 0.0, 1.0, 0.1),
                 std::invalid_argument);
}
