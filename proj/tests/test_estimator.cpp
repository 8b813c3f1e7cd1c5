#include "plriv/estimator.hpp"

#include "plriv/errors.hpp"
#include "plriv/simulation.hpp"

#include <doctest.h>

#include "oracle_util.hpp"

#include <cmath>

using namespace plriv;

namespace {

FitConfig raw_config(double lambda) {
    FitConfig cfg;
    cfg.lambda = lambda;
    cfg.standardize_inputs = false;
    return cfg;
}

double relative_gap(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a - b).norm() / std::max(1e-12, b.norm());
}

}  // namespace

TEST_CASE("fit matches the brute-force minimizer of the penalized objective") {
    RandomStream rng(101, 0);
    for (int trial = 0; trial < 6; ++trial) {
        const Eigen::Index p = trial % 3;
        const Dataset data = oracle::random_instance(6, p, rng);
        const double lambda = 5e-3 * (1.0 + trial);
        const FitConfig cfg = raw_config(lambda);

        const Fit f = fit(data, cfg);
        const oracle::OracleSolution sol =
            oracle::solve_by_optimizer(data, cfg.kernel, cfg.mu, lambda);

        const Eigen::VectorXd h_fit = f.gram.K * f.alpha;
        CHECK(relative_gap(h_fit, sol.h_values) < 1e-4);
        if (p > 0) {
            CHECK(relative_gap(f.beta, sol.beta) < 1e-4);
        }
        CHECK(std::abs(ame(f) - sol.theta) <
              1e-4 * std::max(1.0, std::abs(sol.theta)));
    }
}

TEST_CASE("fit on a simulated draw matches the optimizer oracle") {
    DgpSpec spec;
    spec.n = 6;
    RandomStream rng(2024, 3);
    const Dataset data = draw_sample(spec, rng);
    const FitConfig cfg = raw_config(1e-2);

    const Fit f = fit(data, cfg);
    const oracle::OracleSolution sol =
        oracle::solve_by_optimizer(data, cfg.kernel, cfg.mu, cfg.lambda);
    CHECK(relative_gap(f.gram.K * f.alpha, sol.h_values) < 1e-4);
    CHECK(std::abs(ame(f) - sol.theta) < 1e-4 * std::max(1.0, std::abs(sol.theta)));
}

TEST_CASE("the fitted objective dominates trivial and perturbed candidates") {
    RandomStream rng(103, 0);
    const Dataset data = oracle::random_instance(12, 0, rng);
    const FitConfig cfg = raw_config(1e-3);
    const Fit f = fit(data, cfg);

    const double at_fit = objective_value(data, cfg, f.alpha, f.beta);
    const double at_zero = objective_value(data, cfg, Eigen::VectorXd::Zero(12),
                                           Eigen::VectorXd());
    CHECK(at_fit <= at_zero);

    // at_zero is exactly (1/n^2) Y'FY.
    const double yfy = data.Y.dot(f.F * data.Y) / 144.0;
    CHECK(at_zero == doctest::Approx(yfy));

    for (int k = 0; k < 100; ++k) {
        Eigen::VectorXd d_alpha(12);
        for (Eigen::Index i = 0; i < 12; ++i) d_alpha[i] = rng.normal();
        d_alpha *= 0.1 * rng.uniform01() / d_alpha.norm();
        CHECK(objective_value(data, cfg, f.alpha + d_alpha, f.beta) >=
              at_fit - 1e-14);
    }
}

TEST_CASE("huge penalties collapse the nonparametric part onto the linear fit") {
    RandomStream rng(107, 0);
    const Dataset data = oracle::random_instance(20, 2, rng);
    FitConfig cfg = raw_config(1e9);
    const Fit f = fit(data, cfg);

    CHECK(f.alpha.norm() < 1e-8);
    // beta -> (X'FX)^{-1} X'FY when K alpha vanishes.
    const Eigen::MatrixXd C = f.X.transpose() * f.F * f.X;
    const Eigen::VectorXd target = C.llt().solve(f.X.transpose() * f.F * data.Y);
    CHECK(relative_gap(f.beta, target) < 1e-6);
}

TEST_CASE("first-order conditions hold on random instances") {
    RandomStream rng(109, 0);
    for (const Eigen::Index n : {10, 50, 200}) {
        const Dataset data = oracle::random_instance(n, n >= 50 ? 2 : 1, rng);
        FitConfig cfg;
        cfg.lambda = 1e-4;
        const Fit f = fit(data, cfg);
        CHECK(f.foc_residual <= 1e-8 * f.foc_rhs_norm);
    }
}

TEST_CASE("beta reproduces its closed form from alpha") {
    RandomStream rng(113, 0);
    const Dataset data = oracle::random_instance(25, 2, rng);
    FitConfig cfg;
    cfg.lambda = 1e-3;
    const Fit f = fit(data, cfg);

    const Eigen::MatrixXd C = f.X.transpose() * f.F * f.X;
    const Eigen::VectorXd beta_again =
        C.llt().solve(f.X.transpose() * f.F * (f.Y - f.gram.K * f.alpha));
    CHECK((f.beta - beta_again).norm() < 1e-10 * (1.0 + f.beta.norm()));
}

TEST_CASE("solutions differing by a null-space direction give the same h") {
    RandomStream rng(127, 0);
    const Dataset data = oracle::random_instance(40, 0, rng);
    FitConfig cfg;
    cfg.lambda = 1e-5;
    const Fit f = fit(data, cfg);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(f.gram.K);
    Eigen::Index weakest = 0;
    eig.eigenvalues().cwiseAbs().minCoeff(&weakest);
    Fit shifted = f;
    shifted.alpha += eig.eigenvectors().col(weakest);
    const Eigen::VectorXd h0 = predict_h(f, data.Z);
    const Eigen::VectorXd h1 = predict_h(shifted, data.Z);
    CHECK((h0 - h1).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("the solved system is linear in Y at fixed lambda") {
    RandomStream rng(131, 0);
    const Dataset data = oracle::random_instance(18, 1, rng);
    FitConfig cfg;
    cfg.lambda = 3e-4;
    const Fit base = fit(data, cfg);

    Dataset doubled = data;
    doubled.Y *= 2.0;  // power of two: scaling is exact in floating point
    const Fit twice = fit(doubled, cfg);
    CHECK((twice.alpha - 2.0 * base.alpha).cwiseAbs().maxCoeff() == 0.0);
    CHECK((twice.beta - 2.0 * base.beta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(ame(twice) == 2.0 * ame(base));

    // Non-dyadic scales are exact only up to solver noise in the weakly
    // penalized directions.
    Dataset scaled = data;
    scaled.Y *= 3.7;
    const Fit alt = fit(scaled, cfg);
    CHECK(relative_gap(alt.alpha, (3.7 * base.alpha).eval()) < 1e-8);
    CHECK(std::abs(ame(alt) - 3.7 * ame(base)) < 1e-8 * std::abs(ame(alt)));
}

TEST_CASE("standardization is the chain-rule image of the raw fit") {
    RandomStream rng(137, 0);
    Dataset data = oracle::random_instance(30, 1, rng);
    data.Z *= 2.0;  // give Z a non-unit scale

    FitConfig cfg_on;
    cfg_on.lambda = 1e-3;
    cfg_on.standardize_inputs = true;
    const Fit f_on = fit(data, cfg_on);

    // Pre-standardize every kernel/conditioning input by hand, then fit raw.
    Dataset pre = data;
    const Standardized sz = standardize(data.Z);
    pre.Z = sz.values;
    pre.X.col(0) = standardize(data.X.col(0)).values;
    pre.W.col(0) = standardize(data.W.col(0)).values;

    FitConfig cfg_off = cfg_on;
    cfg_off.standardize_inputs = false;
    const Fit f_off = fit(pre, cfg_off);

    // Caveat: pre-standardizing X changes the linear design, so compare the
    // fully nonparametric quantities only through a p=0 variant.
    Dataset data_p0 = data;
    data_p0.X.resize(30, 0);
    Dataset pre_p0 = pre;
    pre_p0.X.resize(30, 0);
    const Fit on_p0 = fit(data_p0, cfg_on);
    const Fit off_p0 = fit(pre_p0, cfg_off);
    CHECK((predict_h(on_p0, data.Z) - predict_h(off_p0, pre.Z)).cwiseAbs().maxCoeff() <
          1e-8);
    CHECK(ame(on_p0) == doctest::Approx(ame(off_p0) / sz.scale).epsilon(1e-10));
}

TEST_CASE("predict_h and predict_h_deriv agree with their definitions") {
    RandomStream rng(139, 0);
    const Dataset data = oracle::random_instance(22, 1, rng);
    FitConfig cfg;
    cfg.lambda = 2e-3;
    const Fit f = fit(data, cfg);

    SUBCASE("zero coefficients give the zero function") {
        Fit zeroed = f;
        zeroed.alpha.setZero();
        CHECK(predict_h(zeroed, data.Z).cwiseAbs().maxCoeff() == 0.0);
        CHECK(predict_h_deriv(zeroed, data.Z).cwiseAbs().maxCoeff() == 0.0);
        CHECK(ame(zeroed) == 0.0);
    }
    SUBCASE("training-point predictions equal the Gram product") {
        const Eigen::VectorXd via_matrix = f.gram.K * f.alpha;
        const Eigen::VectorXd via_predict = predict_h(f, data.Z);
        CHECK((via_matrix - via_predict).cwiseAbs().maxCoeff() < 1e-12);
    }
    SUBCASE("derivative matches finite differences of predict_h") {
        Eigen::VectorXd points(5);
        points << -1.3, -0.4, 0.0, 0.9, 2.2;
        const Eigen::VectorXd deriv = predict_h_deriv(f, points);
        const double step = 1e-5;
        for (Eigen::Index i = 0; i < points.size(); ++i) {
            Eigen::VectorXd up(1), down(1);
            up << points[i] + step;
            down << points[i] - step;
            const double fd =
                (predict_h(f, up)[0] - predict_h(f, down)[0]) / (2.0 * step);
            CHECK(std::abs(deriv[i] - fd) < 1e-6);
        }
    }
    SUBCASE("ame equals the mean derivative at the training points") {
        const double via_loop = predict_h_deriv(f, data.Z).mean();
        CHECK(std::abs(ame(f) - via_loop) < 1e-12);
    }
}

TEST_CASE("chain rule divides the kernel-space derivative by the scale") {
    Dataset data;
    data.Z.resize(8);
    data.Z << -4, -3, -2, -1, 1, 2, 3, 4;
    data.Y.resize(8);
    data.Y << 1, -1, 2, 0, 1, -2, 0.5, 1.5;
    data.W.resize(8, 1);
    data.W << -3.5, -2, -2.5, -0.5, 0.5, 2.5, 2, 3.5;
    data.X.resize(8, 0);

    FitConfig cfg;
    cfg.lambda = 1e-3;
    const Fit f = fit(data, cfg);
    const double scale = f.z_transform.scale;
    CHECK(scale > 1.0);

    Eigen::VectorXd pt(1);
    pt << 1.7;
    const double zs = f.z_transform.apply(pt[0]);
    double kernel_space = 0.0;
    for (Eigen::Index i = 0; i < 8; ++i) {
        kernel_space += f.alpha[i] * kernel_deriv(f.kernel, zs, f.z_std[i]);
    }
    CHECK(predict_h_deriv(f, pt)[0] == doctest::Approx(kernel_space / scale));
}

TEST_CASE("objective quadratic form equals the Monte Carlo integral of M_n") {
    RandomStream rng(149, 0);
    const Dataset data = oracle::random_instance(10, 1, rng);
    const FitConfig cfg = raw_config(1e-3);

    Eigen::VectorXd alpha(10);
    for (Eigen::Index i = 0; i < 10; ++i) alpha[i] = 0.3 * rng.normal();
    Eigen::VectorXd beta(1);
    beta << 0.7;

    const Fit f = fit(data, cfg);
    const Eigen::VectorXd resid = data.Y - data.X * beta - f.gram.K * alpha;
    const double penalty = cfg.lambda * alpha.dot(f.gram.K * alpha);
    const double quad_form = objective_value(data, cfg, alpha, beta) - penalty;

    // t ~ mu via inverse-CDF sampling of the Laplace(0, 1/sqrt(2)) marginals.
    const int draws = 100000;
    const double b = 1.0 / std::sqrt(2.0);
    double mc_sum = 0.0;
    double mc_sumsq = 0.0;
    for (int s = 0; s < draws; ++s) {
        double t0, t1;
        {
            const double u = rng.uniform01() - 0.5;
            t0 = -b * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
        }
        {
            const double u = rng.uniform01() - 0.5;
            t1 = -b * (u < 0 ? -1.0 : 1.0) * std::log1p(-2.0 * std::abs(u));
        }
        double re = 0.0;
        double im = 0.0;
        for (Eigen::Index i = 0; i < 10; ++i) {
            const double phase = data.X(i, 0) * t0 + data.W(i, 0) * t1;
            re += resid[i] * std::cos(phase);
            im += resid[i] * std::sin(phase);
        }
        re /= 10.0;
        im /= 10.0;
        const double g = re * re + im * im;
        mc_sum += g;
        mc_sumsq += g * g;
    }
    const double mc_mean = mc_sum / draws;
    const double mc_var = (mc_sumsq / draws - mc_mean * mc_mean) / draws;
    const double mc_se = std::sqrt(std::max(mc_var, 1e-30));
    CHECK(std::abs(quad_form - mc_mean) <= 3.0 * mc_se);
}

TEST_CASE("fit validates its inputs") {
    RandomStream rng(151, 0);
    Dataset data = oracle::random_instance(10, 1, rng);
    FitConfig cfg;

    SUBCASE("nonpositive lambda") {
        cfg.lambda = 0.0;
        CHECK_THROWS_AS(fit(data, cfg), ConfigError);
    }
    SUBCASE("too few observations") {
        const Dataset tiny = data.subset({0, 1});
        cfg.lambda = 1e-3;
        CHECK_THROWS_AS(fit(tiny, cfg), DataError);
    }
    SUBCASE("collinear X") {
        Dataset bad = data;
        bad.X.conservativeResize(10, 2);
        bad.X.col(1) = 2.0 * bad.X.col(0);
        cfg.lambda = 1e-3;
        CHECK_THROWS_AS(fit(bad, cfg), NumericError);
    }
    SUBCASE("zero X column is collinearity too") {
        Dataset bad = data;
        bad.X.conservativeResize(10, 2);
        bad.X.col(1).setZero();
        cfg.lambda = 1e-3;
        CHECK_THROWS_AS(fit(bad, cfg), NumericError);
    }
    SUBCASE("non-finite outcome") {
        Dataset bad = data;
        bad.Y[3] = std::nan("");
        cfg.lambda = 1e-3;
        CHECK_THROWS_AS(fit(bad, cfg), std::invalid_argument);
    }
}

TEST_CASE("intercept column is appended and excluded from conditioning") {
    RandomStream rng(157, 0);
    Dataset data = oracle::random_instance(15, 1, rng);
    data.Y.array() += 5.0;

    FitConfig cfg;
    cfg.lambda = 1e-3;
    cfg.include_intercept = true;
    const Fit f = fit(data, cfg);
    CHECK(f.X.cols() == 2);
    CHECK((f.X.col(1).array() == 1.0).all());
    CHECK(f.beta.size() == 2);
    CHECK_FALSE(f.duplicate_conditioning_rows);

    // F is built from (X, W) only, so turning the intercept off leaves it be.
    FitConfig no_int = cfg;
    no_int.include_intercept = false;
    const Fit g = fit(data, no_int);
    CHECK((f.F - g.F).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("conditioning WOnly drops the covariates from F") {
    RandomStream rng(163, 0);
    Dataset data = oracle::random_instance(12, 1, rng);
    FitConfig cfg;
    cfg.lambda = 1e-3;
    cfg.conditioning = Conditioning::WOnly;
    const Fit f = fit(data, cfg);

    FitConfig cfg_xw = cfg;
    cfg_xw.conditioning = Conditioning::XandW;
    const Fit g = fit(data, cfg_xw);
    CHECK((f.F - g.F).cwiseAbs().maxCoeff() > 1e-6);

    // With no X at all the two modes coincide.
    Dataset no_x = data;
    no_x.X.resize(12, 0);
    const Fit a = fit(no_x, cfg);
    const Fit b = fit(no_x, cfg_xw);
    CHECK((a.F - b.F).cwiseAbs().maxCoeff() == 0.0);
    CHECK(a.alpha.isApprox(b.alpha, 1e-14));
}

TEST_CASE("duplicate treatment values are flagged but still solvable") {
    Dataset data;
    data.Z.resize(6);
    data.Z << 0.0, 0.0, 1.0, 2.0, 3.0, 4.0;
    data.Y.resize(6);
    data.Y << 0.1, 0.2, 1.0, 2.1, 2.9, 4.2;
    data.W.resize(6, 1);
    data.W << 0.1, -0.1, 1.1, 1.9, 3.2, 3.8;
    data.X.resize(6, 0);

    FitConfig cfg;
    cfg.lambda = 1e-4;
    const Fit f = fit(data, cfg);
    CHECK(f.duplicate_z);
    CHECK(f.solver_rank_deficient);
    CHECK(std::isfinite(ame(f)));
    CHECK(f.foc_residual <= 1e-8 * f.foc_rhs_norm);
}
