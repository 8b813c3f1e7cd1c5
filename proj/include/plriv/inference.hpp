#pragma once

#include "plriv/estimator.hpp"
#include "plriv/numerics.hpp"
#include "plriv/selection.hpp"

#include <cstdint>
#include <vector>

namespace plriv {

enum class WeightFamily {
    ExponentialUnitMean,  ///< Exponential(1): positive, E = Var = 1
};

struct BootstrapConfig {
    int B = 499;
    WeightFamily weight_family = WeightFamily::ExponentialUnitMean;
    /// Nominal test level alpha.
    double level = 0.05;
    std::uint64_t seed = 0;
    /// Also compute the equal-tail variant of the test and interval.
    bool equal_tail = false;
    /// Re-select lambda inside every draw with the weight-adjusted two-fold
    /// criterion instead of keeping the original-sample value. Off by default;
    /// kept for experimentation only.
    bool reselect_lambda = false;
    /// Grid used when reselect_lambda is on.
    LambdaGrid reselect_grid{};
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    bool contains(double x) const { return lower <= x && x <= upper; }
};

struct TestResult {
    double theta_hat = 0.0;
    double theta_H0 = 0.0;
    std::vector<double> draws;  ///< bootstrap replicates of theta
    double q_hat = 0.0;         ///< (1-alpha) quantile of |draws - theta_hat|
    double c_hat = 0.0;         ///< sqrt(n) * q_hat, the Wald-scale critical value
    bool reject = false;
    double p_value = 1.0;
    Interval ci{};
    double level = 0.05;
    /// Set when B < 20: the order-statistic quantile is unreliable.
    bool unreliable_B = false;

    bool equal_tail = false;
    Interval et_ci{};
    bool et_reject = false;
    double et_p_value = 1.0;
};

/// i.i.d. positive weights with unit mean and variance.
Eigen::VectorXd draw_weights(const BootstrapConfig& bcfg, Eigen::Index n,
                             RandomStream& stream);

/// One bootstrap replicate of theta for the given weight vector; solves the
/// reweighted system at the same lambda as cfg.
double bootstrap_draw(const Dataset& data, const FitConfig& cfg,
                      const Eigen::VectorXd& xi);

/// Fast path reusing the cached matrices of an existing fit.
double bootstrap_theta(const Fit& f, const Eigen::VectorXd& xi);

/// B bootstrap replicates, one RandomStream per index so the result is
/// identical for any worker count.
std::vector<double> bootstrap_draws(const Dataset& data, const Fit& f,
                                    const FitConfig& cfg, const BootstrapConfig& bcfg,
                                    int workers = 1);

/// Assembles the rejection rule, p-value, and test-inversion interval from
/// precomputed draws.
TestResult summarize_test(double theta_hat, Eigen::Index n,
                          std::vector<double> draws, double theta_H0,
                          const BootstrapConfig& bcfg);

/// Full bootstrap test of H0: theta = theta_H0 (fit is done internally).
TestResult test(const Dataset& data, const FitConfig& cfg,
                const BootstrapConfig& bcfg, double theta_H0);

/// [theta_hat - q, theta_hat + q] with q the (1-level) quantile of
/// |draws - theta_hat|; dual to the rejection rule.
Interval confidence_interval(double theta_hat, const std::vector<double>& draws,
                             double level);

}  // namespace plriv
