#include "plriv/inference.hpp"

#include "plriv/detail/estimator_detail.hpp"
#include "plriv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

namespace plriv {

Eigen::VectorXd draw_weights(const BootstrapConfig& bcfg, Eigen::Index n,
                             RandomStream& stream) {
    Eigen::VectorXd xi(n);
    switch (bcfg.weight_family) {
        case WeightFamily::ExponentialUnitMean:
            for (Eigen::Index i = 0; i < n; ++i) xi[i] = stream.exponential();
            return xi;
    }
    throw std::invalid_argument("draw_weights: unknown weight family");
}

namespace {

// Solves the reweighted system at fixed lambda and returns the weighted AME.
double weighted_theta(const Eigen::MatrixXd& K, const Eigen::MatrixXd& D,
                      const Eigen::MatrixXd& F, const Eigen::MatrixXd& X,
                      const Eigen::VectorXd& Y, double lambda, double z_scale,
                      const Eigen::VectorXd& xi) {
    if (D.size() == 0) {
        throw std::domain_error("bootstrap: kernel has no derivative");
    }
    const Eigen::Index n = Y.size();
    const Eigen::MatrixXd Fb = scale_F_bootstrap(F, xi);
    const Eigen::MatrixXd M = detail::projected_weighting(Fb, X);
    const detail::SolveState s = detail::solve_alpha(K, M, Y, n, lambda);
    const Eigen::VectorXd w = xi / xi.mean();
    return w.cwiseProduct(D * s.report.solution).mean() / z_scale;
}

double reselect_lambda_for_draw(const Dataset& data, const FitConfig& cfg,
                                const BootstrapConfig& bcfg,
                                const Eigen::VectorXd& xi, RandomStream& stream);

}  // namespace

double bootstrap_theta(const Fit& f, const Eigen::VectorXd& xi) {
    if (xi.size() != f.n()) {
        throw std::invalid_argument("bootstrap_theta: weight length mismatch");
    }
    return weighted_theta(f.gram.K, f.gram.D, f.F, f.X, f.Y, f.lambda,
                          f.z_transform.scale, xi);
}

double bootstrap_draw(const Dataset& data, const FitConfig& cfg,
                      const Eigen::VectorXd& xi) {
    detail::Assembled a = detail::assemble(data, cfg);
    return weighted_theta(a.gram.K, a.gram.D, a.F, a.X, data.Y, cfg.lambda,
                          a.z_transform.scale, xi);
}

std::vector<double> bootstrap_draws(const Dataset& data, const Fit& f,
                                    const FitConfig& cfg, const BootstrapConfig& bcfg,
                                    int workers) {
    if (bcfg.B < 1) {
        throw ConfigError("bootstrap: B must be positive");
    }
    std::vector<double> draws(static_cast<std::size_t>(bcfg.B));
    const auto run_one = [&](int b) {
        RandomStream stream(bcfg.seed, static_cast<std::uint64_t>(b));
        const Eigen::VectorXd xi = draw_weights(bcfg, f.n(), stream);
        if (bcfg.reselect_lambda) {
            FitConfig draw_cfg = cfg;
            draw_cfg.lambda = reselect_lambda_for_draw(data, cfg, bcfg, xi, stream);
            draws[static_cast<std::size_t>(b - 1)] = bootstrap_draw(data, draw_cfg, xi);
        } else {
            draws[static_cast<std::size_t>(b - 1)] = bootstrap_theta(f, xi);
        }
    };
    if (workers <= 1) {
        for (int b = 1; b <= bcfg.B; ++b) run_one(b);
    } else {
        std::atomic<int> next{1};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const int b = next.fetch_add(1);
                    if (b > bcfg.B) break;
                    run_one(b);
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return draws;
}

TestResult summarize_test(double theta_hat, Eigen::Index n,
                          std::vector<double> draws, double theta_H0,
                          const BootstrapConfig& bcfg) {
    if (draws.empty()) {
        throw std::invalid_argument("summarize_test: no draws");
    }
    TestResult out;
    out.theta_hat = theta_hat;
    out.theta_H0 = theta_H0;
    out.level = bcfg.level;
    out.unreliable_B = static_cast<int>(draws.size()) < 20;

    const double B = static_cast<double>(draws.size());
    std::vector<double> abs_dev(draws.size());
    std::size_t count_geq = 0;
    const double stat = std::abs(theta_hat - theta_H0);
    for (std::size_t i = 0; i < draws.size(); ++i) {
        abs_dev[i] = std::abs(draws[i] - theta_hat);
        if (abs_dev[i] >= stat) ++count_geq;
    }
    out.q_hat = empirical_quantile(abs_dev, 1.0 - bcfg.level);
    out.c_hat = std::sqrt(static_cast<double>(n)) * out.q_hat;
    out.reject = stat > out.q_hat;
    out.p_value = static_cast<double>(count_geq) / B;
    out.ci = Interval{theta_hat - out.q_hat, theta_hat + out.q_hat};

    if (bcfg.equal_tail) {
        out.equal_tail = true;
        std::vector<double> dev(draws.size());
        std::size_t count_le = 0;
        std::size_t count_ge = 0;
        const double s = theta_hat - theta_H0;
        for (std::size_t i = 0; i < draws.size(); ++i) {
            dev[i] = draws[i] - theta_hat;
            if (dev[i] <= s) ++count_le;
            if (dev[i] >= s) ++count_ge;
        }
        const double q_lo = empirical_quantile(dev, 0.5 * bcfg.level);
        const double q_hi = empirical_quantile(dev, 1.0 - 0.5 * bcfg.level);
        out.et_ci = Interval{theta_hat - q_hi, theta_hat - q_lo};
        out.et_reject = s < q_lo || s > q_hi;
        out.et_p_value =
            std::min(1.0, 2.0 * static_cast<double>(std::min(count_le, count_ge)) / B);
    }

    out.draws = std::move(draws);
    return out;
}

TestResult test(const Dataset& data, const FitConfig& cfg,
                const BootstrapConfig& bcfg, double theta_H0) {
    const Fit f = fit(data, cfg);
    std::vector<double> draws = bootstrap_draws(data, f, cfg, bcfg);
    return summarize_test(ame(f), f.n(), std::move(draws), theta_H0, bcfg);
}

Interval confidence_interval(double theta_hat, const std::vector<double>& draws,
                             double level) {
    std::vector<double> abs_dev(draws.size());
    for (std::size_t i = 0; i < draws.size(); ++i) {
        abs_dev[i] = std::abs(draws[i] - theta_hat);
    }
    const double q = empirical_quantile(abs_dev, 1.0 - level);
    return Interval{theta_hat - q, theta_hat + q};
}

namespace {

// Experimental: re-run the two-fold criterion with every residual weighted by
// xi_i/mean(xi), i.e. the weighted objective's own cross-validation. Slow by
// construction (full fold fits per grid point).
double reselect_lambda_for_draw(const Dataset& data, const FitConfig& cfg,
                                const BootstrapConfig& bcfg,
                                const Eigen::VectorXd& xi, RandomStream& stream) {
    const LambdaGrid grid =
        bcfg.reselect_grid.values.empty() ? geometric_grid() : bcfg.reselect_grid;
    const FoldSplit split = make_folds(data.n(), stream);
    const detail::ConditioningParts full = detail::assemble_conditioning(data, cfg);
    const Eigen::MatrixXd Fb = scale_F_bootstrap(full.F, xi);

    const auto fold_residuals = [&](const std::vector<Eigen::Index>& in_rows,
                                    const std::vector<Eigen::Index>& out_rows,
                                    double lambda, Eigen::VectorXd& pooled) {
        const Dataset sub = data.subset(in_rows);
        Eigen::VectorXd xi_in(static_cast<Eigen::Index>(in_rows.size()));
        for (std::size_t i = 0; i < in_rows.size(); ++i) {
            xi_in[static_cast<Eigen::Index>(i)] = xi[in_rows[i]];
        }
        FitConfig sub_cfg = cfg;
        sub_cfg.lambda = lambda;
        detail::Assembled a = detail::assemble(sub, sub_cfg);
        const Eigen::MatrixXd Fb_in = scale_F_bootstrap(a.F, xi_in);
        const Eigen::MatrixXd M = detail::projected_weighting(Fb_in, a.X);
        const detail::SolveState s = detail::solve_alpha(a.gram.K, M, sub.Y,
                                                         sub.n(), lambda);
        const Dataset out = data.subset(out_rows);
        Eigen::VectorXd resid = out.Y;
        for (Eigen::Index i = 0; i < out.n(); ++i) {
            const double zs = a.z_transform.apply(out.Z[i]);
            double acc = 0.0;
            for (Eigen::Index j = 0; j < sub.n(); ++j) {
                acc += s.report.solution[j] * kernel_value(cfg.kernel, zs, a.z_std[j]);
            }
            resid[i] -= acc;
        }
        if (a.X.cols() > 0) {
            const Eigen::VectorXd beta = detail::solve_beta(
                Fb_in, a.X, sub.Y - a.gram.K * s.report.solution);
            resid -= detail::effective_X(out, cfg) * beta;
        }
        for (std::size_t i = 0; i < out_rows.size(); ++i) {
            pooled[out_rows[i]] = resid[static_cast<Eigen::Index>(i)];
        }
    };

    const double nn = static_cast<double>(data.n());
    double best = std::numeric_limits<double>::infinity();
    double best_lambda = grid.values.front();
    Eigen::VectorXd pooled(data.n());
    for (double lambda : grid.values) {
        fold_residuals(split.s2, split.s1, lambda, pooled);
        fold_residuals(split.s1, split.s2, lambda, pooled);
        const double crit = pooled.dot(Fb * pooled) / (nn * nn);
        if (std::isfinite(crit) && crit < best) {
            best = crit;
            best_lambda = lambda;
        }
    }
    return best_lambda;
}

}  // namespace

}  // namespace plriv
