#include "plriv/simulation.hpp"

#include "plriv/errors.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace plriv {

namespace {

double shift_coefficient(double rho) {
    return std::sqrt(rho * rho / (1.0 - rho * rho));
}

void check_dgp(const DgpSpec& spec) {
    if (!(spec.rho_eps_v >= 0.0) || !(spec.rho_eps_v < 1.0)) {
        throw ConfigError("DgpSpec: rho_eps_v must lie in [0,1)");
    }
    if (!(spec.rho_zw > 0.0) || !(spec.rho_zw < 1.0)) {
        throw ConfigError("DgpSpec: rho_zw must lie in (0,1)");
    }
    if (spec.n < 4) {
        throw ConfigError("DgpSpec: n too small");
    }
    if (!(std::abs(spec.corr_xw) < 1.0)) {
        throw ConfigError("DgpSpec: corr_xw must lie in (-1,1)");
    }
}

}  // namespace

Dataset draw_sample(const DgpSpec& spec, RandomStream& stream) {
    check_dgp(spec);
    const double a = shift_coefficient(spec.rho_eps_v);
    const double b = shift_coefficient(spec.rho_zw);
    const double za = std::sqrt(1.0 + a * a);
    const double zb = std::sqrt(1.0 + b * b);

    const Eigen::Index n = spec.n;
    Dataset data;
    data.Y.resize(n);
    data.Z.resize(n);
    data.W.resize(n, 1);
    if (spec.design == Design::PartiallyLinear) {
        data.X.resize(n, 1);
        const double cw = spec.corr_xw;
        const double sw = std::sqrt(1.0 - cw * cw);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double n1 = stream.normal();
            const double n2 = stream.normal();
            const double v = stream.normal();
            const double u = stream.normal();
            const double x = n1;
            const double w = cw * n1 + sw * n2;
            const double z = (b * w + v) / zb;
            const double eps = (a * v + u) / za;
            data.X(i, 0) = x;
            data.W(i, 0) = w;
            data.Z[i] = z;
            data.Y[i] = h0_value(spec.h0, z) + spec.beta_x * x + eps;
        }
    } else {
        data.X.resize(n, 0);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = stream.normal();
            const double v = stream.normal();
            const double u = stream.normal();
            const double z = (b * w + v) / zb;
            const double eps = (a * v + u) / za;
            data.W(i, 0) = w;
            data.Z[i] = z;
            data.Y[i] = h0_value(spec.h0, z) + eps;
        }
    }
    return data;
}

double h0_value(H0Variant variant, double z) {
    switch (variant) {
        case H0Variant::Quadratic:
            return z * z / std::numbers::sqrt2;
        case H0Variant::NonPolynomial:
            // sqrt(3*sqrt(3)) * z * exp(-z^2/2); unit variance under N(0,1).
            return std::pow(3.0, 0.75) * z * std::exp(-0.5 * z * z);
    }
    throw std::invalid_argument("h0_value: unknown variant");
}

double h0_deriv(H0Variant variant, double z) {
    switch (variant) {
        case H0Variant::Quadratic:
            return std::numbers::sqrt2 * z;
        case H0Variant::NonPolynomial:
            return std::pow(3.0, 0.75) * (1.0 - z * z) * std::exp(-0.5 * z * z);
    }
    throw std::invalid_argument("h0_deriv: unknown variant");
}

double true_ame(H0Variant variant) {
    switch (variant) {
        case H0Variant::Quadratic:
            return 0.0;
        case H0Variant::NonPolynomial:
            // E[(1 - Z^2) exp(-Z^2/2)] = 1/(2 sqrt(2)) under Z ~ N(0,1).
            return std::pow(3.0, 0.75) / (2.0 * std::numbers::sqrt2);
    }
    throw std::invalid_argument("true_ame: unknown variant");
}

TwoSlsFit two_sls(const Dataset& data) {
    data.validate();
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const Eigen::Index k = 2 + p;  // intercept, Z, X
    if (n < k + 1) {
        throw DataError("two_sls: too few observations");
    }

    Eigen::MatrixXd R(n, k);
    R.col(0).setOnes();
    R.col(1) = data.Z;
    if (p > 0) R.rightCols(p) = data.X;

    Eigen::MatrixXd S(n, 1 + data.m() + p);
    S.col(0).setOnes();
    S.middleCols(1, data.m()) = data.W;
    if (p > 0) S.rightCols(p) = data.X;

    // First stage: project the regressors on the instrument set.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(S);
    const Eigen::MatrixXd Q = qr.householderQ() * Eigen::MatrixXd::Identity(n, S.cols());
    const Eigen::MatrixXd Rhat = Q * (Q.transpose() * R);

    const Eigen::MatrixXd RtR = Rhat.transpose() * Rhat;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(RtR);
    if (ldlt.info() != Eigen::Success) {
        throw NumericError("two_sls: projected design is singular");
    }
    const Eigen::VectorXd coef = ldlt.solve(Rhat.transpose() * data.Y);

    // Heteroskedasticity-robust sandwich; the structural residual is far
    // from homoskedastic when the true treatment function is nonlinear.
    const Eigen::VectorXd resid = data.Y - R * coef;
    const Eigen::MatrixXd meat = Rhat.transpose() *
                                 resid.array().square().matrix().asDiagonal() * Rhat;
    const Eigen::MatrixXd bread = ldlt.solve(Eigen::MatrixXd::Identity(k, k));
    const Eigen::MatrixXd cov = bread * meat * bread;

    TwoSlsFit out;
    out.theta = coef[1];
    out.se = std::sqrt(cov(1, 1));
    return out;
}

namespace {

// Inverse standard normal CDF by bisection on the erfc form; called once per
// level, so speed is irrelevant.
double normal_quantile(double p) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw std::invalid_argument("normal_quantile: p must be in (0,1)");
    }
    double lo = -40.0, hi = 40.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = 0.5 * std::erfc(-mid / std::numbers::sqrt2);
        (cdf < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct RepOutcome {
    double theta_hat = 0.0;
    std::vector<double> abs_boot_dev;  // |theta_b - theta_hat|, 1 or B entries
    double theta_2sls = 0.0;
    double se_2sls = 0.0;
};

RepOutcome one_replication(const SimConfig& cfg, int r) {
    // Per-replication stream, consumed in a fixed order: sample, CV folds,
    // bootstrap weights. Keyed by the replication index so results do not
    // depend on worker scheduling.
    RandomStream stream(cfg.seed, static_cast<std::uint64_t>(r));
    const Dataset data = draw_sample(cfg.dgp, stream);

    const SelectionResult sel =
        select_lambda(data, cfg.fit_template, cfg.lambda_grid, stream);
    FitConfig fc = cfg.fit_template;
    fc.lambda = sel.lambda;
    const Fit f = fit(data, fc);

    RepOutcome out;
    out.theta_hat = ame(f);
    if (cfg.warp_speed) {
        BootstrapConfig bcfg;
        const Eigen::VectorXd xi = draw_weights(bcfg, data.n(), stream);
        out.abs_boot_dev = {std::abs(bootstrap_theta(f, xi) - out.theta_hat)};
    } else {
        BootstrapConfig bcfg;
        bcfg.B = cfg.bootstrap_B;
        bcfg.seed = cfg.seed ^ (0x9e3779b97f4a7c15ull * (static_cast<std::uint64_t>(r) + 1));
        const std::vector<double> draws = bootstrap_draws(data, f, fc, bcfg);
        out.abs_boot_dev.resize(draws.size());
        for (std::size_t i = 0; i < draws.size(); ++i) {
            out.abs_boot_dev[i] = std::abs(draws[i] - out.theta_hat);
        }
    }

    const TwoSlsFit baseline = two_sls(data);
    out.theta_2sls = baseline.theta;
    out.se_2sls = baseline.se;
    return out;
}

std::vector<RepOutcome> run_replications(const SimConfig& cfg) {
    if (cfg.replications < 1) {
        throw ConfigError("simulation: replications must be positive");
    }
    const int R = cfg.replications;
    std::vector<RepOutcome> outcomes(static_cast<std::size_t>(R));
    const int workers = std::max(1, cfg.workers);
    if (workers == 1) {
        for (int r = 0; r < R; ++r) {
            outcomes[static_cast<std::size_t>(r)] = one_replication(cfg, r);
        }
    } else {
        std::atomic<int> next{0};
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        std::atomic<bool> failed{false};
        for (int t = 0; t < workers; ++t) {
            pool.emplace_back([&] {
                for (;;) {
                    const int r = next.fetch_add(1);
                    if (r >= R || failed.load()) break;
                    try {
                        outcomes[static_cast<std::size_t>(r)] = one_replication(cfg, r);
                    } catch (...) {
                        failed.store(true);
                        throw;  // terminates; simulation errors are fatal anyway
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
    }
    return outcomes;
}

double rejection_rate(const std::vector<RepOutcome>& reps, double center,
                      double level, const std::vector<double>* warp_pool) {
    const double pooled_q =
        warp_pool ? empirical_quantile(*warp_pool, 1.0 - level) : 0.0;
    std::size_t rejected = 0;
    for (const RepOutcome& rep : reps) {
        const double q = warp_pool
                             ? pooled_q
                             : empirical_quantile(rep.abs_boot_dev, 1.0 - level);
        if (std::abs(rep.theta_hat - center) > q) ++rejected;
    }
    return static_cast<double>(rejected) / static_cast<double>(reps.size());
}

double rejection_rate_2sls(const std::vector<RepOutcome>& reps, double center,
                           double level) {
    const double crit = normal_quantile(1.0 - 0.5 * level);
    std::size_t rejected = 0;
    for (const RepOutcome& rep : reps) {
        if (std::abs(rep.theta_2sls - center) > crit * rep.se_2sls) ++rejected;
    }
    return static_cast<double>(rejected) / static_cast<double>(reps.size());
}

std::vector<double> pool_warp_deviations(const std::vector<RepOutcome>& reps) {
    std::vector<double> pool;
    pool.reserve(reps.size());
    for (const RepOutcome& rep : reps) {
        pool.push_back(rep.abs_boot_dev.front());
    }
    return pool;
}

void format_double(std::ostream& os, double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    os.write(buf, res.ptr - buf);
}

}  // namespace

SimReport run_size_experiment(const SimConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<RepOutcome> reps = run_replications(cfg);
    const double theta0 = true_ame(cfg.dgp.h0);

    SimReport report;
    report.dgp = cfg.dgp;
    report.replications = cfg.replications;
    report.seed = cfg.seed;
    report.warp_speed = cfg.warp_speed;

    std::vector<double> pool;
    if (cfg.warp_speed) pool = pool_warp_deviations(reps);
    const std::vector<double>* pool_ptr = cfg.warp_speed ? &pool : nullptr;
    for (double level : cfg.levels) {
        SizeRow row;
        row.level = level;
        row.rate = rejection_rate(reps, theta0, level, pool_ptr);
        row.rate_2sls = rejection_rate_2sls(reps, theta0, level);
        report.size_rows.push_back(row);
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

SimReport run_power_curve(const SimConfig& cfg, const std::vector<double>& gammas) {
    if (gammas.empty()) {
        throw ConfigError("run_power_curve: empty gamma grid");
    }
    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<RepOutcome> reps = run_replications(cfg);
    const double theta0 = true_ame(cfg.dgp.h0);
    const double R = static_cast<double>(cfg.replications);

    SimReport report;
    report.dgp = cfg.dgp;
    report.replications = cfg.replications;
    report.seed = cfg.seed;
    report.warp_speed = cfg.warp_speed;

    std::vector<double> pool;
    if (cfg.warp_speed) pool = pool_warp_deviations(reps);
    const std::vector<double>* pool_ptr = cfg.warp_speed ? &pool : nullptr;
    for (double gamma : gammas) {
        for (double level : cfg.levels) {
            PowerRow row;
            row.gamma = gamma;
            row.level = level;
            row.rate = rejection_rate(reps, theta0 + gamma, level, pool_ptr);
            row.mc_stderr = std::sqrt(row.rate * (1.0 - row.rate) / R);
            row.rate_2sls = rejection_rate_2sls(reps, theta0 + gamma, level);
            report.power_rows.push_back(row);
        }
    }
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

std::string design_name(Design d) {
    return d == Design::FullyNonparametric ? "nonparametric" : "partially_linear";
}

std::string h0_name(H0Variant v) {
    return v == H0Variant::Quadratic ? "quadratic" : "nonpolynomial";
}

void write_size_csv(std::ostream& os, const SimReport& report) {
    os << "design,h0,rho_eps_v,n,level,rate,rate_2sls\n";
    for (const SizeRow& row : report.size_rows) {
        os << design_name(report.dgp.design) << ',' << h0_name(report.dgp.h0) << ',';
        format_double(os, report.dgp.rho_eps_v);
        os << ',' << report.dgp.n << ',';
        format_double(os, row.level);
        os << ',';
        format_double(os, row.rate);
        os << ',';
        format_double(os, row.rate_2sls);
        os << '\n';
    }
}

void write_power_csv(std::ostream& os, const SimReport& report) {
    os << "gamma,level,rejection_rate,mc_stderr,rejection_rate_2sls\n";
    for (const PowerRow& row : report.power_rows) {
        format_double(os, row.gamma);
        os << ',';
        format_double(os, row.level);
        os << ',';
        format_double(os, row.rate);
        os << ',';
        format_double(os, row.mc_stderr);
        os << ',';
        format_double(os, row.rate_2sls);
        os << '\n';
    }
}

}  // namespace plriv
