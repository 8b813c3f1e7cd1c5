#include "plriv/cli.hpp"

#include "plriv/errors.hpp"
#include "plriv/inference.hpp"
#include "plriv/selection.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

namespace plriv {

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void Report::add(std::string key, std::string value) {
    items.emplace_back(std::move(key), std::move(value));
}
void Report::add(std::string key, const char* value) {
    items.emplace_back(std::move(key), std::string(value));
}
void Report::add(std::string key, double value) {
    items.emplace_back(std::move(key), format_number(value));
}
void Report::add(std::string key, bool value) {
    items.emplace_back(std::move(key), value ? "true" : "false");
}
void Report::add(std::string key, long long value) {
    items.emplace_back(std::move(key), std::to_string(value));
}
void Report::add(std::string key, std::uint64_t value) {
    items.emplace_back(std::move(key), std::to_string(value));
}

std::string Report::to_table() const {
    std::size_t width = 0;
    for (const auto& [k, v] : items) width = std::max(width, k.size());
    std::ostringstream os;
    for (const auto& [k, v] : items) {
        os << k << std::string(width - k.size() + 2, ' ') << v << '\n';
    }
    return os.str();
}

std::string Report::to_csv() const {
    std::ostringstream os;
    os << "key,value\n";
    for (const auto& [k, v] : items) os << k << ',' << v << '\n';
    return os.str();
}

std::string Report::to_report() const {
    std::ostringstream os;
    for (const auto& [k, v] : items) os << k << ": " << v << '\n';
    return os.str();
}

std::string Report::render(const std::string& format) const {
    if (format == "table") return to_table();
    if (format == "csv") return to_csv();
    if (format == "report") return to_report();
    throw ConfigError("unknown output format '" + format + "'");
}

namespace {

std::string kernel_name(const KernelSpec& spec) {
    if (spec.family == KernelFamily::Gaussian) return "gaussian";
    return "sobolev" + std::to_string(spec.sobolev_order);
}

std::string mu_name(const MuSpec& spec) {
    return spec.family == MuFamily::LaplaceProduct ? "laplace" : "gaussian";
}

std::string join(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ';';
        out += names[i];
    }
    return out;
}

std::string level_key(const std::string& base, double level) {
    return base + "[" + format_number(level) + "]";
}

struct Estimated {
    Dataset data;
    std::size_t dropped = 0;
    FitConfig fc{};
    bool lambda_from_cv = false;
    double cv_criterion_at_min = 0.0;
    Fit f{};
    double theta = 0.0;
};

Estimated run_estimate_pipeline(const RunConfig& cfg) {
    Estimated est;
    LoadedCsv loaded = load_csv(cfg.input_path, cfg.columns);
    est.data = std::move(loaded.data);
    est.dropped = loaded.dropped_rows;

    est.fc = cfg.fit;
    if (cfg.lambda) {
        if (!(*cfg.lambda > 0.0)) {
            throw ConfigError("lambda must be positive");
        }
        est.fc.lambda = *cfg.lambda;
    } else {
        RandomStream fold_stream(cfg.seed, 0);
        const LambdaGrid grid = geometric_grid(cfg.grid_min, cfg.grid_max, cfg.grid_count);
        const SelectionResult sel = select_lambda(est.data, est.fc, grid, fold_stream);
        est.fc.lambda = sel.lambda;
        est.lambda_from_cv = true;
        est.cv_criterion_at_min = sel.grid.criteria[sel.grid.argmin];
    }
    est.f = fit(est.data, est.fc);
    est.theta = ame(est.f);
    return est;
}

void add_config_items(Report& rep, const RunConfig& cfg) {
    rep.add("command", cfg.command);
    rep.add("version", PLRIV_VERSION);
    rep.add("input", cfg.input_path);
    rep.add("column_y", cfg.columns.y);
    rep.add("column_z", cfg.columns.z);
    rep.add("columns_x", join(cfg.columns.x));
    rep.add("columns_w", join(cfg.columns.w));
    rep.add("kernel", kernel_name(cfg.fit.kernel));
    if (cfg.fit.kernel.family == KernelFamily::Gaussian) {
        rep.add("length_scale", cfg.fit.kernel.gaussian_length_scale);
    }
    rep.add("mu", mu_name(cfg.fit.mu));
    rep.add("standardize", cfg.fit.standardize_inputs);
    rep.add("intercept", cfg.fit.include_intercept);
    rep.add("conditioning",
            cfg.fit.conditioning == Conditioning::XandW ? "xw" : "w");
    rep.add("seed", cfg.seed);
}

void add_fit_items(Report& rep, const RunConfig& cfg, const Estimated& est) {
    rep.add("n", static_cast<long long>(est.data.n()));
    rep.add("dropped_rows", static_cast<long long>(est.dropped));
    rep.add("lambda", est.fc.lambda);
    rep.add("lambda_source", est.lambda_from_cv ? "cv" : "fixed");
    if (est.lambda_from_cv) {
        rep.add("cv_criterion_min", est.cv_criterion_at_min);
    }
    for (Eigen::Index j = 0; j < est.f.beta.size(); ++j) {
        std::string name;
        if (j < static_cast<Eigen::Index>(cfg.columns.x.size())) {
            name = cfg.columns.x[static_cast<std::size_t>(j)];
        } else {
            name = "intercept";
        }
        rep.add("beta[" + name + "]", est.f.beta[j]);
    }
    rep.add("theta_hat", est.theta);
    rep.add("foc_residual", est.f.foc_residual);
    rep.add("foc_rhs_norm", est.f.foc_rhs_norm);
    rep.add("solver_effective_rank",
            static_cast<long long>(est.f.solver_effective_rank));
    rep.add("solver_rank_deficient", est.f.solver_rank_deficient);
    rep.add("duplicate_z", est.f.duplicate_z);
    rep.add("duplicate_conditioning_rows", est.f.duplicate_conditioning_rows);
}

double elapsed_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
}

Report with_bootstrap(const RunConfig& cfg, bool with_theta0) {
    const auto t0 = std::chrono::steady_clock::now();
    const Estimated est = run_estimate_pipeline(cfg);

    BootstrapConfig bcfg;
    bcfg.B = cfg.B;
    bcfg.seed = cfg.seed;
    bcfg.equal_tail = cfg.equal_tail;
    const std::vector<double> draws =
        bootstrap_draws(est.data, est.f, est.fc, bcfg, cfg.workers);

    Report rep;
    add_config_items(rep, cfg);
    add_fit_items(rep, cfg, est);
    rep.add("B", static_cast<long long>(cfg.B));
    if (with_theta0) rep.add("theta0", cfg.theta0);

    for (double level : cfg.levels) {
        BootstrapConfig level_cfg = bcfg;
        level_cfg.level = level;
        const TestResult res = summarize_test(est.theta, est.data.n(), draws,
                                              cfg.theta0, level_cfg);
        rep.add(level_key("q_hat", level), res.q_hat);
        rep.add(level_key("c_hat", level), res.c_hat);
        rep.add(level_key("ci_lower", level), res.ci.lower);
        rep.add(level_key("ci_upper", level), res.ci.upper);
        if (with_theta0) {
            rep.add(level_key("reject", level), res.reject);
        }
        if (cfg.equal_tail) {
            rep.add(level_key("et_ci_lower", level), res.et_ci.lower);
            rep.add(level_key("et_ci_upper", level), res.et_ci.upper);
            if (with_theta0) rep.add(level_key("et_reject", level), res.et_reject);
        }
        if (res.unreliable_B) {
            rep.add(level_key("warning_small_B", level), true);
        }
    }
    if (with_theta0) {
        BootstrapConfig p_cfg = bcfg;
        const TestResult res =
            summarize_test(est.theta, est.data.n(), draws, cfg.theta0, p_cfg);
        rep.add("p_value", res.p_value);
        if (cfg.equal_tail) rep.add("et_p_value", res.et_p_value);
    }
    rep.add("wall_seconds", elapsed_since(t0));
    return rep;
}

}  // namespace

Report cmd_estimate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const Estimated est = run_estimate_pipeline(cfg);
    Report rep;
    add_config_items(rep, cfg);
    add_fit_items(rep, cfg, est);
    rep.add("wall_seconds", elapsed_since(t0));
    return rep;
}

Report cmd_test(const RunConfig& cfg) { return with_bootstrap(cfg, true); }

Report cmd_ci(const RunConfig& cfg) { return with_bootstrap(cfg, false); }

Report cmd_cv(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const LoadedCsv loaded = load_csv(cfg.input_path, cfg.columns);

    RandomStream fold_stream(cfg.seed, 0);
    const LambdaGrid grid = geometric_grid(cfg.grid_min, cfg.grid_max, cfg.grid_count);
    const SelectionResult sel =
        select_lambda(loaded.data, cfg.fit, grid, fold_stream);

    Report rep;
    add_config_items(rep, cfg);
    rep.add("n", static_cast<long long>(loaded.data.n()));
    rep.add("dropped_rows", static_cast<long long>(loaded.dropped_rows));
    rep.add("grid_size", static_cast<long long>(sel.grid.values.size()));
    for (std::size_t i = 0; i < sel.grid.values.size(); ++i) {
        rep.add("criterion[" + format_number(sel.grid.values[i]) + "]",
                sel.grid.criteria[i]);
    }
    rep.add("lambda_selected", sel.lambda);
    rep.add("criterion_min", sel.grid.criteria[sel.grid.argmin]);
    rep.add("wall_seconds", elapsed_since(t0));
    return rep;
}

Report cmd_simulate(const RunConfig& cfg) {
    if (cfg.out_path.empty()) {
        throw ConfigError("simulate requires --out for the CSV artifact");
    }
    SimConfig sim;
    sim.dgp = cfg.dgp;
    sim.levels = cfg.levels;
    sim.replications = cfg.replications;
    sim.seed = cfg.seed;
    sim.fit_template = cfg.fit;
    sim.lambda_grid = geometric_grid(cfg.grid_min, cfg.grid_max, cfg.grid_count);
    sim.warp_speed = cfg.warp_speed;
    sim.bootstrap_B = cfg.bootstrap_B;
    sim.workers = cfg.workers;

    Report rep;
    add_config_items(rep, cfg);
    rep.add("design", design_name(cfg.dgp.design));
    rep.add("h0", h0_name(cfg.dgp.h0));
    rep.add("rho_eps_v", cfg.dgp.rho_eps_v);
    rep.add("rho_zw", cfg.dgp.rho_zw);
    rep.add("n_per_replication", static_cast<long long>(cfg.dgp.n));
    rep.add("replications", static_cast<long long>(cfg.replications));
    rep.add("warp_speed", cfg.warp_speed);
    rep.add("theta0", true_ame(cfg.dgp.h0));

    std::ofstream out(cfg.out_path);
    if (!out) {
        throw DataError("simulate: cannot open output file '" + cfg.out_path + "'");
    }

    SimReport result;
    if (cfg.sim_kind == "size") {
        result = run_size_experiment(sim);
        write_size_csv(out, result);
        for (const SizeRow& row : result.size_rows) {
            rep.add(level_key("rate", row.level), row.rate);
            rep.add(level_key("rate_2sls", row.level), row.rate_2sls);
        }
    } else if (cfg.sim_kind == "power") {
        result = run_power_curve(sim, cfg.gamma_grid);
        write_power_csv(out, result);
        for (const PowerRow& row : result.power_rows) {
            const std::string suffix =
                "[" + format_number(row.gamma) + "," + format_number(row.level) + "]";
            rep.add("rate" + suffix, row.rate);
        }
    } else {
        throw ConfigError("simulate: mode must be 'size' or 'power'");
    }
    rep.add("csv_out", cfg.out_path);
    rep.add("wall_seconds", result.wall_seconds);
    return rep;
}

namespace {

void emit(const RunConfig& cfg, const Report& rep) {
    const std::string text = rep.render(cfg.format);
    // simulate writes its CSV artifact to --out; the report goes to stdout.
    if (!cfg.out_path.empty() && cfg.command != "simulate") {
        std::ofstream out(cfg.out_path);
        if (!out) {
            throw DataError("cannot open output file '" + cfg.out_path + "'");
        }
        out << text;
    } else {
        std::cout << text;
    }
}

void add_io_options(CLI::App* sub, RunConfig& cfg, bool needs_input) {
    auto* input = sub->add_option("--input", cfg.input_path, "CSV input file");
    auto* y = sub->add_option("--y", cfg.columns.y, "outcome column");
    auto* z = sub->add_option("--z", cfg.columns.z, "treatment column");
    if (needs_input) {
        input->required();
        y->required();
        z->required();
        sub->add_option("--w", cfg.columns.w, "instrument columns (comma list)")
            ->delimiter(',')
            ->required();
    } else {
        sub->add_option("--w", cfg.columns.w, "instrument columns (comma list)")
            ->delimiter(',');
    }
    sub->add_option("--x", cfg.columns.x, "covariate columns (comma list)")
        ->delimiter(',');
    sub->add_option("--out", cfg.out_path, "output file (default stdout)");
    sub->add_option("--format", cfg.format, "table | csv | report")
        ->check(CLI::IsMember({"table", "csv", "report"}));
}

void add_model_options(CLI::App* sub, RunConfig& cfg, std::string& kernel,
                       std::string& mu, std::string& standardize,
                       std::string& intercept, std::string& conditioning,
                       std::vector<double>& lambda_grid) {
    sub->add_option("--kernel", kernel, "gaussian | sobolev1 | sobolev2")
        ->check(CLI::IsMember({"gaussian", "sobolev1", "sobolev2"}));
    sub->add_option("--length-scale", cfg.fit.kernel.gaussian_length_scale,
                    "Gaussian kernel length scale");
    sub->add_option("--mu", mu, "weighting measure: laplace | gaussian")
        ->check(CLI::IsMember({"laplace", "gaussian"}));
    sub->add_option("--standardize", standardize, "on | off")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--intercept", intercept, "on | off")
        ->check(CLI::IsMember({"on", "off"}));
    sub->add_option("--conditioning", conditioning,
                    "xw (covariates and instruments) | w (instruments only)")
        ->check(CLI::IsMember({"xw", "w"}));
    sub->add_option("--lambda", cfg.lambda, "fixed penalty (skips CV)");
    sub->add_option("--lambda-grid", lambda_grid,
                    "CV grid as min,max,count (default 1e-8,10,30)")
        ->delimiter(',')
        ->expected(3);
    sub->add_option("--seed", cfg.seed, "random seed");
    sub->add_option("--workers", cfg.workers, "parallel workers");
}

void apply_string_options(RunConfig& cfg, const std::string& kernel,
                          const std::string& mu, const std::string& standardize,
                          const std::string& intercept,
                          const std::string& conditioning,
                          const std::vector<double>& lambda_grid) {
    if (kernel == "gaussian") {
        cfg.fit.kernel.family = KernelFamily::Gaussian;
    } else if (kernel == "sobolev1" || kernel == "sobolev2") {
        cfg.fit.kernel.family = KernelFamily::Sobolev;
        cfg.fit.kernel.sobolev_order = kernel == "sobolev1" ? 1 : 2;
    }
    cfg.fit.mu.family =
        mu == "gaussian" ? MuFamily::GaussianProduct : MuFamily::LaplaceProduct;
    cfg.fit.standardize_inputs = standardize != "off";
    cfg.fit.include_intercept = intercept == "on";
    cfg.fit.conditioning =
        conditioning == "w" ? Conditioning::WOnly : Conditioning::XandW;
    if (!lambda_grid.empty()) {
        cfg.grid_min = lambda_grid[0];
        cfg.grid_max = lambda_grid[1];
        const double count = lambda_grid[2];
        if (!(count >= 1.0) || count != std::floor(count)) {
            throw ConfigError("--lambda-grid count must be a positive integer");
        }
        cfg.grid_count = static_cast<int>(count);
    }
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"One-step RKHS estimation and bootstrap inference for the "
                 "average marginal effect of an endogenous treatment"};
    app.require_subcommand(1);

    RunConfig cfg;
    std::string kernel = "gaussian";
    std::string mu = "laplace";
    std::string standardize_s = "on";
    std::string intercept_s = "off";
    std::string conditioning_s = "xw";
    std::vector<double> lambda_grid;
    std::string design_s = "nonparametric";
    std::string h0_s = "quadratic";
    bool full_bootstrap = false;

    auto* est = app.add_subcommand("estimate", "point estimate of the AME");
    auto* tst = app.add_subcommand("test", "bootstrap test of H0: theta = theta0");
    auto* ci = app.add_subcommand("ci", "test-inversion confidence intervals");
    auto* cv = app.add_subcommand("cv", "cross-validated lambda diagnostics");
    auto* sim = app.add_subcommand("simulate", "Monte Carlo size/power experiments");

    for (CLI::App* sub : {est, tst, ci, cv}) {
        add_io_options(sub, cfg, true);
        add_model_options(sub, cfg, kernel, mu, standardize_s, intercept_s,
                          conditioning_s, lambda_grid);
    }
    for (CLI::App* sub : {tst, ci}) {
        sub->add_option("--B", cfg.B, "bootstrap replications");
        sub->add_option("--alpha", cfg.levels, "test levels (comma list)")
            ->delimiter(',');
        sub->add_flag("--equal-tail", cfg.equal_tail,
                      "also report the equal-tail variant");
    }
    tst->add_option("--theta0", cfg.theta0, "tested AME value")->required();

    add_io_options(sim, cfg, false);
    add_model_options(sim, cfg, kernel, mu, standardize_s, intercept_s,
                      conditioning_s, lambda_grid);
    sim->add_option("--mode", cfg.sim_kind, "size | power")
        ->check(CLI::IsMember({"size", "power"}));
    sim->add_option("--design", design_s, "nonparametric | partially-linear")
        ->check(CLI::IsMember({"nonparametric", "partially-linear"}));
    sim->add_option("--h0", h0_s, "quadratic | nonpolynomial")
        ->check(CLI::IsMember({"quadratic", "nonpolynomial"}));
    sim->add_option("--rho-ev", cfg.dgp.rho_eps_v, "endogeneity level");
    sim->add_option("--rho-zw", cfg.dgp.rho_zw, "instrument strength");
    sim->add_option("--n", cfg.dgp.n, "sample size per replication");
    sim->add_option("--beta-x", cfg.dgp.beta_x, "slope on X (partially linear)");
    sim->add_option("--corr-xw", cfg.dgp.corr_xw, "corr(X, W) (partially linear)");
    sim->add_option("--reps", cfg.replications, "Monte Carlo replications");
    sim->add_option("--alpha", cfg.levels, "levels (comma list)")->delimiter(',');
    sim->add_option("--gamma", cfg.gamma_grid, "power deviations (comma list)")
        ->delimiter(',');
    sim->add_flag("--full-bootstrap", full_bootstrap,
                  "full bootstrap per replication instead of warp speed");
    sim->add_option("--boot-B", cfg.bootstrap_B,
                    "bootstrap size per replication (with --full-bootstrap)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        apply_string_options(cfg, kernel, mu, standardize_s, intercept_s,
                             conditioning_s, lambda_grid);
        cfg.warp_speed = !full_bootstrap;
        cfg.dgp.design = design_s == "partially-linear" ? Design::PartiallyLinear
                                                        : Design::FullyNonparametric;
        cfg.dgp.h0 = h0_s == "nonpolynomial" ? H0Variant::NonPolynomial
                                             : H0Variant::Quadratic;

        Report rep;
        if (est->parsed()) {
            cfg.command = "estimate";
            rep = cmd_estimate(cfg);
        } else if (tst->parsed()) {
            cfg.command = "test";
            rep = cmd_test(cfg);
        } else if (ci->parsed()) {
            cfg.command = "ci";
            rep = cmd_ci(cfg);
        } else if (cv->parsed()) {
            cfg.command = "cv";
            rep = cmd_cv(cfg);
        } else {
            cfg.command = "simulate";
            rep = cmd_simulate(cfg);
        }
        emit(cfg, rep);
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 4;
    }
}

}  // namespace plriv
