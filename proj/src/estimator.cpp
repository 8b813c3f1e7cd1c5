#include "plriv/estimator.hpp"

#include "plriv/detail/estimator_detail.hpp"
#include "plriv/errors.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace plriv {

void Dataset::validate() const {
    const Eigen::Index nn = Y.size();
    if (Z.size() != nn || (X.size() > 0 && X.rows() != nn) || W.rows() != nn) {
        throw std::invalid_argument("Dataset: inconsistent row counts");
    }
    if (W.cols() < 1) {
        throw std::invalid_argument("Dataset: at least one instrument required");
    }
    if (!Y.allFinite() || !Z.allFinite() || !W.allFinite() ||
        (X.size() > 0 && !X.allFinite())) {
        throw std::invalid_argument("Dataset: non-finite entries");
    }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
    Dataset out;
    const auto k = static_cast<Eigen::Index>(rows.size());
    out.Y.resize(k);
    out.Z.resize(k);
    out.X.resize(k, X.cols());
    out.W.resize(k, W.cols());
    for (Eigen::Index i = 0; i < k; ++i) {
        const Eigen::Index r = rows[static_cast<std::size_t>(i)];
        out.Y[i] = Y[r];
        out.Z[i] = Z[r];
        if (X.cols() > 0) out.X.row(i) = X.row(r);
        out.W.row(i) = W.row(r);
    }
    return out;
}

namespace detail {

Eigen::MatrixXd effective_X(const Dataset& data, const FitConfig& cfg) {
    Eigen::MatrixXd X = data.X;
    if (cfg.include_intercept) {
        X.conservativeResize(data.n(), X.cols() + 1);
        X.col(X.cols() - 1).setOnes();
    }
    return X;
}

ConditioningParts assemble_conditioning(const Dataset& data, const FitConfig& cfg) {
    // Conditioning rows: raw X columns (never the intercept) and/or W columns.
    const Eigen::Index n = data.n();
    const Eigen::Index px = (cfg.conditioning == Conditioning::XandW) ? data.p() : 0;
    Eigen::MatrixXd V(n, px + data.m());
    for (Eigen::Index c = 0; c < px; ++c) V.col(c) = data.X.col(c);
    for (Eigen::Index c = 0; c < data.m(); ++c) V.col(px + c) = data.W.col(c);

    ConditioningParts parts;
    parts.v_transforms.assign(static_cast<std::size_t>(V.cols()), Transform{});
    if (cfg.standardize_inputs) {
        for (Eigen::Index c = 0; c < V.cols(); ++c) {
            const Standardized s = standardize(V.col(c));
            V.col(c) = s.values;
            parts.v_transforms[static_cast<std::size_t>(c)] =
                Transform{s.center, s.scale};
        }
    }
    const ConditioningMatrix cond = make_conditioning(std::move(V));
    parts.duplicate_rows = cond.has_duplicate_rows;
    parts.F = build_F(cfg.mu, cond);
    return parts;
}

Assembled assemble(const Dataset& data, const FitConfig& cfg) {
    data.validate();
    const Eigen::Index n = data.n();
    if (n < 3) {
        throw DataError("fit: need at least 3 observations");
    }
    if (!(cfg.lambda > 0.0)) {
        throw ConfigError("fit: lambda must be positive");
    }

    Assembled a;

    a.X = effective_X(data, cfg);
    const Eigen::Index p_eff = a.X.cols();
    if (n < p_eff + 2) {
        throw DataError("fit: need n >= p + 2 observations");
    }
    if (p_eff > 0) {
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a.X);
        qr.setThreshold(1e-10);
        if (qr.rank() < p_eff) {
            throw NumericError("fit: X is rank deficient (collinear columns)");
        }
    }

    if (cfg.standardize_inputs) {
        const Standardized s = standardize(data.Z);
        a.z_std = s.values;
        a.z_transform = Transform{s.center, s.scale};
    } else {
        a.z_std = data.Z;
        a.z_transform = Transform{};
    }
    a.gram = gram(cfg.kernel, a.z_std);

    ConditioningParts parts = assemble_conditioning(data, cfg);
    a.v_transforms = std::move(parts.v_transforms);
    a.duplicate_conditioning_rows = parts.duplicate_rows;
    a.F = std::move(parts.F);
    return a;
}

Eigen::MatrixXd projected_weighting(const Eigen::MatrixXd& F, const Eigen::MatrixXd& X) {
    if (X.cols() == 0) return F;
    const Eigen::MatrixXd FX = F * X;
    const Eigen::MatrixXd C = X.transpose() * FX;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
        throw NumericError("fit: X'FX is not positive definite");
    }
    return F - FX * llt.solve(FX.transpose());
}

Eigen::VectorXd solve_beta(const Eigen::MatrixXd& F, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& residual_target) {
    const Eigen::MatrixXd FX = F * X;
    const Eigen::MatrixXd C = X.transpose() * FX;
    Eigen::LLT<Eigen::MatrixXd> llt(C);
    if (llt.info() != Eigen::Success) {
        throw NumericError("fit: X'FX is not positive definite");
    }
    return llt.solve(FX.transpose() * residual_target);
}

SolveState solve_alpha(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M,
                       const Eigen::VectorXd& Y, Eigen::Index n, double lambda) {
    const Eigen::MatrixXd KM = K * M;
    Eigen::MatrixXd G = KM * K;
    G += (static_cast<double>(n) * static_cast<double>(n) * lambda) * K;
    const Eigen::VectorXd rhs = KM * Y;
    SolveState s;
    s.report = solve_min_norm(0.5 * (G + G.transpose()), rhs);
    s.rhs_norm = rhs.norm();
    return s;
}

}  // namespace detail

Fit fit(const Dataset& data, const FitConfig& cfg) {
    detail::Assembled a = detail::assemble(data, cfg);
    const Eigen::Index n = data.n();

    const Eigen::MatrixXd M = detail::projected_weighting(a.F, a.X);
    detail::SolveState s = detail::solve_alpha(a.gram.K, M, data.Y, n, cfg.lambda);

    Fit f;
    f.alpha = s.report.solution;
    if (a.X.cols() > 0) {
        f.beta = detail::solve_beta(a.F, a.X, data.Y - a.gram.K * f.alpha);
    }
    f.lambda = cfg.lambda;
    f.z_train = data.Z;
    f.z_std = std::move(a.z_std);
    f.z_transform = a.z_transform;
    f.v_transforms = std::move(a.v_transforms);
    f.duplicate_z = a.gram.has_duplicates;
    f.gram = std::move(a.gram);
    f.F = std::move(a.F);
    f.X = std::move(a.X);
    f.Y = data.Y;
    f.kernel = cfg.kernel;
    f.mu = cfg.mu;
    f.conditioning = cfg.conditioning;
    f.include_intercept = cfg.include_intercept;
    f.standardized = cfg.standardize_inputs;
    f.foc_residual = s.report.residual_norm;
    f.foc_rhs_norm = s.rhs_norm;
    f.solver_rank_deficient = s.report.rank_deficient;
    f.solver_effective_rank = s.report.effective_rank;
    f.duplicate_conditioning_rows = a.duplicate_conditioning_rows;
    return f;
}

Eigen::VectorXd predict_h(const Fit& f, const Eigen::VectorXd& z_points) {
    if (!z_points.allFinite()) {
        throw std::invalid_argument("predict_h: non-finite evaluation points");
    }
    Eigen::VectorXd out(z_points.size());
    for (Eigen::Index j = 0; j < z_points.size(); ++j) {
        const double zs = f.z_transform.apply(z_points[j]);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < f.n(); ++i) {
            acc += f.alpha[i] * kernel_value(f.kernel, zs, f.z_std[i]);
        }
        out[j] = acc;
    }
    return out;
}

Eigen::VectorXd predict_h_deriv(const Fit& f, const Eigen::VectorXd& z_points) {
    if (!kernel_has_derivative(f.kernel)) {
        throw std::domain_error("predict_h_deriv: kernel has no derivative");
    }
    if (!z_points.allFinite()) {
        throw std::invalid_argument("predict_h_deriv: non-finite evaluation points");
    }
    Eigen::VectorXd out(z_points.size());
    for (Eigen::Index j = 0; j < z_points.size(); ++j) {
        const double zs = f.z_transform.apply(z_points[j]);
        double acc = 0.0;
        for (Eigen::Index i = 0; i < f.n(); ++i) {
            acc += f.alpha[i] * kernel_deriv(f.kernel, zs, f.z_std[i]);
        }
        out[j] = acc / f.z_transform.scale;
    }
    return out;
}

double ame(const Fit& f) {
    if (f.gram.D.size() == 0) {
        throw std::domain_error("ame: kernel has no derivative");
    }
    return (f.gram.D * f.alpha).mean() / f.z_transform.scale;
}

double objective_value(const Dataset& data, const FitConfig& cfg,
                       const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta) {
    detail::Assembled a = detail::assemble(data, cfg);
    const Eigen::Index n = data.n();
    if (alpha.size() != n || beta.size() != a.X.cols()) {
        throw std::invalid_argument("objective_value: coefficient size mismatch");
    }
    Eigen::VectorXd resid = data.Y - a.gram.K * alpha;
    if (a.X.cols() > 0) resid -= a.X * beta;
    const double nn = static_cast<double>(n);
    return resid.dot(a.F * resid) / (nn * nn) +
           cfg.lambda * alpha.dot(a.gram.K * alpha);
}

}  // namespace plriv
