#include "plriv/selection.hpp"

#include "plriv/detail/estimator_detail.hpp"
#include "plriv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace plriv {

FoldSplit make_folds(Eigen::Index n, RandomStream& stream) {
    if (n < 4) {
        throw DataError("make_folds: need at least 4 observations");
    }
    const std::vector<std::size_t> perm = stream.permutation(static_cast<std::size_t>(n));
    const std::size_t half = (static_cast<std::size_t>(n) + 1) / 2;  // ceil(n/2)
    FoldSplit split;
    split.s1.reserve(half);
    split.s2.reserve(static_cast<std::size_t>(n) - half);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        auto idx = static_cast<Eigen::Index>(perm[i]);
        (i < half ? split.s1 : split.s2).push_back(idx);
    }
    std::sort(split.s1.begin(), split.s1.end());
    std::sort(split.s2.begin(), split.s2.end());
    return split;
}

LambdaGrid geometric_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi > lo) || count < 1) {
        throw ConfigError("geometric_grid: need 0 < lo < hi and count >= 1");
    }
    LambdaGrid grid;
    grid.values.resize(static_cast<std::size_t>(count));
    if (count == 1) {
        grid.values[0] = lo;
        return grid;
    }
    const double step = std::log(hi / lo) / (count - 1);
    for (int i = 0; i < count; ++i) {
        grid.values[static_cast<std::size_t>(i)] = lo * std::exp(step * i);
    }
    grid.values.back() = hi;
    return grid;
}

namespace {

// Everything about one fold that does not depend on lambda. The per-lambda
// solve is reduced to a diagonal shift: with K = Q L Q' restricted to its
// numerical range and S := L^{1/2} Q'MQ L^{1/2} = U S U', the in-range
// solution of (KMK + n^2 lambda K) alpha = KMY is
//   alpha = Q L^{-1/2} U diag(1/(sigma_i + n^2 lambda)) U' L^{1/2} Q' M Y,
// which stays in the span of K's retained eigenvectors, i.e. the same
// minimum-norm solution the full solver returns.
struct FoldContext {
    Eigen::MatrixXd K;
    Eigen::MatrixXd F;
    Eigen::MatrixXd X;       // effective, in-fold
    Eigen::VectorXd Y;
    Eigen::MatrixXd alpha_basis;   // Q_r L_r^{-1/2} U, n_in x r
    Eigen::VectorXd sigma;         // eigenvalues of S
    Eigen::VectorXd rhs_coefs;     // U' L^{1/2} Q' M Y
    Eigen::MatrixXd K_cross;   // rows: out-of-fold points, cols: in-fold points
    Eigen::MatrixXd X_out;     // effective, out-of-fold
    Eigen::VectorXd Y_out;
    const std::vector<Eigen::Index>* out_rows = nullptr;
    Eigen::Index n_in = 0;
};

FoldContext build_fold_context(const Dataset& full, const FitConfig& cfg,
                               const std::vector<Eigen::Index>& in_rows,
                               const std::vector<Eigen::Index>& out_rows) {
    const Dataset sub = full.subset(in_rows);
    detail::Assembled a = detail::assemble(sub, cfg);

    FoldContext ctx;
    ctx.n_in = sub.n();
    const Eigen::MatrixXd M = detail::projected_weighting(a.F, a.X);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> keig(a.gram.K);
    const double cutoff = 1e-10 * keig.eigenvalues().cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i = 0; i < ctx.n_in; ++i) {
        if (keig.eigenvalues()[i] > cutoff) kept.push_back(i);
    }
    const auto r = static_cast<Eigen::Index>(kept.size());
    Eigen::MatrixXd Q(ctx.n_in, r);
    Eigen::VectorXd sqrt_l(r);
    for (Eigen::Index j = 0; j < r; ++j) {
        Q.col(j) = keig.eigenvectors().col(kept[static_cast<std::size_t>(j)]);
        sqrt_l[j] = std::sqrt(keig.eigenvalues()[kept[static_cast<std::size_t>(j)]]);
    }
    const Eigen::MatrixXd MQ = M * Q;
    const Eigen::MatrixXd S =
        sqrt_l.asDiagonal() * (Q.transpose() * MQ) * sqrt_l.asDiagonal();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> seig(S);
    ctx.sigma = seig.eigenvalues();
    ctx.rhs_coefs = seig.eigenvectors().transpose() *
                    (sqrt_l.asDiagonal() * (MQ.transpose() * sub.Y));
    ctx.alpha_basis =
        Q * sqrt_l.cwiseInverse().asDiagonal() * seig.eigenvectors();

    ctx.K = std::move(a.gram.K);
    ctx.F = std::move(a.F);
    ctx.X = std::move(a.X);
    ctx.Y = sub.Y;

    const Dataset out = full.subset(out_rows);
    ctx.K_cross.resize(out.n(), ctx.n_in);
    for (Eigen::Index i = 0; i < out.n(); ++i) {
        const double zs = a.z_transform.apply(out.Z[i]);
        for (Eigen::Index j = 0; j < ctx.n_in; ++j) {
            ctx.K_cross(i, j) = kernel_value(cfg.kernel, zs, a.z_std[j]);
        }
    }
    ctx.X_out = detail::effective_X(out, cfg);
    ctx.Y_out = out.Y;
    ctx.out_rows = &out_rows;
    return ctx;
}

// Fits the fold at the given lambda and writes its out-of-fold residuals
// into the pooled vector at their original positions.
void fill_out_of_fold_residuals(const FoldContext& ctx, double lambda,
                                Eigen::VectorXd& pooled) {
    const double nn = static_cast<double>(ctx.n_in);
    const Eigen::VectorXd shrink =
        (ctx.sigma.array() + nn * nn * lambda).inverse().matrix();
    const Eigen::VectorXd alpha =
        ctx.alpha_basis * shrink.cwiseProduct(ctx.rhs_coefs);

    Eigen::VectorXd resid = ctx.Y_out - ctx.K_cross * alpha;
    if (ctx.X.cols() > 0) {
        const Eigen::VectorXd beta =
            detail::solve_beta(ctx.F, ctx.X, ctx.Y - ctx.K * alpha);
        resid -= ctx.X_out * beta;
    }
    const auto& rows = *ctx.out_rows;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        pooled[rows[i]] = resid[static_cast<Eigen::Index>(i)];
    }
}

void check_split(const FoldSplit& split, Eigen::Index n) {
    if (split.s1.size() + split.s2.size() != static_cast<std::size_t>(n)) {
        throw std::invalid_argument("cv_criterion: folds do not partition the sample");
    }
}

}  // namespace

double cv_criterion(const Dataset& data, const FitConfig& cfg, const FoldSplit& split) {
    data.validate();
    check_split(split, data.n());
    const detail::ConditioningParts full = detail::assemble_conditioning(data, cfg);

    const FoldContext c1 = build_fold_context(data, cfg, split.s2, split.s1);
    const FoldContext c2 = build_fold_context(data, cfg, split.s1, split.s2);
    Eigen::VectorXd pooled(data.n());
    fill_out_of_fold_residuals(c1, cfg.lambda, pooled);
    fill_out_of_fold_residuals(c2, cfg.lambda, pooled);

    const double nn = static_cast<double>(data.n());
    return pooled.dot(full.F * pooled) / (nn * nn);
}

SelectionResult select_lambda(const Dataset& data, const FitConfig& cfg_template,
                              const LambdaGrid& grid, RandomStream& stream) {
    if (grid.values.empty()) {
        throw ConfigError("select_lambda: empty grid");
    }
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        if (!(grid.values[i] > 0.0) ||
            (i > 0 && !(grid.values[i] > grid.values[i - 1]))) {
            throw ConfigError("select_lambda: grid must be strictly increasing and positive");
        }
    }
    data.validate();

    SelectionResult result;
    result.split = make_folds(data.n(), stream);
    result.grid = grid;
    result.grid.criteria.assign(grid.values.size(),
                                std::numeric_limits<double>::quiet_NaN());

    const detail::ConditioningParts full =
        detail::assemble_conditioning(data, cfg_template);
    const FoldContext c1 = build_fold_context(data, cfg_template,
                                              result.split.s2, result.split.s1);
    const FoldContext c2 = build_fold_context(data, cfg_template,
                                              result.split.s1, result.split.s2);

    const double nn = static_cast<double>(data.n());
    Eigen::VectorXd pooled(data.n());
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_idx = grid.values.size();
    for (std::size_t i = 0; i < grid.values.size(); ++i) {
        const double lambda = grid.values[i];
        fill_out_of_fold_residuals(c1, lambda, pooled);
        fill_out_of_fold_residuals(c2, lambda, pooled);
        const double crit = pooled.dot(full.F * pooled) / (nn * nn);
        result.grid.criteria[i] = crit;
        if (std::isfinite(crit) && crit < best) {
            best = crit;
            best_idx = i;
        }
    }
    if (best_idx == grid.values.size()) {
        throw NumericError("select_lambda: no finite criterion value on the grid");
    }
    result.grid.argmin = best_idx;
    result.lambda = grid.values[best_idx];
    return result;
}

}  // namespace plriv
