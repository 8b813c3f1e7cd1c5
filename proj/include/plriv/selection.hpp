#pragma once

#include "plriv/estimator.hpp"
#include "plriv/numerics.hpp"

#include <vector>

namespace plriv {

/// Random half/half partition; |s1| = ceil(n/2).
struct FoldSplit {
    std::vector<Eigen::Index> s1;
    std::vector<Eigen::Index> s2;
};

FoldSplit make_folds(Eigen::Index n, RandomStream& stream);

struct LambdaGrid {
    std::vector<double> values;
    /// Filled by select_lambda, aligned with values.
    std::vector<double> criteria;
    std::size_t argmin = 0;
};

/// Geometrically spaced lambda values spanning under- to over-smoothing.
LambdaGrid geometric_grid(double lo = 1e-8, double hi = 10.0, int count = 30);

/// Two-fold Cramer-von-Mises criterion: fit each fold, evaluate residuals
/// out-of-fold, pool them in original order, and return the quadratic form
/// (1/n^2) r' F r under the full-sample weighting matrix.
double cv_criterion(const Dataset& data, const FitConfig& cfg, const FoldSplit& split);

struct SelectionResult {
    double lambda = 0.0;
    LambdaGrid grid;
    FoldSplit split;
};

/// Evaluates the criterion at every grid value on one shared fold split and
/// returns the minimizer (ties break to the smaller lambda).
SelectionResult select_lambda(const Dataset& data, const FitConfig& cfg_template,
                              const LambdaGrid& grid, RandomStream& stream);

}  // namespace plriv
