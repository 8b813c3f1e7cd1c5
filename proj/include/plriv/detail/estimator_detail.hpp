#pragma once

#include "plriv/estimator.hpp"

#include <Eigen/Dense>

#include <vector>

// Internal assembly shared by the fit, objective, and bootstrap paths.
// Not part of the public API surface.
namespace plriv::detail {

struct ConditioningParts {
    Eigen::MatrixXd F;
    std::vector<Transform> v_transforms;
    bool duplicate_rows = false;
};

/// Builds the weighting matrix F from the conditioning columns selected by
/// cfg (standardized when the config asks for it).
ConditioningParts assemble_conditioning(const Dataset& data, const FitConfig& cfg);

struct Assembled {
    Eigen::VectorXd z_std;
    Transform z_transform;
    std::vector<Transform> v_transforms;
    GramPair gram;
    Eigen::MatrixXd F;
    Eigen::MatrixXd X;  // effective (intercept appended)
    bool duplicate_conditioning_rows = false;
};

Assembled assemble(const Dataset& data, const FitConfig& cfg);

/// Effective design matrix: X plus a ones column when the intercept is on.
Eigen::MatrixXd effective_X(const Dataset& data, const FitConfig& cfg);

struct SolveState {
    SolveReport report;
    double rhs_norm = 0.0;
};

/// F - F X (X'FX)^{-1} X' F; plain F when X has no columns.
Eigen::MatrixXd projected_weighting(const Eigen::MatrixXd& F, const Eigen::MatrixXd& X);

/// (X'FX)^{-1} X'F r for the beta back-substitution.
Eigen::VectorXd solve_beta(const Eigen::MatrixXd& F, const Eigen::MatrixXd& X,
                           const Eigen::VectorXd& residual_target);

/// Minimum-norm solve of (K M K + n^2 lambda K) alpha = K M Y.
SolveState solve_alpha(const Eigen::MatrixXd& K, const Eigen::MatrixXd& M,
                       const Eigen::VectorXd& Y, Eigen::Index n, double lambda);

}  // namespace plriv::detail
