#pragma once

#include "plriv/kernels.hpp"
#include "plriv/numerics.hpp"
#include "plriv/weighting.hpp"

#include <Eigen/Dense>

#include <vector>

namespace plriv {

/// One i.i.d. sample of the partially linear IV model
/// Y = h(Z) + X'beta + eps with E[eps | W, X] = 0.
struct Dataset {
    Eigen::VectorXd Y;  ///< outcome, length n
    Eigen::VectorXd Z;  ///< endogenous scalar treatment, length n
    Eigen::MatrixXd X;  ///< exogenous covariates, n x p (p may be 0)
    Eigen::MatrixXd W;  ///< instruments, n x m (m >= 1)

    Eigen::Index n() const { return Y.size(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index m() const { return W.cols(); }

    /// Checks finiteness and consistent row counts; throws on violation.
    void validate() const;

    /// Row subset in the given order (used by cross-validation folds).
    Dataset subset(const std::vector<Eigen::Index>& rows) const;
};

/// Which variables enter the exogeneity weighting matrix F.
enum class Conditioning {
    XandW,  ///< default: rows (X_i', W_i')
    WOnly,  ///< instruments only; used when endogenous regressors sit in X
};

struct FitConfig {
    KernelSpec kernel{};
    MuSpec mu{};
    double lambda = 1e-4;
    /// Standardize Z for the kernel and the conditioning columns for F;
    /// derivatives are mapped back to original units by the chain rule.
    bool standardize_inputs = true;
    Conditioning conditioning = Conditioning::XandW;
    /// Append a constant column to X. The constant is excluded from the
    /// conditioning rows (a zero difference contributes charfn(0) = 1).
    bool include_intercept = false;
};

/// Affine map applied to a variable before kernel/charfn evaluation.
struct Transform {
    double center = 0.0;
    double scale = 1.0;
    double apply(double x) const { return (x - center) / scale; }
};

/// Solved penalized fit: alpha/beta coefficients plus the cached matrices
/// needed to evaluate h, its derivative, and bootstrap reweightings.
struct Fit {
    Eigen::VectorXd alpha;      ///< representer coefficients, length n
    Eigen::VectorXd beta;       ///< linear coefficients (intercept last if present)
    double lambda = 0.0;

    Eigen::VectorXd z_train;    ///< original-unit treatment values
    Eigen::VectorXd z_std;      ///< transformed treatment values fed to the kernel
    Transform z_transform;
    std::vector<Transform> v_transforms;  ///< per conditioning column

    GramPair gram;              ///< K and D on z_std
    Eigen::MatrixXd F;
    Eigen::MatrixXd X;          ///< effective X (intercept appended if requested)
    Eigen::VectorXd Y;

    KernelSpec kernel{};
    MuSpec mu{};
    Conditioning conditioning = Conditioning::XandW;
    bool include_intercept = false;
    bool standardized = true;

    double foc_residual = 0.0;       ///< norm of the normal-equation residual
    double foc_rhs_norm = 0.0;
    bool solver_rank_deficient = false;
    Eigen::Index solver_effective_rank = 0;
    bool duplicate_z = false;
    bool duplicate_conditioning_rows = false;

    Eigen::Index n() const { return alpha.size(); }
};

/// Solves the penalized one-step program at the given lambda.
Fit fit(const Dataset& data, const FitConfig& cfg);

/// h evaluated at arbitrary points (original units).
Eigen::VectorXd predict_h(const Fit& f, const Eigen::VectorXd& z_points);

/// h' at arbitrary points, in original units (chain rule under standardization).
Eigen::VectorXd predict_h_deriv(const Fit& f, const Eigen::VectorXd& z_points);

/// Average marginal effect: the mean of h' over the training treatment values.
double ame(const Fit& f);

/// Penalized objective (1/n^2)(Y - X beta - K alpha)' F (Y - X beta - K alpha)
/// + lambda alpha' K alpha at arbitrary coefficients; beta must match the
/// effective X implied by cfg (intercept column included when requested).
double objective_value(const Dataset& data, const FitConfig& cfg,
                       const Eigen::VectorXd& alpha, const Eigen::VectorXd& beta);

}  // namespace plriv
