#pragma once

#include <Eigen/Dense>

namespace plriv {

enum class MuFamily { LaplaceProduct, GaussianProduct };

/// Weighting measure mu on R^q, a product of independent mean-zero
/// unit-variance marginals so its characteristic function stays real,
/// symmetric, and in closed form.
struct MuSpec {
    MuFamily family = MuFamily::LaplaceProduct;
};

/// Characteristic function of mu evaluated at v.
/// LaplaceProduct: prod_k 1/(1 + v_k^2/2); GaussianProduct: prod_k exp(-v_k^2/2).
double charfn_value(const MuSpec& spec, const Eigen::VectorXd& v);

/// Rows of the variables entering the exogeneity condition, one per
/// observation; F is built from pairwise row differences.
struct ConditioningMatrix {
    Eigen::MatrixXd V;
    bool has_duplicate_rows = false;
};

/// Flags duplicated rows within 1e-12 (max-norm of the row difference).
ConditioningMatrix make_conditioning(Eigen::MatrixXd V);

/// F[i][j] = charfn(V_i - V_j); symmetric with unit diagonal, positive
/// definite when the rows are distinct.
Eigen::MatrixXd build_F(const MuSpec& spec, const ConditioningMatrix& cond);

/// Bootstrap reweighting F_b[i][j] = F[i][j] * xi_i * xi_j / mean(xi)^2.
Eigen::MatrixXd scale_F_bootstrap(const Eigen::MatrixXd& F, const Eigen::VectorXd& xi);

}  // namespace plriv
