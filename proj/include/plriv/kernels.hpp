#pragma once

#include <Eigen/Dense>

namespace plriv {

enum class KernelFamily { Gaussian, Sobolev };

struct KernelSpec {
    KernelFamily family = KernelFamily::Gaussian;
    /// Gaussian: K(z,u) = exp(-(z-u)^2 / (2 l^2)).
    double gaussian_length_scale = 1.0;
    /// Sobolev smoothness order kappa >= 1; the kernel lives on [0,1].
    int sobolev_order = 1;
};

/// K(z,u). Sobolev inputs must lie in [0,1] (std::domain_error otherwise).
double kernel_value(const KernelSpec& spec, double z, double u);

/// dK(z,u)/dz. Sobolev kappa=1 is not continuously differentiable and throws.
double kernel_deriv(const KernelSpec& spec, double z, double u);

/// False only for Sobolev kappa=1, whose kernel sections have a kink.
bool kernel_has_derivative(const KernelSpec& spec);

/// Gram matrix K[i][j] = K(Z_i, Z_j) together with the derivative Gram
/// D[i][j] = dK(z, Z_j)/dz evaluated at z = Z_i.
struct GramPair {
    Eigen::MatrixXd K;
    /// Empty (0x0) when the kernel has no derivative; fits still work, only
    /// derivative-based quantities are blocked.
    Eigen::MatrixXd D;
    /// Two of the Z_i coincide within 1e-12; the min-norm solver absorbs the
    /// resulting rank deficiency, so this is a warning, not an error.
    bool has_duplicates = false;
};

GramPair gram(const KernelSpec& spec, const Eigen::VectorXd& Z);

}  // namespace plriv
