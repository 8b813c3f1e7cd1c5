#pragma once

// Test-only oracles, independent of the library's solve path: a black-box
// conjugate-gradient minimizer with finite-difference gradients, and the
// penalized objective rebuilt from first principles with explicit loops.

#include "plriv/estimator.hpp"
#include "plriv/kernels.hpp"
#include "plriv/numerics.hpp"
#include "plriv/weighting.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

// Polak-Ribiere conjugate gradient with central-difference gradients and an
// exact line search (the targets are convex quadratics).
inline Eigen::VectorXd minimize_quadratic(
    const std::function<double(const Eigen::VectorXd&)>& f, Eigen::VectorXd x,
    int max_iter = 400) {
    const auto dim = x.size();
    const double h = 1e-5;

    const auto gradient = [&](const Eigen::VectorXd& at) {
        Eigen::VectorXd g(dim);
        Eigen::VectorXd probe = at;
        for (Eigen::Index i = 0; i < dim; ++i) {
            probe[i] = at[i] + h;
            const double up = f(probe);
            probe[i] = at[i] - h;
            const double down = f(probe);
            probe[i] = at[i];
            g[i] = (up - down) / (2.0 * h);
        }
        return g;
    };

    Eigen::VectorXd g = gradient(x);
    Eigen::VectorXd dir = -g;
    double fx = f(x);
    int stall = 0;
    for (int it = 0; it < max_iter; ++it) {
        if (dir.norm() < 1e-14) break;
        // phi(t) = f(x + t dir) is quadratic in t.
        const double f_plus = f(x + dir);
        const double f_minus = f(x - dir);
        const double a = 0.5 * (f_plus + f_minus) - fx;
        const double b = 0.5 * (f_plus - f_minus);
        if (!(a > 0.0)) break;  // flat or noise-dominated direction
        const double t = -b / (2.0 * a);
        x += t * dir;
        const double fx_new = f(x);
        if (fx - fx_new < 1e-17 * (1.0 + std::abs(fx))) {
            if (++stall >= 3) break;
        } else {
            stall = 0;
        }
        fx = fx_new;

        const Eigen::VectorXd g_new = gradient(x);
        double beta = g_new.dot(g_new - g) / g.dot(g);
        if (!(beta > 0.0) || (it + 1) % static_cast<int>(dim + 1) == 0) beta = 0.0;
        dir = -g_new + beta * dir;
        g = g_new;
    }
    return x;
}

// (1/n^2) sum_ij r_i F_ij r_j + lambda a' K a with every piece recomputed by
// explicit loops over kernel_value/charfn_value; no standardization and no
// intercept, so run it against fits configured the same way.
inline double penalized_objective(const plriv::Dataset& data,
                                  const plriv::KernelSpec& kernel,
                                  const plriv::MuSpec& mu, double lambda,
                                  const Eigen::VectorXd& alpha,
                                  const Eigen::VectorXd& beta) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const Eigen::Index q = p + data.m();

    Eigen::VectorXd resid(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double hz = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            hz += alpha[j] * plriv::kernel_value(kernel, data.Z[i], data.Z[j]);
        }
        double xb = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) xb += data.X(i, j) * beta[j];
        resid[i] = data.Y[i] - xb - hz;
    }

    double quad = 0.0;
    Eigen::VectorXd diff(q);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            for (Eigen::Index c = 0; c < p; ++c) diff[c] = data.X(i, c) - data.X(j, c);
            for (Eigen::Index c = 0; c < data.m(); ++c) {
                diff[p + c] = data.W(i, c) - data.W(j, c);
            }
            quad += resid[i] * plriv::charfn_value(mu, diff) * resid[j];
        }
    }
    quad /= static_cast<double>(n) * static_cast<double>(n);

    double penalty = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            penalty += alpha[i] * plriv::kernel_value(kernel, data.Z[i], data.Z[j]) *
                       alpha[j];
        }
    }
    return quad + lambda * penalty;
}

struct OracleSolution {
    Eigen::VectorXd alpha;
    Eigen::VectorXd beta;
    Eigen::VectorXd h_values;  // h(Z_i)
    double theta = 0.0;
};

// Minimizes the representer-form objective directly over (alpha, beta).
inline OracleSolution solve_by_optimizer(const plriv::Dataset& data,
                                         const plriv::KernelSpec& kernel,
                                         const plriv::MuSpec& mu, double lambda) {
    const Eigen::Index n = data.n();
    const Eigen::Index p = data.p();
    const auto objective = [&](const Eigen::VectorXd& theta_vec) {
        return penalized_objective(data, kernel, mu, lambda, theta_vec.head(n),
                                   theta_vec.tail(p));
    };
    const Eigen::VectorXd sol =
        minimize_quadratic(objective, Eigen::VectorXd::Zero(n + p));

    OracleSolution out;
    out.alpha = sol.head(n);
    out.beta = sol.tail(p);
    out.h_values.resize(n);
    double theta_acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double hz = 0.0;
        double dz = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            hz += out.alpha[j] * plriv::kernel_value(kernel, data.Z[i], data.Z[j]);
            dz += out.alpha[j] * plriv::kernel_deriv(kernel, data.Z[i], data.Z[j]);
        }
        out.h_values[i] = hz;
        theta_acc += dz;
    }
    out.theta = theta_acc / static_cast<double>(n);
    return out;
}

// Random test instances: standard-normal Z, W, X columns and a noisy outcome.
inline plriv::Dataset random_instance(Eigen::Index n, Eigen::Index p,
                                      plriv::RandomStream& rng) {
    plriv::Dataset data;
    data.Z.resize(n);
    data.Y.resize(n);
    data.W.resize(n, 1);
    data.X.resize(n, p);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double w = rng.normal();
        data.W(i, 0) = w;
        data.Z[i] = 0.8 * w + 0.6 * rng.normal();
        double xb = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            data.X(i, j) = rng.normal();
            xb += data.X(i, j);
        }
        data.Y[i] = data.Z[i] * data.Z[i] / std::numbers::sqrt2 + xb + rng.normal();
    }
    return data;
}

}  // namespace oracle
