#include "plriv/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace plriv {

namespace {

void check_sobolev_domain(double z, double u) {
    if (z < 0.0 || z > 1.0 || u < 0.0 || u > 1.0) {
        throw std::domain_error("Sobolev kernel requires inputs in [0,1]");
    }
}

double factorial(int k) {
    double f = 1.0;
    for (int i = 2; i <= k; ++i) f *= i;
    return f;
}

template <typename F>
double simpson(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    return (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
}

template <typename F>
double adaptive_simpson(const F& f, double a, double b, double whole, double tol,
                        int depth) {
    const double c = 0.5 * (a + b);
    const double left = simpson(f, a, c);
    const double right = simpson(f, c, b);
    if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
        return left + right + (left + right - whole) / 15.0;
    }
    return adaptive_simpson(f, a, c, left, 0.5 * tol, depth - 1) +
           adaptive_simpson(f, c, b, right, 0.5 * tol, depth - 1);
}

template <typename F>
double integrate(const F& f, double a, double b, double tol) {
    if (b <= a) return 0.0;
    return adaptive_simpson(f, a, b, simpson(f, a, b), tol, 40);
}

// Integral term of the Sobolev kernel: the integrand vanishes for
// t > min(z,u), closed forms below for kappa in {1,2}.
double sobolev_value(int kappa, double z, double u) {
    const double m = std::min(z, u);
    if (kappa == 1) return 1.0 + m;
    if (kappa == 2) {
        return 1.0 + z * u + z * u * m - 0.5 * (z + u) * m * m + m * m * m / 3.0;
    }
    double poly = 0.0;
    for (int j = 0; j < kappa; ++j) {
        const double fj = factorial(j);
        poly += std::pow(z, j) * std::pow(u, j) / (fj * fj);
    }
    const double fk = factorial(kappa - 1);
    const auto integrand = [&](double t) {
        return std::pow(z - t, kappa - 1) * std::pow(u - t, kappa - 1) / (fk * fk);
    };
    return poly + integrate(integrand, 0.0, m, 1e-10);
}

double sobolev_deriv(int kappa, double z, double u) {
    if (kappa < 2) {
        throw std::domain_error(
            "Sobolev kernel with order 1 has no continuous derivative");
    }
    if (kappa == 2) {
        if (z >= u) return u + 0.5 * u * u;
        return u + z * u - 0.5 * z * z;
    }
    double poly = 0.0;
    for (int j = 1; j < kappa; ++j) {
        const double fj = factorial(j);
        poly += j * std::pow(z, j - 1) * std::pow(u, j) / (fj * fj);
    }
    const double fk = factorial(kappa - 1);
    const double m = std::min(z, u);
    const auto integrand = [&](double t) {
        return (kappa - 1) * std::pow(z - t, kappa - 2) * std::pow(u - t, kappa - 1) /
               (fk * fk);
    };
    return poly + integrate(integrand, 0.0, m, 1e-10);
}

}  // namespace

double kernel_value(const KernelSpec& spec, double z, double u) {
    if (!std::isfinite(z) || !std::isfinite(u)) {
        throw std::invalid_argument("kernel_value: non-finite input");
    }
    switch (spec.family) {
        case KernelFamily::Gaussian: {
            const double l = spec.gaussian_length_scale;
            const double d = z - u;
            return std::exp(-d * d / (2.0 * l * l));
        }
        case KernelFamily::Sobolev:
            check_sobolev_domain(z, u);
            return sobolev_value(spec.sobolev_order, z, u);
    }
    throw std::invalid_argument("kernel_value: unknown kernel family");
}

double kernel_deriv(const KernelSpec& spec, double z, double u) {
    if (!std::isfinite(z) || !std::isfinite(u)) {
        throw std::invalid_argument("kernel_deriv: non-finite input");
    }
    switch (spec.family) {
        case KernelFamily::Gaussian: {
            const double l = spec.gaussian_length_scale;
            const double d = z - u;
            return -(d / (l * l)) * std::exp(-d * d / (2.0 * l * l));
        }
        case KernelFamily::Sobolev:
            check_sobolev_domain(z, u);
            return sobolev_deriv(spec.sobolev_order, z, u);
    }
    throw std::invalid_argument("kernel_deriv: unknown kernel family");
}

bool kernel_has_derivative(const KernelSpec& spec) {
    return spec.family != KernelFamily::Sobolev || spec.sobolev_order >= 2;
}

GramPair gram(const KernelSpec& spec, const Eigen::VectorXd& Z) {
    const Eigen::Index n = Z.size();
    if (n < 2) {
        throw std::invalid_argument("gram: need at least 2 points");
    }
    if (!Z.allFinite()) {
        throw std::invalid_argument("gram: non-finite input");
    }

    GramPair out;
    out.K.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        out.K(i, i) = kernel_value(spec, Z[i], Z[i]);
        for (Eigen::Index j = 0; j < i; ++j) {
            const double v = kernel_value(spec, Z[i], Z[j]);
            out.K(i, j) = v;
            out.K(j, i) = v;
        }
    }
    if (kernel_has_derivative(spec)) {
        out.D.resize(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (Eigen::Index j = 0; j < n; ++j) {
                out.D(i, j) = kernel_deriv(spec, Z[i], Z[j]);
            }
        }
    }

    std::vector<double> sorted(Z.data(), Z.data() + n);
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        if (sorted[i] - sorted[i - 1] <= 1e-12) {
            out.has_duplicates = true;
            break;
        }
    }
    return out;
}

}  // namespace plriv
