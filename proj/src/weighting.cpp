#include "plriv/weighting.hpp"

#include <cmath>
#include <stdexcept>

namespace plriv {

double charfn_value(const MuSpec& spec, const Eigen::VectorXd& v) {
    if (!v.allFinite()) {
        throw std::invalid_argument("charfn_value: non-finite input");
    }
    double out = 1.0;
    switch (spec.family) {
        case MuFamily::LaplaceProduct:
            // Laplace(0, 1/sqrt(2)) marginal, unit variance.
            for (Eigen::Index k = 0; k < v.size(); ++k) {
                out *= 1.0 / (1.0 + 0.5 * v[k] * v[k]);
            }
            return out;
        case MuFamily::GaussianProduct:
            for (Eigen::Index k = 0; k < v.size(); ++k) {
                out *= std::exp(-0.5 * v[k] * v[k]);
            }
            return out;
    }
    throw std::invalid_argument("charfn_value: unknown mu family");
}

ConditioningMatrix make_conditioning(Eigen::MatrixXd V) {
    if (V.cols() < 1 || V.rows() < 1) {
        throw std::invalid_argument("make_conditioning: empty matrix");
    }
    if (!V.allFinite()) {
        throw std::invalid_argument("make_conditioning: non-finite input");
    }
    ConditioningMatrix out;
    out.V = std::move(V);
    const Eigen::Index n = out.V.rows();
    for (Eigen::Index i = 0; i < n && !out.has_duplicate_rows; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if ((out.V.row(i) - out.V.row(j)).cwiseAbs().maxCoeff() <= 1e-12) {
                out.has_duplicate_rows = true;
                break;
            }
        }
    }
    return out;
}

Eigen::MatrixXd build_F(const MuSpec& spec, const ConditioningMatrix& cond) {
    const Eigen::Index n = cond.V.rows();
    Eigen::MatrixXd F(n, n);
    Eigen::VectorXd diff(cond.V.cols());
    for (Eigen::Index i = 0; i < n; ++i) {
        F(i, i) = 1.0;
        for (Eigen::Index j = 0; j < i; ++j) {
            diff = (cond.V.row(i) - cond.V.row(j)).transpose();
            const double v = charfn_value(spec, diff);
            F(i, j) = v;
            F(j, i) = v;
        }
    }
    return F;
}

Eigen::MatrixXd scale_F_bootstrap(const Eigen::MatrixXd& F, const Eigen::VectorXd& xi) {
    if (xi.size() != F.rows() || F.rows() != F.cols()) {
        throw std::invalid_argument("scale_F_bootstrap: dimension mismatch");
    }
    if (!xi.allFinite() || (xi.array() <= 0.0).any()) {
        throw std::invalid_argument("scale_F_bootstrap: weights must be positive");
    }
    const double mean = xi.mean();
    const Eigen::VectorXd w = xi / mean;
    return F.cwiseProduct(w * w.transpose());
}

}  // namespace plriv
