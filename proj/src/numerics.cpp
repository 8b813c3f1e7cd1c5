#include "plriv/numerics.hpp"

#include "plriv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace plriv {

SolveReport solve_min_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           double rank_tol) {
    const Eigen::Index n = A.rows();
    if (A.cols() != n || b.size() != n) {
        throw std::invalid_argument("solve_min_norm: dimension mismatch");
    }
    if (!(rank_tol > 0.0)) {
        throw std::invalid_argument("solve_min_norm: rank_tol must be positive");
    }
    if (!A.allFinite() || !b.allFinite()) {
        throw std::invalid_argument("solve_min_norm: non-finite input");
    }
    const double scale = A.cwiseAbs().maxCoeff();
    const double asym = (A - A.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-8 * std::max(scale, 1.0)) {
        throw std::invalid_argument("solve_min_norm: matrix is not symmetric");
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (A + A.transpose()));
    if (eig.info() != Eigen::Success) {
        throw std::invalid_argument("solve_min_norm: eigendecomposition failed");
    }
    const Eigen::VectorXd& evals = eig.eigenvalues();
    const Eigen::MatrixXd& evecs = eig.eigenvectors();

    const double max_abs = evals.cwiseAbs().maxCoeff();
    const double cutoff = rank_tol * max_abs;

    SolveReport report;
    report.solution = Eigen::VectorXd::Zero(n);
    if (max_abs > 0.0) {
        const Eigen::VectorXd proj = evecs.transpose() * b;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(evals[i]) > cutoff) {
                report.solution += (proj[i] / evals[i]) * evecs.col(i);
                ++report.effective_rank;
            }
        }
    }
    report.rank_deficient = report.effective_rank < n;
    report.residual_norm = (A * report.solution - b).norm();
    return report;
}

double empirical_quantile(std::vector<double> draws, double level) {
    if (draws.empty()) {
        throw std::invalid_argument("empirical_quantile: empty draws");
    }
    if (!(level > 0.0) || !(level < 1.0)) {
        throw std::invalid_argument("empirical_quantile: level must be in (0,1)");
    }
    for (double d : draws) {
        if (!std::isfinite(d)) {
            throw std::invalid_argument("empirical_quantile: non-finite draw");
        }
    }
    const auto n = static_cast<double>(draws.size());
    // Nudge guards against level*n landing one ulp above an exact integer.
    auto k = static_cast<std::size_t>(std::ceil(level * n - 1e-9));
    k = std::clamp<std::size_t>(k, 1, draws.size());
    std::nth_element(draws.begin(), draws.begin() + static_cast<std::ptrdiff_t>(k - 1),
                     draws.end());
    return draws[k - 1];
}

Standardized standardize(const Eigen::VectorXd& column) {
    const Eigen::Index n = column.size();
    if (n < 2) {
        throw DataError("standardize: need at least 2 observations");
    }
    if (!column.allFinite()) {
        throw std::invalid_argument("standardize: non-finite input");
    }
    const double mean = column.mean();
    const double var = (column.array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0)) {
        throw DataError("standardize: column is constant (degenerate scale)");
    }
    Standardized out;
    out.center = mean;
    out.scale = sd;
    out.values = (column.array() - mean) / sd;
    return out;
}

namespace {

// splitmix64; mixes (seed, stream_id) into one well-scrambled engine seed.
std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id),
      engine_(mix64(mix64(seed) ^ mix64(stream_id + 0x51ed270b7a3fca32ull))) {}

double RandomStream::normal() { return normal_(engine_); }

double RandomStream::exponential() {
    double w = exponential_(engine_);
    while (!(w > 0.0)) {
        w = exponential_(engine_);
    }
    return w;
}

double RandomStream::uniform01() { return uniform_(engine_); }

std::vector<std::size_t> RandomStream::permutation(std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) {
        std::uniform_int_distribution<std::size_t> pick(0, i - 1);
        std::swap(idx[i - 1], idx[pick(engine_)]);
    }
    return idx;
}

}  // namespace plriv
