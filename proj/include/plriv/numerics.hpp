#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <vector>

namespace plriv {

/// Result of a symmetric positive-semidefinite solve.
struct SolveReport {
    Eigen::VectorXd solution;
    bool rank_deficient = false;
    /// Euclidean norm of (A * solution - b).
    double residual_norm = 0.0;
    Eigen::Index effective_rank = 0;
};

/// Minimum-Euclidean-norm x minimizing ||A x - b|| for symmetric PSD A.
///
/// Uses a spectral decomposition; components whose eigenvalue magnitude falls
/// below rank_tol times the largest one are treated as null space and dropped,
/// so the returned solution is orthogonal to the (numerical) null space of A.
SolveReport solve_min_norm(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                           double rank_tol = 1e-10);

/// inf{c : #(draws <= c)/B >= level}, i.e. the ceil(level*B)-th order statistic.
/// No interpolation: this is the order-statistic critical-value rule.
double empirical_quantile(std::vector<double> draws, double level);

struct Standardized {
    Eigen::VectorXd values;
    double center = 0.0;
    double scale = 1.0;
};

/// (column - mean)/sd with the population (1/n) standard deviation.
/// Throws DataError on a constant column.
Standardized standardize(const Eigen::VectorXd& column);

/// Deterministic random stream keyed by (seed, stream_id).
///
/// Identical keys reproduce identical draw sequences; distinct stream_ids under
/// one seed give independent streams, so parallel workers can each own one.
class RandomStream {
public:
    RandomStream(std::uint64_t seed, std::uint64_t stream_id = 0);

    std::uint64_t seed() const { return seed_; }
    std::uint64_t stream_id() const { return stream_id_; }

    double normal();
    double exponential();  // rate 1
    double uniform01();
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::exponential_distribution<double> exponential_{1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

}  // namespace plriv
