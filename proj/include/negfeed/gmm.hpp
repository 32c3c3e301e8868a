#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "negfeed/demo.hpp"
#include "negfeed/grid.hpp"

namespace negfeed {

struct Component {
    double weight = 1.0;
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Gaussian mixture over (phase, position). Immutable once built; the
/// Cholesky factors used for density evaluation are cached at construction.
class GaussianMixture {
public:
    GaussianMixture() = default;
    /// Validates weights (positive, sum to 1 within 1e-9) and covariances
    /// (symmetric positive definite); throws std::invalid_argument otherwise.
    explicit GaussianMixture(std::vector<Component> components);

    int dim() const { return dim_; }
    std::size_t size() const { return components_.size(); }
    const std::vector<Component>& components() const { return components_; }
    const Component& operator[](std::size_t k) const { return components_[k]; }

    double log_density(const double* x) const;
    double log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const;
    /// log(weight_k * N(x | k)) for every component.
    void log_joint(const double* x, double* out) const;

private:
    std::vector<Component> components_;
    int dim_ = 0;
    // Row-major inverse Cholesky factor per component and log(weight) plus
    // the Gaussian normalizer.
    std::vector<std::vector<double>> inv_chol_;
    std::vector<double> log_scale_;
};

/// k-means++ seeding, or equal-width bins along the first (phase) coordinate.
enum class EmInit { kmeans_pp, phase_bins };

struct EmOptions {
    int components = 6;
    std::uint64_t seed = 0;
    EmInit init = EmInit::kmeans_pp;
    int max_iterations = 300;
    /// Stop once the log-likelihood improves by less than this.
    double tolerance = 1e-7;
    /// Each M-step adds relative_regularization * trace/dim * I.
    double relative_regularization = 1e-6;
    /// Added to the regularizer so that coincident data stays positive
    /// definite.
    double absolute_regularization = 1e-10;
    /// Variance given to a dimension in which every sample coincides.
    double degenerate_variance = 1e-4;
};

struct FitResult {
    GaussianMixture mixture;
    /// Weighted log-likelihood of the training data, one entry per E-step.
    std::vector<double> log_likelihood;
    int iterations = 0;
    bool converged = false;
    /// Samples coincided in some dimension; `mixture` is a single
    /// regularized component.
    bool degenerate = false;

    /// Iteration cap reached; `mixture` holds the best iterate seen.
    bool nonconvergence() const { return !converged && !degenerate; }
};

/// Weighted EM with k-means++ seeding. `samples` is one (phase, position...)
/// row per sample; `weights` scales each sample's contribution. Zero-weight
/// samples are dropped. Negative weights are allowed: component masses that
/// fall to 1e-8 or below remove the component, and indefinite scatter
/// matrices are clamped to positive semi-definite before regularization.
/// Throws AllMassNegative when no component survives.
FitResult fit_em(const Eigen::MatrixXd& samples, const Eigen::VectorXd& weights, const EmOptions& options);

/// Fit over every sample of every demonstration, weighted by the
/// demonstration weight.
FitResult fit_em(const DemoSet& demos, const EmOptions& options);

/// Stack demonstrations into (phase, position) rows plus per-row weights.
void stack_samples(const DemoSet& demos, Eigen::MatrixXd& rows, Eigen::VectorXd& weights);

/// Position distribution of a (phase, position) mixture at a fixed phase.
struct ConditionalMixture {
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covariances;

    Eigen::VectorXd mean() const;
};

/// Gaussian mixture regression on the phase dimension (index 0).
ConditionalMixture gmr_condition(const GaussianMixture& gmm, double phase);

/// Mixture density at each cell center times the cell volume, normalized to
/// unit mass. Computed in log space relative to the largest cell so that
/// very tight mixtures still produce a usable grid.
GridDistribution rasterize(const GaussianMixture& gmm, const GridSpec& grid);

/// The same mixture with `variance` (one entry per dimension) added to every
/// component's diagonal. Empty `variance` returns the mixture unchanged.
GaussianMixture widened(const GaussianMixture& gmm, const Eigen::VectorXd& variance);

}  // namespace negfeed
