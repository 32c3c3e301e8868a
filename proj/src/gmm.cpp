#include "negfeed/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "negfeed/errors.hpp"

namespace negfeed {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr double kMassClamp = 1e-8;

double log_sum_exp(const double* v, std::size_t n) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, v[i]);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - m);
    return m + std::log(s);
}

}  // namespace

GaussianMixture::GaussianMixture(std::vector<Component> components) : components_(std::move(components)) {
    if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
    dim_ = static_cast<int>(components_.front().mean.size());
    if (dim_ < 1 || dim_ > 16) throw std::invalid_argument("GaussianMixture: dimension must be 1 to 16");
    double total = 0.0;
    for (const auto& c : components_) {
        if (!(c.weight > 0.0)) throw std::invalid_argument("GaussianMixture: component weight must be positive");
        if (c.mean.size() != dim_ || c.covariance.rows() != dim_ || c.covariance.cols() != dim_)
            throw std::invalid_argument("GaussianMixture: inconsistent component dimensions");
        if (!c.covariance.isApprox(c.covariance.transpose(), 1e-12))
            throw std::invalid_argument("GaussianMixture: covariance not symmetric");
        total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("GaussianMixture: weights must sum to 1");

    inv_chol_.reserve(components_.size());
    log_scale_.reserve(components_.size());
    for (const auto& c : components_) {
        Eigen::LLT<Eigen::MatrixXd> llt(c.covariance);
        if (llt.info() != Eigen::Success)
            throw std::invalid_argument("GaussianMixture: covariance not positive definite");
        const Eigen::MatrixXd lower = llt.matrixL();
        const Eigen::MatrixXd inv = lower.triangularView<Eigen::Lower>().solve(
            Eigen::MatrixXd::Identity(dim_, dim_));
        std::vector<double> flat(static_cast<std::size_t>(dim_ * dim_));
        for (int r = 0; r < dim_; ++r)
            for (int col = 0; col < dim_; ++col) flat[static_cast<std::size_t>(r * dim_ + col)] = inv(r, col);
        inv_chol_.push_back(std::move(flat));
        const double log_det = 2.0 * lower.diagonal().array().log().sum();
        log_scale_.push_back(std::log(c.weight) - 0.5 * (dim_ * kLog2Pi + log_det));
    }
}

void GaussianMixture::log_joint(const double* x, double* out) const {
    double diff[16];
    for (std::size_t k = 0; k < components_.size(); ++k) {
        const double* mu = components_[k].mean.data();
        for (int i = 0; i < dim_; ++i) diff[i] = x[i] - mu[i];
        const double* inv = inv_chol_[k].data();
        double maha = 0.0;
        for (int r = 0; r < dim_; ++r) {
            double z = 0.0;
            for (int col = 0; col <= r; ++col) z += inv[r * dim_ + col] * diff[col];
            maha += z * z;
        }
        out[k] = log_scale_[k] - 0.5 * maha;
    }
}

double GaussianMixture::log_density(const double* x) const {
    double buf[64];
    std::vector<double> heap;
    double* out = buf;
    if (components_.size() > 64) {
        heap.resize(components_.size());
        out = heap.data();
    }
    log_joint(x, out);
    return log_sum_exp(out, components_.size());
}

double GaussianMixture::log_density(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) throw std::invalid_argument("log_density: dimension mismatch");
    const Eigen::VectorXd copy = x;
    return log_density(copy.data());
}

// --- EM -------------------------------------------------------------------

namespace {

struct Params {
    std::vector<double> weights;
    std::vector<Eigen::VectorXd> means;
    std::vector<Eigen::MatrixXd> covs;
};

GaussianMixture to_mixture(const Params& p) {
    std::vector<Component> comps;
    double total = 0.0;
    for (double w : p.weights) total += w;
    for (std::size_t k = 0; k < p.weights.size(); ++k)
        comps.push_back(Component{p.weights[k] / total, p.means[k], p.covs[k]});
    return GaussianMixture(std::move(comps));
}

Eigen::MatrixXd regularize(Eigen::MatrixXd scatter, bool clamp_psd, const EmOptions& opt) {
    const auto d = scatter.rows();
    scatter = 0.5 * (scatter + scatter.transpose());
    if (clamp_psd) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(scatter);
        Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
        scatter = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
        scatter = 0.5 * (scatter + scatter.transpose());
    }
    const double reg = opt.relative_regularization * scatter.trace() / static_cast<double>(d) +
                       opt.absolute_regularization;
    scatter.diagonal().array() += reg;
    return scatter;
}

// One weighted M-step from (soft or hard) responsibilities. Components whose
// mass is clamped away are dropped.
Params m_step(const Eigen::MatrixXd& x, const Eigen::VectorXd& w, const Eigen::MatrixXd& resp, bool any_negative,
              const EmOptions& opt) {
    Params p;
    const auto n = x.rows();
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
        double mass = 0.0;
        Eigen::VectorXd mean = Eigen::VectorXd::Zero(x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const double c = w[i] * resp(i, k);
            mass += c;
            mean += c * x.row(i).transpose();
        }
        if (!(mass > kMassClamp)) continue;
        mean /= mass;
        Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(x.cols(), x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd diff = x.row(i).transpose() - mean;
            scatter.noalias() += (w[i] * resp(i, k)) * diff * diff.transpose();
        }
        scatter /= mass;
        p.weights.push_back(mass);
        p.means.push_back(std::move(mean));
        p.covs.push_back(regularize(std::move(scatter), any_negative, opt));
    }
    return p;
}

std::vector<Eigen::Index> kmeanspp(const Eigen::MatrixXd& x, const std::vector<Eigen::Index>& pool, int k,
                                   std::mt19937_64& rng) {
    std::vector<Eigen::Index> centers;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    centers.push_back(pool[pick(rng)]);
    std::vector<double> d2(pool.size(), std::numeric_limits<double>::infinity());
    while (static_cast<int>(centers.size()) < k) {
        const auto last = centers.back();
        double total = 0.0;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            d2[j] = std::min(d2[j], (x.row(pool[j]) - x.row(last)).squaredNorm());
            total += d2[j];
        }
        if (!(total > 0.0)) {
            centers.push_back(pool[pick(rng)]);
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng);
        std::size_t chosen = pool.size() - 1;
        for (std::size_t j = 0; j < pool.size(); ++j) {
            target -= d2[j];
            if (target < 0.0 && d2[j] > 0.0) {
                chosen = j;
                break;
            }
        }
        centers.push_back(pool[chosen]);
    }
    return centers;
}

}  // namespace

FitResult fit_em(const Eigen::MatrixXd& samples_in, const Eigen::VectorXd& weights_in, const EmOptions& opt) {
    if (samples_in.rows() != weights_in.size()) throw std::invalid_argument("fit_em: weight count mismatch");
    if (opt.components < 1) throw std::invalid_argument("fit_em: component count must be >= 1");
    if (samples_in.cols() < 1 || samples_in.cols() > 16) throw std::invalid_argument("fit_em: bad dimension");

    // Zero-weight samples carry no information; drop them so they cannot
    // influence seeding either.
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < samples_in.rows(); ++i)
        if (weights_in[i] != 0.0) keep.push_back(i);
    const auto n = static_cast<Eigen::Index>(keep.size());
    const auto d = samples_in.cols();
    if (n == 0) throw std::invalid_argument("fit_em: no samples");
    if (n < opt.components) throw std::invalid_argument("fit_em: fewer samples than components");
    Eigen::MatrixXd x(n, d);
    Eigen::VectorXd w(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        x.row(i) = samples_in.row(keep[static_cast<std::size_t>(i)]);
        w[i] = weights_in[keep[static_cast<std::size_t>(i)]];
    }
    const bool any_negative = (w.array() < 0.0).any();
    std::vector<Eigen::Index> positive_pool;
    for (Eigen::Index i = 0; i < n; ++i)
        if (w[i] > 0.0) positive_pool.push_back(i);
    if (positive_pool.empty()) throw AllMassNegative("fit_em: no positively weighted samples");

    FitResult result;

    bool degenerate = false;
    for (Eigen::Index j = 0; j < d; ++j)
        if (x.col(j).maxCoeff() == x.col(j).minCoeff()) degenerate = true;
    if (degenerate) {
        Eigen::MatrixXd resp = Eigen::MatrixXd::Ones(n, 1);
        Params p = m_step(x, w, resp, any_negative, opt);
        if (p.weights.empty()) throw AllMassNegative("fit_em: total sample mass is not positive");
        for (Eigen::Index j = 0; j < d; ++j)
            if (x.col(j).maxCoeff() == x.col(j).minCoeff()) p.covs[0](j, j) += opt.degenerate_variance;
        result.mixture = to_mixture(p);
        result.degenerate = true;
        return result;
    }

    const int k = std::min<int>(opt.components, static_cast<int>(positive_pool.size()));
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, k);
    Params params;
    if (opt.init == EmInit::phase_bins) {
        // Equal-width bins along the first coordinate; empty bins are dropped.
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (Eigen::Index i : positive_pool) {
            lo = std::min(lo, x(i, 0));
            hi = std::max(hi, x(i, 0));
        }
        for (Eigen::Index i : positive_pool) {
            const double t = hi > lo ? (x(i, 0) - lo) / (hi - lo) : 0.0;
            resp(i, std::min<Eigen::Index>(static_cast<Eigen::Index>(t * k), k - 1)) = 1.0;
        }
        params = m_step(x, w, resp, false, opt);
    } else {
        std::mt19937_64 rng(opt.seed);
        const auto centers = kmeanspp(x, positive_pool, k, rng);

        // Hard assignment of the positive samples to the nearest seed.
        for (Eigen::Index i : positive_pool) {
            Eigen::Index best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (int c = 0; c < k; ++c) {
                const double dd = (x.row(i) - x.row(centers[static_cast<std::size_t>(c)])).squaredNorm();
                if (dd < best_d) {
                    best_d = dd;
                    best = c;
                }
            }
            resp(i, best) = 1.0;
        }
        params = m_step(x, w, resp, false, opt);
        // Seeds that captured no sample (duplicate points) fall back to the
        // global scatter around the seed.
        if (static_cast<int>(params.weights.size()) < k) {
            Eigen::MatrixXd all = Eigen::MatrixXd::Ones(n, 1);
            const Params global = m_step(x, w.cwiseMax(0.0), all, false, opt);
            for (int c = 0; c < k; ++c) {
                if (resp.col(c).sum() > 0.0) continue;
                params.weights.push_back(1.0);
                params.means.push_back(x.row(centers[static_cast<std::size_t>(c)]).transpose());
                params.covs.push_back(global.covs[0]);
            }
        }
    }

    Params best = params;
    double best_ll = -std::numeric_limits<double>::infinity();
    double prev_ll = -std::numeric_limits<double>::infinity();
    std::vector<double> lj;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const GaussianMixture gmm = to_mixture(params);
        const auto kk = static_cast<Eigen::Index>(gmm.size());
        resp.resize(n, kk);
        lj.resize(static_cast<std::size_t>(kk));
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::VectorXd xi = x.row(i).transpose();
            gmm.log_joint(xi.data(), lj.data());
            const double lse = log_sum_exp(lj.data(), lj.size());
            ll += w[i] * lse;
            for (Eigen::Index c = 0; c < kk; ++c) resp(i, c) = std::exp(lj[static_cast<std::size_t>(c)] - lse);
        }
        // The covariance floor makes each M-step slightly inexact, so with
        // positive weights a drop means the floor now outweighs the gain.
        if (!any_negative && it > 0 && ll < prev_ll) {
            result.converged = true;
            break;
        }
        result.log_likelihood.push_back(ll);
        result.iterations = it + 1;
        if (ll > best_ll) {
            best_ll = ll;
            best = params;
        }
        // Negative weights break monotonicity, so a drop is not convergence.
        if (it > 0 && std::abs(ll - prev_ll) < opt.tolerance) {
            result.converged = true;
            break;
        }
        prev_ll = ll;
        params = m_step(x, w, resp, any_negative, opt);
        if (params.weights.empty()) throw AllMassNegative("fit_em: every component collapsed");
    }
    result.mixture = to_mixture(best);
    return result;
}

void stack_samples(const DemoSet& demos, Eigen::MatrixXd& rows, Eigen::VectorXd& weights) {
    std::size_t n = 0;
    int dim = -1;
    for (const auto& demo : demos) {
        n += demo.samples.size();
        if (!demo.samples.empty()) {
            if (dim >= 0 && demo.dim() != dim) throw std::invalid_argument("stack_samples: mixed dimensions");
            dim = demo.dim();
        }
    }
    if (dim < 0) throw std::invalid_argument("stack_samples: no samples");
    rows.resize(static_cast<Eigen::Index>(n), dim + 1);
    weights.resize(static_cast<Eigen::Index>(n));
    Eigen::Index r = 0;
    for (const auto& demo : demos) {
        for (const auto& s : demo.samples) {
            rows(r, 0) = s.phase;
            rows.row(r).tail(dim) = s.position.transpose();
            weights[r] = demo.weight;
            ++r;
        }
    }
}

FitResult fit_em(const DemoSet& demos, const EmOptions& options) {
    if (demos.empty()) throw std::invalid_argument("fit_em: empty demonstration set");
    Eigen::MatrixXd rows;
    Eigen::VectorXd weights;
    stack_samples(demos, rows, weights);
    return fit_em(rows, weights, options);
}

// --- GMR ------------------------------------------------------------------

Eigen::VectorXd ConditionalMixture::mean() const {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(means.front().size());
    for (std::size_t k = 0; k < means.size(); ++k) m += weights[k] * means[k];
    return m;
}

ConditionalMixture gmr_condition(const GaussianMixture& gmm, double phase) {
    if (!(phase >= 0.0 && phase <= 1.0)) throw std::invalid_argument("gmr_condition: phase outside [0, 1]");
    if (gmm.dim() < 2) throw std::invalid_argument("gmr_condition: mixture has no position dimensions");
    const int p = gmm.dim() - 1;
    ConditionalMixture out;
    std::vector<double> log_h;
    for (const auto& c : gmm.components()) {
        const double var_t = c.covariance(0, 0);
        const double mu_t = c.mean[0];
        const Eigen::VectorXd cross = c.covariance.block(1, 0, p, 1);
        out.means.push_back(c.mean.tail(p) + cross * ((phase - mu_t) / var_t));
        out.covariances.push_back(c.covariance.bottomRightCorner(p, p) - cross * cross.transpose() / var_t);
        const double dt = phase - mu_t;
        log_h.push_back(std::log(c.weight) - 0.5 * (kLog2Pi + std::log(var_t) + dt * dt / var_t));
    }
    const double lse = log_sum_exp(log_h.data(), log_h.size());
    for (double lh : log_h) out.weights.push_back(std::exp(lh - lse));
    return out;
}

// --- Rasterization --------------------------------------------------------

GridDistribution rasterize(const GaussianMixture& gmm, const GridSpec& grid) {
    if (static_cast<std::size_t>(gmm.dim()) != grid.dims())
        throw std::invalid_argument("rasterize: mixture and grid dimensions differ");
    const std::size_t n = grid.size();
    const std::size_t dims = grid.dims();
    std::vector<double> logv(n);
    std::vector<std::size_t> idx(dims);
    double x[16];
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
        grid.unravel(c, idx);
        for (std::size_t d = 0; d < dims; ++d) x[d] = grid.axis(d).center(idx[d]);
        logv[c] = gmm.log_density(x);
        peak = std::max(peak, logv[c]);
    }
    const double volume = grid.cell_volume();
    for (double& v : logv) v = std::exp(v - peak) * volume;
    return GridDistribution::normalize(grid, std::move(logv));
}

GaussianMixture widened(const GaussianMixture& gmm, const Eigen::VectorXd& variance) {
    if (variance.size() == 0) return gmm;
    if (variance.size() != static_cast<Eigen::Index>(gmm.dim()) || (variance.array() < 0.0).any())
        throw std::invalid_argument("widened: need one non-negative variance per dimension");
    std::vector<Component> comps = gmm.components();
    for (auto& c : comps) c.covariance.diagonal() += variance;
    return GaussianMixture(std::move(comps));
}

}  // namespace negfeed
