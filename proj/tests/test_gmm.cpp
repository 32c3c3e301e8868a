#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/LU>

#include "doctest.h"
#include "negfeed/errors.hpp"
#include "negfeed/gmm.hpp"
#include "support.hpp"

using namespace negfeed;

namespace {

// Two well separated clusters in (phase, x): 250 samples each.
Eigen::MatrixXd two_clusters(std::uint64_t seed, const Eigen::Vector2d& m0, const Eigen::Vector2d& m1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.05);
    Eigen::MatrixXd x(500, 2);
    for (int i = 0; i < 500; ++i) {
        const Eigen::Vector2d& m = i < 250 ? m0 : m1;
        x(i, 0) = m[0] + g(rng);
        x(i, 1) = m[1] + 2.0 * g(rng);
    }
    return x;
}

double gaussian_log_pdf(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
    const Eigen::VectorXd d = x - mu;
    const double quad = d.dot(cov.inverse() * d);
    return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + std::log(cov.determinant()) +
                   quad);
}

GaussianMixture single(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov) {
    return GaussianMixture({Component{1.0, mu, cov}});
}

}  // namespace

TEST_CASE("mixture construction is validated") {
    Eigen::Vector2d mu(0, 0);
    Eigen::Matrix2d id = Eigen::Matrix2d::Identity();
    CHECK_THROWS_AS(GaussianMixture(std::vector<Component>{}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({Component{0.5, mu, id}}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({Component{1.0, mu, Eigen::Matrix2d::Zero()}}), std::invalid_argument);
    Eigen::Matrix2d asym = id;
    asym(0, 1) = 0.3;
    CHECK_THROWS_AS(GaussianMixture({Component{1.0, mu, asym}}), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture({Component{1.0, mu, Eigen::Matrix3d::Identity()}}), std::invalid_argument);
    CHECK_NOTHROW(GaussianMixture({Component{0.25, mu, id}, Component{0.75, mu, 2 * id}}));
}

TEST_CASE("log density matches the closed form") {
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (int trial = 0; trial < 50; ++trial) {
        Eigen::Matrix3d a;
        for (int i = 0; i < 9; ++i) a.data()[i] = g(rng);
        const Eigen::Matrix3d c0 = a * a.transpose() + 0.1 * Eigen::Matrix3d::Identity();
        const Eigen::Matrix3d c1 = Eigen::Vector3d(0.5, 1.0, 2.0).asDiagonal();
        const Eigen::Vector3d m0(g(rng), g(rng), g(rng)), m1(g(rng), g(rng), g(rng));
        GaussianMixture gmm({Component{0.3, m0, c0}, Component{0.7, m1, c1}});
        const Eigen::Vector3d x(g(rng), g(rng), g(rng));
        const double want =
            std::log(0.3 * std::exp(gaussian_log_pdf(x, m0, c0)) + 0.7 * std::exp(gaussian_log_pdf(x, m1, c1)));
        CHECK(gmm.log_density(x) == doctest::Approx(want).epsilon(1e-10));
    }
}

TEST_CASE("EM recovers two generating means within 0.05") {
    const Eigen::Vector2d m0(0.25, -1.0), m1(0.75, 1.5);
    for (EmInit init : {EmInit::kmeans_pp, EmInit::phase_bins}) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            const Eigen::MatrixXd x = two_clusters(seed, m0, m1);
            EmOptions opt;
            opt.components = 2;
            opt.seed = seed;
            opt.init = init;
            const FitResult fit = fit_em(x, Eigen::VectorXd::Ones(500), opt);
            REQUIRE(fit.mixture.size() == 2u);
            CHECK(fit.converged);
            const auto& a = fit.mixture[0].mean[0] < fit.mixture[1].mean[0] ? fit.mixture[0] : fit.mixture[1];
            const auto& b = fit.mixture[0].mean[0] < fit.mixture[1].mean[0] ? fit.mixture[1] : fit.mixture[0];
            CHECK((a.mean - m0).cwiseAbs().maxCoeff() < 0.05);
            CHECK((b.mean - m1).cwiseAbs().maxCoeff() < 0.05);
            CHECK(a.weight == doctest::Approx(0.5).epsilon(0.01));
        }
    }
}

TEST_CASE("EM log-likelihood is monotone with positive weights") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Eigen::MatrixXd x(300, 3);
        for (int i = 0; i < 300; ++i) {
            const double t = u(rng);
            x(i, 0) = t;
            x(i, 1) = std::sin(6.0 * t) + 0.1 * u(rng);
            x(i, 2) = (i % 3) + 0.2 * u(rng);
        }
        Eigen::VectorXd w(300);
        for (int i = 0; i < 300; ++i) w[i] = 0.5 + u(rng);
        EmOptions opt;
        opt.components = 2 + static_cast<int>(seed % 5);
        opt.seed = seed;
        opt.init = seed % 2 ? EmInit::kmeans_pp : EmInit::phase_bins;
        const FitResult fit = fit_em(x, w, opt);
        const auto& ll = fit.log_likelihood;
        REQUIRE(ll.size() >= 2u);
        for (std::size_t i = 1; i < ll.size(); ++i) CHECK(ll[i] >= ll[i - 1] - 1e-8 * std::abs(ll[i - 1]));
        CHECK(fit.iterations == static_cast<int>(ll.size()));
    }
}

TEST_CASE("single component fit is the weighted mean and covariance") {
    std::mt19937_64 rng(2);
    std::normal_distribution<double> g;
    Eigen::MatrixXd x(40, 2);
    Eigen::VectorXd w(40);
    for (int i = 0; i < 40; ++i) {
        x(i, 0) = g(rng);
        x(i, 1) = 3.0 + g(rng);
        w[i] = 1.0 + (i % 4);
    }
    EmOptions opt;
    opt.components = 1;
    const FitResult fit = fit_em(x, w, opt);
    const Eigen::Vector2d mean = (x.transpose() * w) / w.sum();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (int i = 0; i < 40; ++i) cov += w[i] * (x.row(i).transpose() - mean) * (x.row(i) - mean.transpose());
    cov /= w.sum();
    CHECK((fit.mixture[0].mean - mean).norm() < 1e-12);
    CHECK((fit.mixture[0].covariance - cov).norm() < 1e-5 * cov.norm());
}

TEST_CASE("zero-weight samples do not influence the fit") {
    const Eigen::MatrixXd x = two_clusters(4, {0.2, 0.0}, {0.8, 1.0});
    Eigen::MatrixXd more(520, 2);
    more.topRows(500) = x;
    Eigen::VectorXd w = Eigen::VectorXd::Ones(520);
    for (int i = 500; i < 520; ++i) {
        more(i, 0) = 50.0 + i;
        more(i, 1) = -40.0;
        w[i] = 0.0;
    }
    EmOptions opt;
    opt.components = 2;
    opt.seed = 3;
    const FitResult a = fit_em(x, Eigen::VectorXd::Ones(500), opt);
    const FitResult b = fit_em(more, w, opt);
    REQUIRE(a.mixture.size() == b.mixture.size());
    for (std::size_t k = 0; k < a.mixture.size(); ++k) CHECK(a.mixture[k].mean == b.mixture[k].mean);
}

TEST_CASE("negative weights push mass away and can remove every component") {
    const Eigen::MatrixXd x = two_clusters(5, {0.2, 0.0}, {0.8, 1.0});
    Eigen::VectorXd w = Eigen::VectorXd::Ones(500);
    for (int i = 250; i < 500; ++i) w[i] = -0.5;
    EmOptions opt;
    opt.components = 2;
    const FitResult fit = fit_em(x, w, opt);
    // The negatively weighted cluster cannot hold a component of its own.
    for (const auto& c : fit.mixture.components()) CHECK(c.mean[0] < 0.5);
    CHECK_THROWS_AS(fit_em(x, -Eigen::VectorXd::Ones(500), opt), AllMassNegative);
}

TEST_CASE("coincident samples give a degenerate regularized fit") {
    Eigen::MatrixXd x(10, 2);
    for (int i = 0; i < 10; ++i) {
        x(i, 0) = i / 9.0;
        x(i, 1) = 0.5;
    }
    EmOptions opt;
    opt.components = 3;
    const FitResult fit = fit_em(x, Eigen::VectorXd::Ones(10), opt);
    CHECK(fit.degenerate);
    CHECK_FALSE(fit.nonconvergence());
    REQUIRE(fit.mixture.size() == 1u);
    CHECK(fit.mixture[0].covariance(1, 1) >= opt.degenerate_variance);
}

TEST_CASE("EM argument checks") {
    Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 2);
    EmOptions opt;
    opt.components = 6;
    CHECK_THROWS_AS(fit_em(x, Eigen::VectorXd::Ones(5), opt), std::invalid_argument);
    opt.components = 2;
    CHECK_THROWS_AS(fit_em(x, Eigen::VectorXd::Ones(4), opt), std::invalid_argument);
    CHECK_THROWS_AS(fit_em(x, Eigen::VectorXd::Zero(5), opt), std::invalid_argument);
    CHECK_THROWS_AS(fit_em(DemoSet{}, opt), std::invalid_argument);
}

TEST_CASE("iteration cap keeps the best iterate and reports nonconvergence") {
    const Eigen::MatrixXd x = two_clusters(6, {0.3, 0.0}, {0.6, 0.2});
    EmOptions opt;
    opt.components = 4;
    opt.max_iterations = 2;
    opt.tolerance = 0.0;
    const FitResult fit = fit_em(x, Eigen::VectorXd::Ones(500), opt);
    CHECK(fit.iterations == 2);
    CHECK(fit.nonconvergence());
}

TEST_CASE("GMR of a single component is the linear regression line") {
    Eigen::Vector3d mu(0.5, 1.0, -2.0);
    Eigen::Matrix3d cov;
    cov << 0.04, 0.02, -0.01, 0.02, 0.5, 0.1, -0.01, 0.1, 0.3;
    const auto cond = gmr_condition(single(mu, cov), 0.8);
    REQUIRE(cond.weights.size() == 1u);
    CHECK(cond.weights[0] == doctest::Approx(1.0));
    const Eigen::Vector2d want = mu.tail(2) + cov.block(1, 0, 2, 1) * (0.3 / 0.04);
    CHECK((cond.means[0] - want).norm() < 1e-12);
    const Eigen::Matrix2d want_cov = cov.bottomRightCorner(2, 2) - cov.block(1, 0, 2, 1) * cov.block(0, 1, 1, 2) / 0.04;
    CHECK((cond.covariances[0] - want_cov).norm() < 1e-12);
    CHECK((cond.mean() - want).norm() < 1e-12);
    CHECK_THROWS_AS(gmr_condition(single(mu, cov), 1.5), std::invalid_argument);
}

TEST_CASE("GMR weights are the phase responsibilities") {
    const Eigen::Matrix2d cov = Eigen::Vector2d(0.01, 1.0).asDiagonal();
    GaussianMixture gmm({Component{0.5, Eigen::Vector2d(0.25, -1.0), cov},
                         Component{0.5, Eigen::Vector2d(0.75, 1.0), cov}});
    const auto mid = gmr_condition(gmm, 0.5);
    CHECK(mid.weights[0] == doctest::Approx(0.5));
    CHECK(mid.mean()[0] == doctest::Approx(0.0));
    const auto early = gmr_condition(gmm, 0.3);
    const double r = std::exp(-0.5 * (0.05 * 0.05 - 0.45 * 0.45) / 0.01);
    CHECK(early.weights[0] == doctest::Approx(r / (1.0 + r)));
}

TEST_CASE("rasterization follows the density at cell centers") {
    GridSpec g = test::lattice({4, 5});
    const Eigen::Vector2d mu(0.6, 0.3);
    const Eigen::Matrix2d cov = Eigen::Vector2d(0.05, 0.02).asDiagonal();
    const auto d = rasterize(single(mu, cov), g);
    test::check_distribution(d);
    CHECK(d.argmax() == *g.locate(mu));
    for (std::size_t c = 1; c < g.size(); ++c) {
        const double want = gaussian_log_pdf(g.center(c), mu, cov) - gaussian_log_pdf(g.center(0), mu, cov);
        CHECK(std::log(d[c] / d[0]) == doctest::Approx(want).epsilon(1e-9));
    }
    const auto flat = rasterize(single(mu, 1e6 * Eigen::Matrix2d::Identity()), g);
    for (double v : flat.values()) CHECK(v == doctest::Approx(1.0 / 20.0).epsilon(1e-5));
    // Far tails still give a usable grid.
    const auto tight = rasterize(single(Eigen::Vector2d(50.0, 50.0), 1e-4 * Eigen::Matrix2d::Identity()), g);
    test::check_distribution(tight);
    CHECK(tight.argmax() == g.size() - 1);
    CHECK_THROWS_AS(rasterize(single(mu, cov), test::lattice({2, 2, 2})), std::invalid_argument);
}

TEST_CASE("widening adds variance to every component") {
    const Eigen::Matrix2d cov = Eigen::Vector2d(0.01, 1.0).asDiagonal();
    GaussianMixture gmm({Component{0.5, Eigen::Vector2d(0.25, -1.0), cov},
                         Component{0.5, Eigen::Vector2d(0.75, 1.0), cov}});
    const auto w = widened(gmm, Eigen::Vector2d(0.5, 2.0));
    for (std::size_t k = 0; k < 2; ++k) {
        CHECK(w[k].covariance(0, 0) == doctest::Approx(0.51));
        CHECK(w[k].covariance(1, 1) == doctest::Approx(3.0));
        CHECK(w[k].mean == gmm[k].mean);
    }
    CHECK(widened(gmm, Eigen::VectorXd()).components()[0].covariance == cov);
    CHECK_THROWS_AS(widened(gmm, Eigen::Vector3d(1, 1, 1)), std::invalid_argument);
    CHECK_THROWS_AS(widened(gmm, Eigen::Vector2d(1, -1)), std::invalid_argument);
}

TEST_CASE("demonstrations stack into phase-position rows") {
    DemoSet demos(2);
    for (int k = 0; k < 2; ++k) {
        demos[k].weight = k ? -1.0 : 2.0;
        demos[k].label = k ? Label::negative : Label::positive;
        for (int i = 0; i < 3; ++i) demos[k].samples.push_back(Sample{i / 2.0, Eigen::Vector2d(k, i)});
    }
    Eigen::MatrixXd rows;
    Eigen::VectorXd w;
    stack_samples(demos, rows, w);
    CHECK(rows.rows() == 6);
    CHECK(rows.cols() == 3);
    CHECK(rows(4, 0) == 0.5);
    CHECK(rows(4, 1) == 1.0);
    CHECK(w[0] == 2.0);
    CHECK(w[5] == -1.0);
}
