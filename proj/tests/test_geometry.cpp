#include "beliefmap/experiments.hpp"
#include "beliefmap/geometry.hpp"
#include "beliefmap/probes.hpp"
#include "beliefmap/synth.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace bm;
using doctest::Approx;

namespace {

// Cosine Gram of C points on a great circle spanned by two orthonormal vectors.
Mat rank2_gram(int C) {
    Mat Q = oracle::random_frame(12, 2, 5);
    Mat W(C, 12);
    for (int i = 0; i < C; ++i) {
        const double th = 0.3 * i;
        W.row(i) = (std::cos(th) * Q.col(0) + std::sin(th) * Q.col(1)).transpose();
    }
    return W * W.transpose();
}

}  // namespace

TEST_CASE("eigendecomposition of simple Grams") {
    auto id = field_eig(Mat::Identity(4, 4));
    CHECK((id.lambda.array() - 1.0).abs().maxCoeff() < 1e-14);
    auto ones = field_eig(Mat::Ones(4, 4));
    CHECK(ones.lambda[0] == Approx(4.0));
    CHECK(ones.lambda.tail(3).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(ones.positive_modes() == 1);

    Mat A = Mat::Identity(3, 3);
    A(0, 2) = 0.5;
    CHECK_THROWS_AS(field_eig(A), std::invalid_argument);
}

TEST_CASE("eigenvectors are orthonormal and ordered") {
    Mat W = oracle::random_frame(9, 6, 2).transpose() + 0.3 * Mat::Ones(6, 9);
    ProbeField f;
    f.W = W;
    f.class_values = Vec::LinSpaced(6, 1, 6);
    f.bias = Vec::Zero(6);
    auto g = field_eig(probe_gram(f), f.class_values);
    CHECK((g.U.transpose() * g.U - Mat::Identity(6, 6)).norm() < 1e-10);
    for (Eigen::Index i = 1; i < g.lambda.size(); ++i) CHECK(g.lambda[i] <= g.lambda[i - 1]);
    CHECK((g.U * g.lambda.asDiagonal() * g.U.transpose() - g.K).norm() < 1e-10);
}

TEST_CASE("a rank-2 field has exactly two modes") {
    auto g = field_eig(rank2_gram(8));
    int above = 0;
    for (double l : g.lambda) above += l > 1e-10;
    CHECK(above == 2);
    CHECK(g.positive_modes() == 2);
    Mat E = field_embed(g, 2);
    CHECK((E * E.transpose() - g.K).cwiseAbs().maxCoeff() < 1e-8);
    CHECK_THROWS_AS(field_embed(g, 3), std::invalid_argument);
}

TEST_CASE("embedding reconstructs the positive part of the Gram") {
    auto g = field_eig(probe_gram(phi_field(SynthWorld(SynthConfig{}), 100)));
    const int r = g.positive_modes();
    Mat E = field_embed(g, r);
    Mat Kp = g.U.leftCols(r) * g.lambda.head(r).asDiagonal() * g.U.leftCols(r).transpose();
    CHECK((E * E.transpose() - Kp).cwiseAbs().maxCoeff() < 1e-8);

    auto id = field_eig(Mat::Identity(3, 3));
    Mat Ei = field_embed(id, 3);
    CHECK((Ei * Ei.transpose() - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
    for (int i = 0; i < 3; ++i) CHECK(Ei.row(i).cwiseAbs().maxCoeff() == Approx(1.0));
}

TEST_CASE("cumulative variance") {
    Vec l(5);
    l << 5, 2, 1, 0.5, -0.3;
    double prev = 0;
    for (int r = 1; r <= 5; ++r) {
        CHECK(cumvar(l, r) >= prev);
        prev = cumvar(l, r);
    }
    CHECK(cumvar(l, 5) == 1.0);
    CHECK(cumvar(l, 1) == Approx(5.0 / 8.5));
    CHECK(cumvar(Vec::Ones(4), 1) == Approx(0.25));
    CHECK(intrinsic_dim(Vec::Ones(4), 0.95) == 4);
    CHECK(intrinsic_dim(l, 0.8) == 2);
    CHECK_THROWS_AS(cumvar(Vec::Zero(3), 1), NumericalError);
    CHECK_THROWS_AS(cumvar(l, 6), std::invalid_argument);
}

TEST_CASE("deeper synthetic fields spread their spectrum") {
    double prev = 2.0;
    for (double depth : {0.25, 0.5, 1.0, 2.0}) {
        SynthConfig cfg;
        cfg.curvature = depth;
        auto g = field_eig(probe_gram(phi_field(SynthWorld(cfg), 100)));
        const double c = cumvar(g.lambda, 1);
        CHECK(c < prev);
        prev = c;
    }
}

TEST_CASE("spline interpolates and matches a dense solve") {
    Vec knots(6);
    knots << 0, 1, 2.5, 3, 4.2, 6;
    Mat pts(6, 2);
    pts.col(0) << 1, -2, 0.5, 3, 2, -1;
    pts.col(1) << 0, 0, 1, 1, 0, 0;
    auto fit = fit_curve(knots, pts);
    for (int i = 0; i < 6; ++i) CHECK(eval_curve(fit, knots[i]) == pts.row(i).transpose());
    for (double x = 0; x <= 6; x += 0.137)
        for (int c = 0; c < 2; ++c)
            CHECK(eval_curve(fit, x)[c] == Approx(oracle::dense_spline(knots, pts.col(c), x)).epsilon(1e-10).scale(1.0));
    CHECK(fit.boundary == "natural");
    CHECK(std::abs(fit.second(0, 0)) < 1e-12);
    CHECK(std::abs(fit.second(5, 1)) < 1e-12);

    // Central difference of the spline against its derivative.
    const double h = 1e-6;
    Vec fd = (eval_curve(fit, 2.0 + h) - eval_curve(fit, 2.0 - h)) / (2 * h);
    CHECK((eval_curve_derivative(fit, 2.0) - fd).norm() < 1e-6);
}

TEST_CASE("spline on collinear and smooth data") {
    Vec k3(3);
    k3 << 0, 1, 3;
    Mat line(3, 1);
    line << 2, 4, 8;
    auto fl = fit_curve(k3, line);
    for (double x = 0; x <= 3; x += 0.01) CHECK(std::abs(eval_curve(fl, x)[0] - (2 + 2 * x)) < 1e-9);

    Vec k9 = Vec::LinSpaced(9, 0.0, M_PI);
    Mat s(9, 1);
    for (int i = 0; i < 9; ++i) s(i, 0) = std::sin(k9[i]);
    auto fs = fit_curve(k9, s);
    double worst = 0;
    for (double x = 0; x <= M_PI; x += 1e-3) worst = std::max(worst, std::abs(eval_curve(fs, x)[0] - std::sin(x)));
    CHECK(worst < 0.01);
}

TEST_CASE("spline argument checks") {
    Vec k(3);
    k << 0, 1, 1;
    CHECK_THROWS_AS(fit_curve(k, Mat::Zero(3, 1)), std::invalid_argument);
    CHECK_THROWS_AS(fit_curve(Vec::LinSpaced(2, 0, 1), Mat::Zero(2, 1)), std::invalid_argument);
    auto fit = fit_curve(Vec::LinSpaced(3, 0, 2), Mat::Zero(3, 1));
    CHECK_THROWS_AS(eval_curve(fit, 2.0001), std::out_of_range);
    CHECK_THROWS_AS(eval_curve(fit, -0.1), std::out_of_range);
}

TEST_CASE("mixture interpolation") {
    Vec k = Vec::LinSpaced(5, 0, 4);
    Mat a = Mat::Random(5, 3), b = Mat::Random(5, 3);
    auto cu = fit_curve(k, a), cs = fit_curve(k, b);
    Vec c0 = Vec::Random(3);
    CHECK(mixture_interp(c0, cu, cs, 1.5, 2.5, 1.5, 2.5) == c0);
    Vec p = mixture_interp(c0, cu, cs, 1, 2, 3, 0);
    Vec expect = c0 + (a.row(3) - a.row(1)).transpose() + (b.row(0) - b.row(2)).transpose();
    CHECK((p - expect).norm() < 1e-12);
    CHECK_THROWS_AS(mixture_interp(c0, cu, cs, 1, 2, 5, 0), std::out_of_range);
}

TEST_CASE("mixture study: additive generators match, cross terms do not") {
    auto m = run_mixture_study(0);
    CHECK(m.rows.size() == 25);
    CHECK(m.noise_floor > 0.0);
    CHECK(m.max_err_additive <= m.noise_floor);
    CHECK(m.max_err_cross > 5.0 * m.noise_floor);
}
