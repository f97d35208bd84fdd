#include "beliefmap/embedding.hpp"
#include "beliefmap/steering.hpp"
#include "beliefmap/synth.hpp"

#include <doctest.h>

using namespace bm;

namespace {

double chord_gap(double curvature) {
    SynthConfig cfg;
    cfg.curvature = curvature;
    SynthWorld w(cfg);
    return (0.5 * (w.phi(300, 100) + w.phi(700, 100)) - w.phi(500, 100)).norm();
}

}  // namespace

TEST_CASE("decode inverts the feature map") {
    SynthWorld w(SynthConfig{});
    auto [mu, sigma] = w.decode(w.phi(412, 87));
    CHECK(std::abs(mu - 412) <= 1e-6);
    CHECK(std::abs(sigma - 87) <= 1e-6);
    for (double m : w.config().mu_grid)
        for (double s : {40.0, 100.0, 160.0}) {
            auto [dm, ds] = w.decode(w.phi(m, s));
            CHECK(std::abs(dm - m) <= 1e-6);
            CHECK(std::abs(ds - s) <= 1e-6);
        }
    CHECK_THROWS_AS(w.decode(Vec::Zero(3)), std::invalid_argument);
}

TEST_CASE("jacobian matches finite differences") {
    SynthWorld w(SynthConfig{});
    auto J = w.jacobian(455, 90);
    const double h = 1e-4;
    Vec dmu = (w.phi(455 + h, 90) - w.phi(455 - h, 90)) / (2 * h);
    Vec dsg = (w.phi(455, 90 + h) - w.phi(455, 90 - h)) / (2 * h);
    CHECK((J.col(0) - dmu).norm() < 1e-6 * (1 + dmu.norm()));
    CHECK((J.col(1) - dsg).norm() < 1e-6 * (1 + dsg.norm()));
}

TEST_CASE("flat generator spans a plane") {
    SynthConfig cfg;
    cfg.curvature = 0;
    cfg.cross_term = 0;
    SynthWorld w(cfg);
    Mat X(27, cfg.d);
    int i = 0;
    for (double m = 300; m <= 700; m += 50)
        for (double s : {50.0, 100.0, 150.0}) X.row(i++) = w.phi(m, s).transpose();
    auto e = pca(X, 4);
    CHECK(e.axis_weights[1] > 1e-6 * e.axis_weights[0]);
    CHECK(e.axis_weights[2] < 1e-12 * e.axis_weights[0]);
}

TEST_CASE("chord gap grows with curvature") {
    CHECK(chord_gap(0.0) < 1e-12);
    double prev = chord_gap(0.0);
    for (double c : {0.25, 0.5, 1.0, 2.0, 4.0}) {
        const double g = chord_gap(c);
        CHECK(g > prev);
        prev = g;
    }
}

TEST_CASE("head reads the manifold back as the intended distribution") {
    SynthWorld w(SynthConfig{});
    CHECK(w.head_fit().max_mean_err <= 2.0);
    CHECK(w.head_fit().max_std_err <= 3.0);
    CHECK_NOTHROW(w.head().validate());
    for (double m : w.config().mu_grid) {
        auto ms = dist_mean_std(readout(w.phi(m, 100), w.head()));
        CHECK(std::abs(ms.mean - m) <= 2.0);
        CHECK(std::abs(ms.std - 100) <= 3.0);
    }
}

TEST_CASE("sampling") {
    SynthConfig cfg;
    cfg.noise_std = 0;
    cfg.n_per_class = 4;
    SynthWorld w(cfg);
    auto clean = sample_set(w, cfg);
    CHECK(clean.size() == 36);
    auto c = clean.select_mu(400);
    for (std::size_t i = 1; i < c.size(); ++i) CHECK(c.records[i].vector == c.records[0].vector);
    CHECK(c.records[3].t == 3);

    SynthConfig noisy;
    SynthWorld wn(noisy);
    auto set = sample_set(wn, noisy);
    CHECK(set.size() == 9 * 200);
    Mat cent = class_centroids(set, noisy.mu_grid, 100);
    for (std::size_t i = 0; i < noisy.mu_grid.size(); ++i) {
        Vec err = cent.row(static_cast<Eigen::Index>(i)).transpose() - wn.phi(noisy.mu_grid[i], 100);
        const double rms = err.norm() / std::sqrt(static_cast<double>(noisy.d));
        CHECK(rms <= 3.0 * noisy.noise_std / std::sqrt(noisy.n_per_class));
    }
    CHECK(sample_set(wn, noisy) == set);
    CHECK_THROWS_AS(class_centroids(set, noisy.mu_grid, 50), std::invalid_argument);
}

TEST_CASE("world depends on the seed") {
    SynthConfig a, b;
    b.seed = 1;
    CHECK(SynthWorld(a).A() == SynthWorld(a).A());
    CHECK_FALSE(SynthWorld(a).A() == SynthWorld(b).A());
}

TEST_CASE("config validation and JSON") {
    SynthConfig cfg;
    cfg.d = 19;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg.d = 32;
    cfg.mu_grid.clear();
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);

    SynthConfig x;
    x.d = 40;
    x.curvature = 2.5;
    x.sigma_grid = {50, 90};
    x.seed = 77;
    SynthConfig back = synth_config_from_json(synth_config_to_json(x));
    CHECK(back.d == 40);
    CHECK(back.curvature == 2.5);
    CHECK(back.sigma_grid == std::vector<double>{50, 90});
    CHECK(back.seed == 77);

    SynthConfig partial = synth_config_from_json(R"({"noise_std": 0.5})");
    CHECK(partial.noise_std == 0.5);
    CHECK(partial.d == 64);
    CHECK_THROWS_AS(synth_config_from_json("{"), FormatError);
    CHECK_THROWS_AS(synth_config_from_json(R"({"d": "wide"})"), std::invalid_argument);
}
