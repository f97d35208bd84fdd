#include "beliefmap/metrics.hpp"
#include "beliefmap/observer.hpp"

#include "oracles.hpp"
#include "util.hpp"

#include <doctest.h>

#include <fstream>
#include <random>

using namespace bm;
using doctest::Approx;

namespace {

ProbVec point_mass(int k) {
    Vec w = Vec::Zero(kTokens);
    w[k] = 1.0;
    return ProbVec::normalized(w);
}

ProbVec random_probvec(std::mt19937_64& rng, double sparsity = 0.0) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Vec w(kTokens);
    for (int k = 0; k < kTokens; ++k) w[k] = u(rng) < sparsity ? 0.0 : -std::log(u(rng));
    return ProbVec::normalized(w);
}

std::pair<double, double> brute_moments(const Vec& p) {
    long double m = 0, v = 0;
    for (int k = 0; k < kTokens; ++k) m += k * static_cast<long double>(p[k]);
    for (int k = 0; k < kTokens; ++k) v += (k - m) * (k - m) * static_cast<long double>(p[k]);
    return {static_cast<double>(m), static_cast<double>(std::sqrt(v))};
}

}  // namespace

TEST_CASE("softmax with temperature") {
    ProbVec u = softmax_T(Vec::Constant(kTokens, 3.7));
    CHECK(u.p().minCoeff() == Approx(1e-3).epsilon(1e-12));
    CHECK(u.p().maxCoeff() == Approx(1e-3).epsilon(1e-12));

    Vec spike = Vec::Zero(kTokens);
    spike[0] = 1.0;
    ProbVec hot = softmax_T(spike, 1000.0);
    CHECK(hot.p().maxCoeff() - hot.p().minCoeff() < 1e-3);
    CHECK_THROWS_AS(softmax_T(spike, 0.0), std::invalid_argument);

    // Huge logits must not overflow.
    ProbVec big = softmax_T(spike * 1e6);
    CHECK(big[0] == Approx(1.0));
}

TEST_CASE("log mass inverts the softmax") {
    ProbVec p = discretized_normal({420, 60});
    ProbVec q = softmax_T(log_mass(p));
    CHECK((p.p() - q.p()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("discretized normal against quadrature of the density") {
    for (auto [mu, sigma] : {std::pair{500.0, 100.0}, {250.0, 40.0}, {930.0, 50.0}}) {
        ProbVec p = discretized_normal({mu, sigma});
        Vec ref = oracle::binned_density([&](double x) { return oracle::normal_pdf(x, mu, sigma); }, 12 * sigma);
        CHECK((p.p() - ref).cwiseAbs().maxCoeff() < 1e-9);
    }
}

TEST_CASE("standard normal puts Phi(0.5) in bin 0") {
    ProbVec p = discretized_normal({0, 1});
    // Phi(0.5) from a printed table.
    CHECK(p[0] == Approx(0.6915).epsilon(2e-4));
    CHECK(p[1] == Approx(0.9332 - 0.6915).epsilon(1e-3));
}

TEST_CASE("moments and entropy of discretized normals") {
    ProbVec p = discretized_normal({500, 100});
    auto ms = dist_mean_std(p);
    CHECK(std::abs(ms.mean - 500.0) <= 0.01);
    CHECK(std::abs(ms.std - 100.0) <= 0.1);
    CHECK(std::abs(entropy(p) - 6.024) <= 0.01);
    CHECK(std::abs(entropy(discretized_normal({500, 20})) - 4.415) <= 0.02);
    CHECK(std::abs(kl(p, ProbVec{}) - 0.884) <= 0.01);
    CHECK(kl(p, ProbVec{}) == Approx(std::log(1000.0) - entropy(p)).epsilon(1e-12));
}

TEST_CASE("interior normals keep their moments") {
    for (double mu = 300; mu <= 700; mu += 100)
        for (double sigma : {10.0, 60.0, 140.0}) {
            if (std::min(mu, 999.0 - mu) < 5 * sigma) continue;
            auto ms = dist_mean_std(discretized_normal({mu, sigma}));
            CHECK(std::abs(ms.mean - mu) <= 0.05);
            CHECK(std::abs(ms.std - sigma) / sigma <= 0.01);
        }
}

TEST_CASE("entropy and moments of degenerate distributions") {
    CHECK(entropy(ProbVec{}) == Approx(std::log(1000.0)));
    ProbVec pm = point_mass(500);
    CHECK(entropy(pm) == 0.0);
    CHECK(dist_mean_std(pm).mean == 500.0);
    CHECK(dist_mean_std(pm).std == 0.0);
}

TEST_CASE("divergences against brute force") {
    std::mt19937_64 rng(4);
    for (int rep = 0; rep < 20; ++rep) {
        ProbVec p = random_probvec(rng), q = random_probvec(rng);
        CHECK(kl(p, q) == Approx(oracle::kl(p.p(), q.p())).epsilon(1e-10));
        CHECK(hellinger(p, q) == Approx(oracle::hellinger(p.p(), q.p())).epsilon(1e-10));
        CHECK(entropy(p) == Approx(oracle::entropy(p.p())).epsilon(1e-12));
        auto [m, s] = brute_moments(p.p());
        CHECK(dist_mean_std(p).mean == Approx(m).epsilon(1e-12));
        CHECK(dist_mean_std(p).std == Approx(s).epsilon(1e-10));
    }
    ProbVec a = discretized_normal({500, 100}), b = discretized_normal({510, 100});
    const double h = hellinger(a, b);
    CHECK(h > 0.0);
    CHECK(h < 1.0);
    CHECK(h == Approx(oracle::hellinger(a.p(), b.p())).epsilon(1e-12));
}

TEST_CASE("divergence identities and limits") {
    ProbVec p = discretized_normal({300, 30});
    CHECK(kl(p, p) == 0.0);
    CHECK(hellinger(p, p) == 0.0);
    CHECK(hellinger(point_mass(3), point_mass(900)) == Approx(1.0));
    CHECK(std::isinf(kl(ProbVec{}, point_mass(3))));
    CHECK(std::isfinite(kl(point_mass(3), ProbVec{})));
}

TEST_CASE("kl is non-negative and hellinger is a metric on random triples") {
    std::mt19937_64 rng(17);
    for (int rep = 0; rep < 200; ++rep) {
        ProbVec p = random_probvec(rng, 0.3), q = random_probvec(rng), r = random_probvec(rng, 0.5);
        CHECK(kl(p, q) >= 0.0);
        CHECK(hellinger(p, q) == hellinger(q, p));
        CHECK(hellinger(p, r) <= hellinger(p, q) + hellinger(q, r) + 1e-12);
        CHECK(hellinger(p, q) <= 1.0);
    }
}

TEST_CASE("trajectory caches match recomputation") {
    std::mt19937_64 rng(8);
    std::vector<ProbVec> ps;
    std::vector<std::int64_t> ts;
    for (int i = 0; i < 12; ++i) {
        ps.push_back(random_probvec(rng));
        ts.push_back(3 * i + 1);
    }
    auto tr = make_trajectory(ts, ps);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK(tr.means[i] == dist_mean_std(ps[i]).mean);
        CHECK(tr.stds[i] == dist_mean_std(ps[i]).std);
        CHECK(tr.entropies[i] == entropy(ps[i]));
    }
    CHECK_THROWS_AS(make_trajectory({2, 1}, {ps[0], ps[1]}), std::invalid_argument);
}

TEST_CASE("equilibration time edge cases") {
    const DistSpec target{500, 100};
    std::vector<ProbVec> ps(5, discretized_normal(target));
    auto tr = make_trajectory({10, 11, 12, 13, 14}, ps);
    CHECK(equilibration_time(tr, target, 1, 1, 10) == 0);
    auto far = make_trajectory({10, 11}, {discretized_normal({200, 100}), discretized_normal({210, 100})});
    CHECK_FALSE(equilibration_time(far, target, 1, 1, 10).has_value());
    // Entering the band and leaving again does not count.
    auto flicker = make_trajectory({1, 2, 3, 4}, {discretized_normal({300, 100}), discretized_normal({500, 100}),
                                                  discretized_normal({300, 100}), discretized_normal({500, 100})});
    CHECK(equilibration_time(flicker, target, 5, 5, 1) == 3);
}

TEST_CASE("equilibration after a switch matches a brute-force scan") {
    // Moments follow the observer closed forms after a 300 -> 700 switch.
    std::vector<std::int64_t> ts;
    std::vector<ProbVec> ps;
    for (std::int64_t t = 1000; t <= 80000; t += 100) {
        ts.push_back(t);
        ps.push_back(discretized_normal({std::min(999.0, closed_form_mean(t, 300, 700, 1000)),
                                         closed_form_std(t, 100, 300, 700, 1000)}));
    }
    auto tr = make_trajectory(ts, ps);
    const DistSpec target{700, 100};
    for (double tol_std : {10.0, 20.0}) {
        const double tol_mean = 400;
        std::optional<std::int64_t> expect;
        for (std::size_t i = ts.size(); i-- > 0;) {
            auto [m, s] = brute_moments(ps[i].p());
            if (std::abs(m - target.mu) > tol_mean || std::abs(s - target.sigma) > tol_std) break;
            expect = ts[i] - 1000;
        }
        REQUIRE(expect.has_value());
        CHECK(equilibration_time(tr, target, tol_mean, tol_std, 1000) == expect);
    }
}

TEST_CASE("trajectory CSV layout") {
    testutil::TempDir tmp;
    auto tr = make_trajectory({1, 2}, {discretized_normal({400, 50}), discretized_normal({450, 50})});
    write_trajectory_csv(tr, discretized_normal({500, 100}), tmp / "t.csv");
    std::ifstream in(tmp / "t.csv");
    std::string header, row1, row2;
    std::getline(in, header);
    std::getline(in, row1);
    std::getline(in, row2);
    CHECK(header == "t,mean,std,entropy,kl_to_ref,hellinger_to_prev");
    CHECK(row1.rfind("1,", 0) == 0);
    CHECK(row2.rfind("2,", 0) == 0);
}
