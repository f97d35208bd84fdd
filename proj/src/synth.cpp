#include "beliefmap/synth.hpp"

#include "beliefmap/steering.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace bm {

namespace {

constexpr double kMuLo = 0.0, kMuHi = 1000.0;
constexpr double kSigmaLo = 0.0, kSigmaHi = 200.0;
// Location offset of the head's quadratic logits.
constexpr double kHeadCentre = 500.0;
const double kScales[kSynthFeatures] = {0.7, 1.0, 1.0, 1.5, 1.5, 0.5, 0.5, 0.5, 0.5, 1.0};

double to_unit(double v, double lo, double hi) { return 2.0 * (v - lo) / (hi - lo) - 1.0; }

}  // namespace

void SynthConfig::validate() const {
    if (d < 2 * kSynthFeatures) throw std::invalid_argument("synth d must be >= 20");
    if (n_per_class < 1) throw std::invalid_argument("n_per_class must be >= 1");
    if (mu_grid.empty() || sigma_grid.empty()) throw std::invalid_argument("grids must be nonempty");
    for (double m : mu_grid)
        if (!(m >= 0 && m <= 999)) throw std::invalid_argument("mu_grid values must lie in [0, 999]");
    for (double s : sigma_grid)
        if (!(s > 0 && s < kSigmaHi)) throw std::invalid_argument("sigma_grid values must lie in (0, 200)");
    if (!(noise_std >= 0)) throw std::invalid_argument("noise_std must be >= 0");
    if (!(curvature >= 0)) throw std::invalid_argument("curvature must be >= 0");
    if (!(cross_term >= 0)) throw std::invalid_argument("cross_term must be >= 0");
}

SynthWorld::SynthWorld(const SynthConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    std::mt19937_64 rng(cfg_.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Mat G(cfg_.d, kSynthFeatures);
    for (int j = 0; j < kSynthFeatures; ++j)
        for (int i = 0; i < cfg_.d; ++i) G(i, j) = nd(rng);
    Eigen::HouseholderQR<Mat> qr(G);
    Mat R = qr.matrixQR().topRows(kSynthFeatures).triangularView<Eigen::Upper>();
    for (int j = 0; j < kSynthFeatures; ++j)
        if (std::abs(R(j, j)) < 1e-10) throw NumericalError("rank deficiency in feature matrix");
    Mat Q = qr.householderQ() * Mat::Identity(cfg_.d, kSynthFeatures);
    // Fix column signs so Q does not depend on the QR sign convention.
    for (int j = 0; j < kSynthFeatures; ++j)
        if (R(j, j) < 0) Q.col(j) *= -1.0;
    A_ = Q * Eigen::Map<const Vec>(kScales, kSynthFeatures).asDiagonal() * (std::sqrt(cfg_.d) / 2.0);
    build_head();
}

Vec SynthWorld::features(double mu, double sigma) const {
    const double m = to_unit(mu, kMuLo, kMuHi), s = to_unit(sigma, kSigmaLo, kSigmaHi);
    const double k = cfg_.curvature, c = cfg_.cross_term;
    Vec f(kSynthFeatures);
    f << 1.0, m, s, k * std::sin(M_PI * m), k * std::cos(M_PI * m), k * std::sin(M_PI * s), k * std::cos(M_PI * s),
        k * m * m, k * s * s, c * m * s;
    return f;
}

Vec SynthWorld::phi(double mu, double sigma) const { return A_ * features(mu, sigma); }

Eigen::Matrix<double, Eigen::Dynamic, 2> SynthWorld::jacobian(double mu, double sigma) const {
    const double m = to_unit(mu, kMuLo, kMuHi), s = to_unit(sigma, kSigmaLo, kSigmaHi);
    const double k = cfg_.curvature, c = cfg_.cross_term;
    Vec dm(kSynthFeatures), ds(kSynthFeatures);
    dm << 0, 1, 0, k * M_PI * std::cos(M_PI * m), -k * M_PI * std::sin(M_PI * m), 0, 0, 2 * k * m, 0, c * s;
    ds << 0, 0, 1, 0, 0, k * M_PI * std::cos(M_PI * s), -k * M_PI * std::sin(M_PI * s), 0, 2 * k * s, c * m;
    Eigen::Matrix<double, Eigen::Dynamic, 2> J(cfg_.d, 2);
    J.col(0) = A_ * dm * (2.0 / (kMuHi - kMuLo));
    J.col(1) = A_ * ds * (2.0 / (kSigmaHi - kSigmaLo));
    return J;
}

std::pair<double, double> SynthWorld::decode(const Vec& x) const {
    if (x.size() != cfg_.d) throw std::invalid_argument("decode: dimension mismatch");
    double best_mu = 0, best_sigma = 0, best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 100; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double mu = kMuLo + (kMuHi - kMuLo) * i / 100.0;
            const double sg = kSigmaLo + (kSigmaHi - kSigmaLo) * j / 40.0;
            const double r = (x - phi(mu, sg)).squaredNorm();
            if (r < best) {
                best = r;
                best_mu = mu;
                best_sigma = sg;
            }
        }
    double mu = best_mu, sg = best_sigma;
    for (int it = 0; it < 100; ++it) {
        Vec r = x - phi(mu, sg);
        auto J = jacobian(mu, sg);
        Eigen::Vector2d step = (J.transpose() * J).ldlt().solve(J.transpose() * r);
        double t = 1.0, cur = r.squaredNorm();
        double nmu = mu, nsg = sg;
        for (int h = 0; h < 30; ++h) {
            nmu = std::clamp(mu + t * step[0], kMuLo, kMuHi);
            nsg = std::clamp(sg + t * step[1], kSigmaLo, kSigmaHi);
            if ((x - phi(nmu, nsg)).squaredNorm() <= cur) break;
            t *= 0.5;
        }
        const double moved = std::abs(nmu - mu) + std::abs(nsg - sg);
        mu = nmu;
        sg = nsg;
        if (moved < 1e-12) break;
    }
    return {mu, sg};
}

void SynthWorld::build_head() {
    // Exponential-family fit: for y = phi / rms(phi), regress the precision
    // 1/(2 sigma^2) and location (mu - c)/sigma^2 on y, with rows weighted by
    // sigma^2 so both targets are O(1). Logits -(k-c)^2 a + (k-c) b then equal a
    // discretized normal's log-mass up to a constant.
    const double lo = std::max(0.0, *std::min_element(cfg_.mu_grid.begin(), cfg_.mu_grid.end()) - 100.0);
    const double hi = std::min(999.0, *std::max_element(cfg_.mu_grid.begin(), cfg_.mu_grid.end()) + 100.0);
    const auto mus = linspace(lo, hi, 81);
    const auto n = static_cast<Eigen::Index>(mus.size() * cfg_.sigma_grid.size());
    const double eps = 1e-6;
    Mat Y(n, cfg_.d);
    Vec ta(n), tb(n);
    Eigen::Index row = 0;
    for (double s : cfg_.sigma_grid)
        for (double m : mus) {
            Vec x = phi(m, s);
            const double rms = std::sqrt(x.squaredNorm() / static_cast<double>(cfg_.d) + eps);
            const double w = s * s;
            Y.row(row) = (x / rms).transpose() * w;
            ta[row] = w / (2.0 * s * s);
            tb[row] = w * (m - kHeadCentre) / (s * s);
            ++row;
        }
    Mat Gm = Y.transpose() * Y / static_cast<double>(n);
    const double lam = 1e-4 * Gm.trace() / static_cast<double>(cfg_.d);
    Gm.diagonal().array() += lam;
    Eigen::LDLT<Mat> ldlt(Gm);
    Vec alpha = ldlt.solve(Y.transpose() * ta / static_cast<double>(n));
    Vec beta = ldlt.solve(Y.transpose() * tb / static_cast<double>(n));

    head_.norm = "rms";
    head_.norm_epsilon = eps;
    head_.norm_weights = Eigen::VectorXf::Ones(cfg_.d);
    head_.unembed.resize(kTokens, cfg_.d);
    head_.token_value_map.resize(kTokens);
    for (int k = 0; k < kTokens; ++k) {
        const double u = k - kHeadCentre;
        head_.unembed.row(k) = (-u * u * alpha + u * beta).transpose().cast<float>();
        head_.token_value_map[k] = k;
    }

    fit_ = {};
    for (double s : cfg_.sigma_grid)
        for (double m : cfg_.mu_grid) {
            auto ms = dist_mean_std(readout(phi(m, s), head_));
            fit_.max_mean_err = std::max(fit_.max_mean_err, std::abs(ms.mean - m));
            fit_.max_std_err = std::max(fit_.max_std_err, std::abs(ms.std - s));
        }
}

ActivationSet sample_set(const SynthWorld& world, const SynthConfig& cfg) {
    if (cfg.d != world.config().d) throw std::invalid_argument("config d differs from world d");
    // Independent stream from the one that built the world.
    std::mt19937_64 rng(cfg.seed ^ 0x9E3779B97F4A7C15ULL);
    std::normal_distribution<double> nd(0.0, 1.0);
    ActivationSet set;
    set.layer = cfg.layer;
    std::int64_t grid_idx = 0;
    for (double s : cfg.sigma_grid)
        for (double m : cfg.mu_grid) {
            Vec c = world.phi(m, s);
            for (int i = 0; i < cfg.n_per_class; ++i) {
                ActivationRecord r;
                r.vector.resize(static_cast<std::size_t>(cfg.d));
                for (int j = 0; j < cfg.d; ++j) r.vector[j] = static_cast<float>(c[j] + cfg.noise_std * nd(rng));
                r.mu = m;
                r.sigma = s;
                r.t = i;
                r.layer = cfg.layer;
                r.seq_id = grid_idx;
                set.records.push_back(std::move(r));
            }
            ++grid_idx;
        }
    return set;
}

Mat class_centroids(const ActivationSet& set, const std::vector<double>& mu_grid, double sigma) {
    Mat C = Mat::Zero(static_cast<Eigen::Index>(mu_grid.size()), set.d());
    std::vector<int> counts(mu_grid.size(), 0);
    for (const auto& r : set.records) {
        if (r.sigma != sigma) continue;
        auto it = std::find(mu_grid.begin(), mu_grid.end(), r.mu);
        if (it == mu_grid.end()) continue;
        auto i = it - mu_grid.begin();
        for (int j = 0; j < set.d(); ++j) C(i, j) += r.vector[j];
        ++counts[i];
    }
    for (std::size_t i = 0; i < mu_grid.size(); ++i) {
        if (counts[i] == 0) throw std::invalid_argument("no samples for mu " + fmt(mu_grid[i]) + " sigma " + fmt(sigma));
        C.row(static_cast<Eigen::Index>(i)) /= counts[i];
    }
    return C;
}

SynthConfig synth_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("bad synth config: ") + e.what());
    }
    SynthConfig c;
    try {
        c.d = j.value("d", c.d);
        c.n_per_class = j.value("n_per_class", c.n_per_class);
        c.mu_grid = j.value("mu_grid", c.mu_grid);
        c.sigma_grid = j.value("sigma_grid", c.sigma_grid);
        c.noise_std = j.value("noise_std", c.noise_std);
        c.curvature = j.value("curvature", c.curvature);
        c.cross_term = j.value("cross_term", c.cross_term);
        c.seed = j.value("seed", c.seed);
        c.layer = j.value("layer", c.layer);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("bad synth config field: ") + e.what());
    }
    c.validate();
    return c;
}

std::string synth_config_to_json(const SynthConfig& c) {
    nlohmann::json j = {{"d", c.d},
                        {"n_per_class", c.n_per_class},
                        {"mu_grid", c.mu_grid},
                        {"sigma_grid", c.sigma_grid},
                        {"noise_std", c.noise_std},
                        {"curvature", c.curvature},
                        {"cross_term", c.cross_term},
                        {"seed", c.seed},
                        {"layer", c.layer}};
    return j.dump(2);
}

}  // namespace bm
