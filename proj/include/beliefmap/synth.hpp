#pragma once

#include "beliefmap/dataio.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace bm {

struct SynthConfig {
    int d = 64;
    int n_per_class = 200;
    std::vector<double> mu_grid{300, 350, 400, 450, 500, 550, 600, 650, 700};
    std::vector<double> sigma_grid{100};
    double noise_std = 0.25;
    double curvature = 1.0;
    double cross_term = 0.0;
    std::uint64_t seed = 0;
    int layer = 0;

    void validate() const;
};

inline constexpr int kSynthFeatures = 10;

struct HeadFit {
    double max_mean_err = 0.0;
    double max_std_err = 0.0;
};

class SynthWorld {
public:
    explicit SynthWorld(const SynthConfig& cfg);

    const SynthConfig& config() const { return cfg_; }
    const Mat& A() const { return A_; }
    const HeadParams& head() const { return head_; }
    const HeadFit& head_fit() const { return fit_; }

    // mu in [0, 1000] and sigma in [0, 200] map affinely to [-1, 1].
    Vec features(double mu, double sigma) const;
    Vec phi(double mu, double sigma) const;
    // Columns d/dmu, d/dsigma of phi.
    Eigen::Matrix<double, Eigen::Dynamic, 2> jacobian(double mu, double sigma) const;
    // Least-squares inverse of phi over the box domain: grid search, then
    // projected Gauss-Newton.
    std::pair<double, double> decode(const Vec& x) const;

private:
    void build_head();

    SynthConfig cfg_;
    Mat A_;
    HeadParams head_;
    HeadFit fit_;
};

// n_per_class noisy samples per (mu, sigma) grid point; t is the sample index
// within its grid point and seq_id the grid point index.
ActivationSet sample_set(const SynthWorld& world, const SynthConfig& cfg);

// Sample mean per mu in cfg.mu_grid at a given sigma (rows in grid order).
Mat class_centroids(const ActivationSet& set, const std::vector<double>& mu_grid, double sigma);

// Parses a JSON config; missing keys keep their defaults.
SynthConfig synth_config_from_json(const std::string& text);
std::string synth_config_to_json(const SynthConfig& cfg);

}  // namespace bm
