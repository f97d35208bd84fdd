#pragma once

#include "beliefmap/geometry.hpp"
#include "beliefmap/observer.hpp"
#include "beliefmap/probes.hpp"
#include "beliefmap/steering.hpp"
#include "beliefmap/synth.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace bm {

// Noiseless field: row i is phi(mu_i, sigma) over the world's mu grid.
ProbeField phi_field(const SynthWorld& world, double sigma);

// Linear field probe study on a synthetic world.
struct LfpStudy {
    ProbeField field;
    double accuracy = 0.0;
    double ovr_accuracy = 0.0;
    Mat gram;
    std::vector<double> loo_mu;   // interior classes
    std::vector<double> loo_cos;  // kernel interpolation from neighbours vs trained probe
    double kernel_350_cos = 0.0;  // 350 from {300, 400}, when those classes exist
    std::vector<TransferPoint> transfer;
    double untrained_accuracy = 0.0;
    double random_cos = 0.0;  // cosine of two random d-vectors, the noise floor
};

LfpStudy run_lfp_study(const SynthConfig& cfg, const TrainHyper& hyper = {});

struct SteeringStudy {
    double sigma0 = 100.0;
    // Linear diff-of-means and spline schemes at matched induced mean 500.
    double linear_alpha = 0.0, linear_mean = 0.0, linear_std = 0.0;
    double spline_mu = 0.0, spline_mean = 0.0, spline_std = 0.0;
    SteerReport linear, spline;
    // probe_dir sweep over alpha in [0, 2 |w_b - w_a|].
    SteerReport probe;
    std::optional<double> probe_violation_alpha;  // first alpha leaving the 10% band
    // Field-aware sweep 300 -> 500 with trained probes.
    int field_rank = 0;
    double field_gain = 0.0;
    SteerReport field;
    double field_max_rel_dev = 0.0;
    bool field_monotone = false;
    // Same sweep with Bayes-optimal probes (centroids / noise variance).
    SteerReport field_bayes;
    double field_bayes_max_rel_dev = 0.0;
    bool field_bayes_monotone = false;
};

SteeringStudy run_steering_study(const SynthConfig& cfg, const TrainHyper& hyper = {});

struct MixtureRow {
    double mu = 0.0, sigma = 0.0, err_additive = 0.0, err_cross = 0.0;
};

struct MixtureStudy {
    double noise_floor = 0.0;  // 3 noise_std sqrt(d / n)
    double max_err_additive = 0.0;
    double max_err_cross = 0.0;
    std::vector<MixtureRow> rows;
};

// Sheet of (mu, sigma) centroids; additive world (cross_term 0) against a
// cross-term world with the same seed.
MixtureStudy run_mixture_study(std::uint64_t seed, double cross_term = 4.0);

struct ObserverCheck {
    std::int64_t t = 0;
    double closed_mean = 0.0, closed_std = 0.0;
    double sim_mean = 0.0, sim_std = 0.0;  // averaged over seeds
};

// 1000 draws of N(m1, sigma) then 1000 of N(m2, sigma); observer moments at the
// requested t averaged over `seeds` series.
std::vector<ObserverCheck> run_observer_check(const std::vector<std::int64_t>& ts, int seeds, std::uint64_t seed0,
                                              double m1 = 300, double m2 = 700, double sigma = 100,
                                              std::int64_t t_switch = 1000);

// Experiment ids accepted by reproduce, in canonical order.
const std::vector<std::string>& experiment_ids();
// Exact id or unique prefix; throws std::invalid_argument otherwise.
std::string resolve_experiment(const std::string& id_or_prefix);
// Writes the experiment's CSV/JSON bundle into out_dir; returns written files.
// Synthetic-world experiments start from `synth` with its seed replaced by `seed`.
std::vector<std::filesystem::path> reproduce(const std::string& id, const std::filesystem::path& out_dir,
                                             std::uint64_t seed, const SynthConfig& synth = {});

}  // namespace bm
