#pragma once

#include "beliefmap/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

namespace bm {

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

struct BeliefTrajectory {
    std::vector<std::int64_t> t;
    std::vector<ProbVec> probs;
    std::vector<double> means, stds, entropies;

    std::size_t size() const { return probs.size(); }
};

ProbVec softmax_T(const Vec& logits, double T = 1.0);

// Bins a continuous CDF onto 0..999 with unit-width bins centred on integers;
// bins 0 and 999 absorb the tails.
ProbVec discretize_cdf(const std::function<double(double)>& cdf);

ProbVec discretized_normal(const DistSpec& spec);

// Log-mass of a discretized normal; softmax_T(., 1) recovers the ProbVec.
Vec log_mass(const ProbVec& p);

// KL(p || q) in nats. Returns +infinity when p has mass where q has none.
double kl(const ProbVec& p, const ProbVec& q);
double hellinger(const ProbVec& p, const ProbVec& q);
double entropy(const ProbVec& p);
MeanStd dist_mean_std(const ProbVec& p);

BeliefTrajectory make_trajectory(std::vector<std::int64_t> t, std::vector<ProbVec> probs);

// Smallest dt such that every step with t >= from_t + dt is within tolerance of
// the target; nullopt when no such dt exists.
std::optional<std::int64_t> equilibration_time(const BeliefTrajectory& traj, const DistSpec& target,
                                               double tol_mean, double tol_std, std::int64_t from_t);

// Columns: t, mean, std, entropy, kl_to_ref, hellinger_to_prev.
void write_trajectory_csv(const BeliefTrajectory& traj, const ProbVec& ref,
                          const std::filesystem::path& path);

}  // namespace bm
