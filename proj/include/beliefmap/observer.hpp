#pragma once

#include "beliefmap/metrics.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace bm {

struct ObserverPrior {
    double mu0 = 500.0;
    double kappa0 = 1e-6;
    double alpha0 = 1e-3;
    double beta0 = 1e-3;

    void validate() const;
};

struct PredictiveState {
    double mu = 0.0, kappa = 0.0, alpha = 0.0, beta = 0.0;
    std::int64_t n = 0;

    static PredictiveState from_prior(const ObserverPrior& p);
};

struct Predictive {
    double location = 0.0;
    double scale = 0.0;
    double dof = 0.0;
    bool finite_variance = false;

    // sqrt(scale^2 dof / (dof - 2)); infinity when dof <= 2.
    double std() const;
};

PredictiveState nig_update(const PredictiveState& s, double x);
Predictive predictive_params(const PredictiveState& s);
// Student-t predictive binned onto 0..999 with exact CDF differences.
ProbVec predictive_probvec(const Predictive& pred);

double closed_form_mean(std::int64_t t, double m1, double m2, std::int64_t t_switch);
double closed_form_std(std::int64_t t, double sigma, double m1, double m2, std::int64_t t_switch);

// Sequential updates over the series. Row t describes the predictive after
// observing values[0..t-1], for t = 1..N. When `at` is given only those t are
// discretized (updates still run over the full prefix).
BeliefTrajectory observer_trajectory(const std::vector<int>& values, const ObserverPrior& prior,
                                     const std::vector<std::int64_t>& at = {});

struct EquilibrationComparison {
    std::optional<std::int64_t> observer_dt;
    std::optional<std::int64_t> other_dt;
    // True when the other trajectory settles strictly earlier than the observer
    // (a trajectory that never settles counts as slowest).
    bool other_faster = false;
};

EquilibrationComparison compare_equilibration(const BeliefTrajectory& observer, const BeliefTrajectory& other,
                                              const DistSpec& target, double tol_mean, double tol_std,
                                              std::int64_t from_t);

}  // namespace bm
