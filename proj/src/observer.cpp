#include "beliefmap/observer.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <cmath>
#include <limits>

namespace bm {

void ObserverPrior::validate() const {
    if (!(kappa0 > 0 && alpha0 > 0 && beta0 > 0)) throw std::invalid_argument("prior kappa0, alpha0, beta0 must be > 0");
    if (!std::isfinite(mu0)) throw std::invalid_argument("prior mu0 must be finite");
}

PredictiveState PredictiveState::from_prior(const ObserverPrior& p) {
    p.validate();
    return {p.mu0, p.kappa0, p.alpha0, p.beta0, 0};
}

double Predictive::std() const {
    if (!finite_variance) return std::numeric_limits<double>::infinity();
    return scale * std::sqrt(dof / (dof - 2.0));
}

PredictiveState nig_update(const PredictiveState& s, double x) {
    PredictiveState o;
    o.kappa = s.kappa + 1.0;
    o.mu = (s.kappa * s.mu + x) / o.kappa;
    o.alpha = s.alpha + 0.5;
    o.beta = s.beta + s.kappa * (x - s.mu) * (x - s.mu) / (2.0 * o.kappa);
    o.n = s.n + 1;
    return o;
}

Predictive predictive_params(const PredictiveState& s) {
    Predictive p;
    p.location = s.mu;
    p.scale = std::sqrt(s.beta * (s.kappa + 1.0) / (s.alpha * s.kappa));
    p.dof = 2.0 * s.alpha;
    p.finite_variance = p.dof > 2.0;
    return p;
}

ProbVec predictive_probvec(const Predictive& pred) {
    if (!(pred.scale > 0.0) || !std::isfinite(pred.scale)) throw NumericalError("degenerate predictive scale");
    boost::math::students_t_distribution<double> t(pred.dof);
    // Each edge is evaluated once, on whichever tail is smaller there.
    auto lower = [&](double x) { return boost::math::cdf(t, (x - pred.location) / pred.scale); };
    auto upper = [&](double x) { return boost::math::cdf(boost::math::complement(t, (x - pred.location) / pred.scale)); };
    Vec lo(kTokens - 1), up(kTokens - 1);
    for (int e = 0; e < kTokens - 1; ++e) {
        const double x = e + 0.5;
        if (x <= pred.location) {
            lo[e] = lower(x);
            up[e] = 1.0 - lo[e];
        } else {
            up[e] = upper(x);
            lo[e] = 1.0 - up[e];
        }
    }
    // The edge just below the location also feeds an upper-tail difference.
    const int straddle = static_cast<int>(std::floor(pred.location - 0.5));
    if (straddle >= 0 && straddle < kTokens - 1) up[straddle] = upper(straddle + 0.5);
    Vec w(kTokens);
    w[0] = lo[0];
    w[kTokens - 1] = up[kTokens - 2];
    for (int k = 1; k < kTokens - 1; ++k) {
        const double b = k + 0.5;
        w[k] = std::max(0.0, b <= pred.location ? lo[k] - lo[k - 1] : up[k - 1] - up[k]);
    }
    return ProbVec::normalized(w);
}

double closed_form_mean(std::int64_t t, double m1, double m2, std::int64_t t_switch) {
    if (t < 1) throw std::invalid_argument("t must be >= 1");
    const double n1 = static_cast<double>(std::min(t, t_switch));
    const double n2 = static_cast<double>(std::max<std::int64_t>(t - t_switch, 0));
    return (m1 * n1 + m2 * n2) / static_cast<double>(t);
}

double closed_form_std(std::int64_t t, double sigma, double m1, double m2, std::int64_t t_switch) {
    if (t < 1) throw std::invalid_argument("t must be >= 1");
    const double n1 = static_cast<double>(std::min(t, t_switch));
    const double n2 = static_cast<double>(std::max<std::int64_t>(t - t_switch, 0));
    const double td = static_cast<double>(t);
    return std::sqrt(sigma * sigma + (m2 - m1) * (m2 - m1) * n1 * n2 / (td * td));
}

BeliefTrajectory observer_trajectory(const std::vector<int>& values, const ObserverPrior& prior,
                                     const std::vector<std::int64_t>& at) {
    if (values.empty()) throw std::invalid_argument("empty series");
    const auto N = static_cast<std::int64_t>(values.size());
    std::vector<PredictiveState> states;
    states.reserve(values.size());
    PredictiveState s = PredictiveState::from_prior(prior);
    for (int v : values) {
        s = nig_update(s, v);
        states.push_back(s);
    }
    std::vector<std::int64_t> ts;
    if (at.empty()) {
        for (std::int64_t t = 1; t <= N; ++t) ts.push_back(t);
    } else {
        for (auto t : at) {
            if (t < 1 || t > N) throw std::invalid_argument("requested t outside 1.." + std::to_string(N));
            ts.push_back(t);
        }
    }
    std::vector<ProbVec> probs(ts.size());
    parallel_for(ts.size(), [&](std::size_t i) {
        probs[i] = predictive_probvec(predictive_params(states[static_cast<std::size_t>(ts[i] - 1)]));
    });
    return make_trajectory(std::move(ts), std::move(probs));
}

EquilibrationComparison compare_equilibration(const BeliefTrajectory& observer, const BeliefTrajectory& other,
                                              const DistSpec& target, double tol_mean, double tol_std,
                                              std::int64_t from_t) {
    EquilibrationComparison c;
    c.observer_dt = equilibration_time(observer, target, tol_mean, tol_std, from_t);
    c.other_dt = equilibration_time(other, target, tol_mean, tol_std, from_t);
    if (c.other_dt && (!c.observer_dt || *c.other_dt < *c.observer_dt)) c.other_faster = true;
    return c;
}

}  // namespace bm
