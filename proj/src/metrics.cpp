#include "beliefmap/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

namespace bm {

ProbVec softmax_T(const Vec& logits, double T) {
    if (!(T > 0.0)) throw std::invalid_argument("temperature must be > 0");
    if (logits.size() != kTokens) throw std::invalid_argument("expected 1000 logits");
    const double mx = logits.maxCoeff();
    if (!std::isfinite(mx)) throw NumericalError("non-finite logits");
    Vec w = ((logits.array() - mx) / T).exp();
    return ProbVec::normalized(w);
}

ProbVec discretize_cdf(const std::function<double(double)>& cdf) {
    Vec w(kTokens);
    double prev = 0.0;
    for (int k = 0; k < kTokens - 1; ++k) {
        double c = cdf(k + 0.5);
        w[k] = std::max(0.0, c - prev);
        prev = c;
    }
    w[kTokens - 1] = std::max(0.0, 1.0 - prev);
    return ProbVec::normalized(w);
}

ProbVec discretized_normal(const DistSpec& spec) {
    spec.validate();
    const double s = spec.sigma * std::sqrt(2.0);
    // Lower and upper tail masses via erfc keep far-tail bins accurate.
    auto lower = [&](double x) { return 0.5 * std::erfc(-(x - spec.mu) / s); };
    auto upper = [&](double x) { return 0.5 * std::erfc((x - spec.mu) / s); };
    Vec w(kTokens);
    w[0] = lower(0.5);
    w[kTokens - 1] = upper(kTokens - 1.5);
    for (int k = 1; k < kTokens - 1; ++k) {
        const double a = k - 0.5, b = k + 0.5;
        w[k] = (b <= spec.mu) ? lower(b) - lower(a) : upper(a) - upper(b);
        w[k] = std::max(0.0, w[k]);
    }
    return ProbVec::normalized(w);
}

Vec log_mass(const ProbVec& p) { return p.p().array().log(); }

double kl(const ProbVec& p, const ProbVec& q) {
    double acc = 0.0;
    for (int k = 0; k < kTokens; ++k) {
        if (p[k] <= 0.0) continue;
        if (q[k] <= 0.0) return std::numeric_limits<double>::infinity();
        acc += p[k] * std::log(p[k] / q[k]);
    }
    return std::max(0.0, acc);
}

double hellinger(const ProbVec& p, const ProbVec& q) {
    double acc = (p.p().array().sqrt() - q.p().array().sqrt()).square().sum();
    return std::min(1.0, std::sqrt(0.5 * acc));
}

double entropy(const ProbVec& p) {
    double h = 0.0;
    for (int k = 0; k < kTokens; ++k)
        if (p[k] > 0.0) h -= p[k] * std::log(p[k]);
    return h;
}

MeanStd dist_mean_std(const ProbVec& p) {
    double m = 0.0;
    for (int k = 0; k < kTokens; ++k) m += k * p[k];
    double v = 0.0;
    for (int k = 0; k < kTokens; ++k) v += (k - m) * (k - m) * p[k];
    return {m, std::sqrt(std::max(0.0, v))};
}

BeliefTrajectory make_trajectory(std::vector<std::int64_t> t, std::vector<ProbVec> probs) {
    if (t.size() != probs.size()) throw std::invalid_argument("t and probs differ in length");
    for (std::size_t i = 1; i < t.size(); ++i)
        if (t[i] <= t[i - 1]) throw std::invalid_argument("t must be strictly increasing");
    BeliefTrajectory tr;
    tr.t = std::move(t);
    tr.probs = std::move(probs);
    for (const auto& p : tr.probs) {
        auto ms = dist_mean_std(p);
        tr.means.push_back(ms.mean);
        tr.stds.push_back(ms.std);
        tr.entropies.push_back(entropy(p));
    }
    return tr;
}

std::optional<std::int64_t> equilibration_time(const BeliefTrajectory& traj, const DistSpec& target,
                                               double tol_mean, double tol_std, std::int64_t from_t) {
    if (traj.size() == 0) throw std::invalid_argument("empty trajectory");
    if (from_t >= traj.t.back()) throw std::invalid_argument("from_t beyond trajectory");
    auto ok = [&](std::size_t i) {
        return std::abs(traj.means[i] - target.mu) <= tol_mean &&
               std::abs(traj.stds[i] - target.sigma) <= tol_std;
    };
    std::optional<std::int64_t> settled;
    for (std::size_t i = traj.size(); i-- > 0;) {
        if (traj.t[i] < from_t) break;
        if (!ok(i)) break;
        settled = traj.t[i];
    }
    if (!settled) return std::nullopt;
    return std::max<std::int64_t>(0, *settled - from_t);
}

void write_trajectory_csv(const BeliefTrajectory& traj, const ProbVec& ref,
                          const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "t,mean,std,entropy,kl_to_ref,hellinger_to_prev\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        double hp = i == 0 ? 0.0 : hellinger(traj.probs[i], traj.probs[i - 1]);
        out << traj.t[i] << ',' << fmt(traj.means[i]) << ',' << fmt(traj.stds[i]) << ','
            << fmt(traj.entropies[i]) << ',' << fmt(kl(traj.probs[i], ref)) << ',' << fmt(hp)
            << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace bm
