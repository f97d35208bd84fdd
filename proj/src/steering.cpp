#include "beliefmap/steering.hpp"

#include <cmath>
#include <fstream>

namespace bm {

ProbVec readout(const Vec& x, const HeadParams& head, double T) {
    if (x.size() != head.d()) throw std::invalid_argument("readout: dimension mismatch");
    if (head.norm != "rms") throw std::invalid_argument("unsupported norm '" + head.norm + "'");
    if (!x.allFinite()) throw NumericalError("non-finite activation");
    const double ms = x.squaredNorm() / static_cast<double>(x.size());
    if (!(ms > 0.0)) throw NumericalError("non-finite rms normalization");
    const double rms = std::sqrt(ms + head.norm_epsilon);
    Vec y = (x / rms).cwiseProduct(head.norm_weights.cast<double>());
    Vec raw = head.unembed.cast<double>() * y;
    Vec logits(kTokens);
    for (int j = 0; j < kTokens; ++j) logits[head.token_value_map[j]] = raw[j];
    return softmax_T(logits, T);
}

std::string to_string(Scheme s) {
    switch (s) {
        case Scheme::diff_means: return "diff_means";
        case Scheme::probe_dir: return "probe_dir";
        case Scheme::field_aware: return "field_aware";
    }
    return "?";
}

SteeringVector diff_means(const Mat& set_a, const Mat& set_b) {
    if (set_a.rows() == 0 || set_b.rows() == 0) throw std::invalid_argument("empty set");
    if (set_a.cols() != set_b.cols()) throw std::invalid_argument("dimension mismatch");
    SteeringVector s;
    s.direction = (set_b.colwise().mean() - set_a.colwise().mean()).transpose();
    s.scheme = Scheme::diff_means;
    return s;
}

Vec apply_linear(const Vec& x, const Vec& s, double alpha) {
    if (x.size() != s.size()) throw std::invalid_argument("dimension mismatch");
    return x + alpha * s;
}

Vec spline_steer(const Vec& x, const CurveFit& curve, double mu_from, double mu_to) {
    if (x.size() != curve.dims()) throw std::invalid_argument("dimension mismatch");
    if (mu_from == mu_to) {
        (void)eval_curve(curve, mu_from);  // domain check
        return x;
    }
    return x + (eval_curve(curve, mu_to) - eval_curve(curve, mu_from));
}

SteeringVector probe_dir(const ProbeField& field, double mu_a, double mu_b) {
    const auto ia = field.index_of(mu_a), ib = field.index_of(mu_b);
    Mat U = field.unit_rows();
    Vec d = (U.row(ib) - U.row(ia)).transpose();
    const double n = d.norm();
    if (!(n > 1e-12)) throw std::invalid_argument("zero probe difference");
    return {d / n, Scheme::probe_dir, mu_a, mu_b, "unit"};
}

FieldSteer::FieldSteer(const ProbeField& field, const FieldGeometry& geom, int r, double ridge)
    : units_(field.unit_rows()), K_(geom.K), class_values_(field.class_values), ridge_(ridge) {
    if (K_.rows() != field.classes()) throw std::invalid_argument("Gram size does not match probe field");
    embed_ = field_embed(geom, r);
    curve_ = fit_curve(class_values_, embed_);
    if (ridge_ <= 0.0) {
        Eigen::FullPivLU<Mat> lu(K_);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) throw NumericalError("singular Gram without ridge");
    }
}

Vec FieldSteer::weights(double mu) const {
    Vec k = embed_ * eval_curve(curve_, mu);
    return kernel_weights(K_, k, ridge_);
}

Vec FieldSteer::direction(double mu) const { return units_.transpose() * weights(mu); }

SteeringVector FieldSteer::steering_vector(double mu) const {
    Vec d = direction(mu);
    const double n = d.norm();
    if (!(n > 0.0)) throw NumericalError("zero field direction");
    return {d / n, Scheme::field_aware, mu, mu, "unit"};
}

std::vector<Vec> FieldSteer::increments(double mu_from, double mu_to, int steps, double gain) const {
    if (steps < 1) throw std::invalid_argument("steps must be >= 1");
    auto path = linspace(mu_from, mu_to, steps + 1);
    std::vector<Vec> out;
    Vec prev = direction(path[0]);
    for (int j = 1; j <= steps; ++j) {
        Vec cur = direction(path[j]);
        out.push_back(gain * (cur - prev));
        prev = std::move(cur);
    }
    return out;
}

double FieldSteer::calibrate_gain(const Mat& centroids) const {
    if (centroids.rows() != class_values_.size() || centroids.cols() != units_.cols())
        throw std::invalid_argument("centroid matrix shape mismatch");
    double num = 0.0, den = 0.0;
    Vec prev = direction(class_values_[0]);
    for (Eigen::Index i = 1; i < class_values_.size(); ++i) {
        Vec cur = direction(class_values_[i]);
        Vec ds = cur - prev;
        Vec dc = (centroids.row(i) - centroids.row(i - 1)).transpose();
        num += ds.dot(dc);
        den += ds.squaredNorm();
        prev = std::move(cur);
    }
    if (!(den > 0.0)) throw NumericalError("field directions do not vary");
    return num / den;
}

std::vector<Vec> field_steer(const ProbeField& field, const FieldGeometry& geom, int r, double mu_from,
                             double mu_to, int steps, double gain, double ridge) {
    return FieldSteer(field, geom, r, ridge).increments(mu_from, mu_to, steps, gain);
}

SteerReport evaluate_steering(const std::vector<Vec>& xs, const std::vector<double>& grid, const HeadParams& head,
                              double sigma0) {
    if (xs.size() != grid.size()) throw std::invalid_argument("grid/activation count mismatch");
    SteerReport rep(xs.size());
    parallel_for(xs.size(), [&](std::size_t i) {
        ProbVec p = readout(xs[i], head);
        auto ms = dist_mean_std(p);
        rep[i] = {static_cast<int>(i), grid[i], ms.mean, ms.std, std::abs(ms.std - sigma0), std::move(p)};
    });
    return rep;
}

SteerReport sweep_linear(const Vec& x, const Vec& s, const std::vector<double>& alphas, const HeadParams& head,
                         double sigma0) {
    std::vector<Vec> xs;
    for (double a : alphas) xs.push_back(apply_linear(x, s, a));
    return evaluate_steering(xs, alphas, head, sigma0);
}

SteerReport sweep_spline(const Vec& x, const CurveFit& curve, double mu_from, const std::vector<double>& mu_to,
                         const HeadParams& head, double sigma0) {
    std::vector<Vec> xs;
    for (double m : mu_to) xs.push_back(spline_steer(x, curve, mu_from, m));
    return evaluate_steering(xs, mu_to, head, sigma0);
}

SteerReport sweep_field(const Vec& x, const std::vector<Vec>& increments, double mu_from, double mu_to,
                        const HeadParams& head, double sigma0) {
    auto path = linspace(mu_from, mu_to, static_cast<int>(increments.size()) + 1);
    std::vector<Vec> xs{x};
    for (const auto& inc : increments) xs.push_back(xs.back() + inc);
    return evaluate_steering(xs, path, head, sigma0);
}

namespace {

template <class F>
double bisect(F&& f, double lo, double hi) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0) == (fhi > 0)) throw NumericalError("target mean not bracketed");
    for (int it = 0; it < 100 && hi - lo > 1e-12 * (1.0 + std::abs(lo)); ++it) {
        double mid = 0.5 * (lo + hi), fm = f(mid);
        if ((fm > 0) == (flo > 0)) {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

}  // namespace

double match_linear_alpha(const Vec& x, const Vec& s, double target_mean, const HeadParams& head, double lo,
                          double hi) {
    return bisect([&](double a) { return dist_mean_std(readout(apply_linear(x, s, a), head)).mean - target_mean; },
                  lo, hi);
}

double match_spline_mu(const Vec& x, const CurveFit& curve, double mu_from, double target_mean,
                       const HeadParams& head) {
    return bisect(
        [&](double m) { return dist_mean_std(readout(spline_steer(x, curve, mu_from, m), head)).mean - target_mean; },
        curve.lo(), curve.hi());
}

std::vector<double> linspace(double a, double b, int n) {
    if (n < 1) throw std::invalid_argument("linspace needs n >= 1");
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) out[i] = n == 1 ? a : a + (b - a) * i / (n - 1);
    if (n > 1) out.back() = b;
    return out;
}

void write_steer_csv(const SteerReport& rep, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "step,alpha_or_mu,mean,std,off_manifold\n";
    for (const auto& r : rep)
        out << r.step << ',' << fmt(r.alpha_or_mu) << ',' << fmt(r.mean) << ',' << fmt(r.std) << ','
            << fmt(r.off_manifold) << '\n';
    if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace bm
