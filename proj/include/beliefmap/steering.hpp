#pragma once

#include "beliefmap/geometry.hpp"
#include "beliefmap/metrics.hpp"
#include "beliefmap/probes.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace bm {

// y = x / rms(x) * norm_weights, logits = unembed y, softmax over token values.
ProbVec readout(const Vec& x, const HeadParams& head, double T = 1.0);

enum class Scheme { diff_means, probe_dir, field_aware };
std::string to_string(Scheme s);

struct SteeringVector {
    Vec direction;
    Scheme scheme = Scheme::diff_means;
    double from = 0.0, to = 0.0;
    std::string norm = "none";  // "none" for diff_means, "unit" otherwise
};

// Centroid of set_b minus centroid of set_a.
SteeringVector diff_means(const Mat& set_a, const Mat& set_b);

Vec apply_linear(const Vec& x, const Vec& s, double alpha);

// x + (curve(mu_to) - curve(mu_from)); the residual off the curve is kept.
Vec spline_steer(const Vec& x, const CurveFit& centroid_curve, double mu_from, double mu_to);

// Normalized difference of unit probe rows, w_b - w_a.
SteeringVector probe_dir(const ProbeField& field, double mu_a, double mu_b);

// Default field-steering rank: smallest r whose spectrum share reaches this.
inline constexpr double kFieldRankCumvar = 0.99;

// Kernel-regression probe direction s*(mu) = sum_i a_i(mu) w_i over unit rows,
// with a(mu) = (K + ridge I)^-1 k(mu) and k(mu) = E c~(mu), where E is the rank-r
// embedding of the classes and c~ a natural spline through it.
class FieldSteer {
public:
    FieldSteer(const ProbeField& field, const FieldGeometry& geom, int r, double ridge = 1e-8);

    Vec weights(double mu) const;
    Vec direction(double mu) const;
    // Unit-norm direction, as carried by a SteeringVector.
    SteeringVector steering_vector(double mu) const;
    // gain * (s*(mu_{j+1}) - s*(mu_j)) along an evenly spaced path.
    std::vector<Vec> increments(double mu_from, double mu_to, int steps, double gain) const;
    // Least-squares scale mapping consecutive class differences of s* onto
    // consecutive centroid differences (centroids: C x d, class order).
    double calibrate_gain(const Mat& centroids) const;

    const Vec& class_values() const { return class_values_; }

private:
    Mat units_;
    Mat K_;
    Mat embed_;
    CurveFit curve_;
    Vec class_values_;
    double ridge_;
};

std::vector<Vec> field_steer(const ProbeField& field, const FieldGeometry& geom, int r, double mu_from,
                             double mu_to, int steps, double gain, double ridge = 1e-8);

struct SteerRow {
    int step = 0;
    double alpha_or_mu = 0.0;
    double mean = 0.0;
    double std = 0.0;
    double off_manifold = 0.0;
    ProbVec probs;
};

using SteerReport = std::vector<SteerRow>;

// One row per steered activation: readout, moments and |std - sigma0|.
SteerReport evaluate_steering(const std::vector<Vec>& xs, const std::vector<double>& grid,
                              const HeadParams& head, double sigma0);

SteerReport sweep_linear(const Vec& x, const Vec& s, const std::vector<double>& alphas, const HeadParams& head,
                         double sigma0);
SteerReport sweep_spline(const Vec& x, const CurveFit& curve, double mu_from, const std::vector<double>& mu_to,
                         const HeadParams& head, double sigma0);
// Cumulative application of field increments; row j reports the path point mu_j.
SteerReport sweep_field(const Vec& x, const std::vector<Vec>& increments, double mu_from, double mu_to,
                        const HeadParams& head, double sigma0);

// alpha in [lo, hi] where the linear scheme's induced mean equals target
// (bisection; the mean must cross the target on the bracket).
double match_linear_alpha(const Vec& x, const Vec& s, double target_mean, const HeadParams& head, double lo = 0.0,
                          double hi = 1.0);
double match_spline_mu(const Vec& x, const CurveFit& curve, double mu_from, double target_mean,
                       const HeadParams& head);

std::vector<double> linspace(double a, double b, int n);

void write_steer_csv(const SteerReport& rep, const std::filesystem::path& path);

}  // namespace bm
