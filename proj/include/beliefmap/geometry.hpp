#pragma once

#include "beliefmap/common.hpp"

#include <string>

namespace bm {

struct FieldGeometry {
    Mat K;
    Vec lambda;  // descending
    Mat U;       // columns are eigenvectors
    Vec class_values;

    // Eigenvalues treated as positive: lambda > 1e-12 * max(1, lambda_max).
    int positive_modes() const;
};

// Full symmetric eigendecomposition, eigenvalues descending. Throws on an
// asymmetric input.
FieldGeometry field_eig(const Mat& K, const Vec& class_values = {});

// Rows c(mu_i) = (sqrt(l_1) u_1(mu_i), ..., sqrt(l_r) u_r(mu_i)), C x r.
Mat field_embed(const FieldGeometry& geom, int r);

// Share of the positive spectrum carried by the leading r modes.
double cumvar(const Vec& lambda, int r);
// Smallest r with cumvar >= threshold.
int intrinsic_dim(const Vec& lambda, double threshold = 0.95);

// Natural cubic spline per output dimension.
struct CurveFit {
    Vec knots;   // M
    Mat values;  // M x r
    Mat second;  // M x r second derivatives at the knots
    std::string boundary = "natural";

    double lo() const { return knots[0]; }
    double hi() const { return knots[knots.size() - 1]; }
    int dims() const { return static_cast<int>(values.cols()); }
};

CurveFit fit_curve(const Vec& params, const Mat& points);
// Throws std::out_of_range outside [lo, hi].
Vec eval_curve(const CurveFit& fit, double x);
// First derivative along the curve.
Vec eval_curve_derivative(const CurveFit& fit, double x);

// c0 + (c_mu(mu*) - c_mu(mu0)) + (c_sigma(sigma*) - c_sigma(sigma0)).
Vec mixture_interp(const Vec& c0, const CurveFit& curve_mu, const CurveFit& curve_sigma, double mu0,
                   double sigma0, double mu_star, double sigma_star);

}  // namespace bm
