#include "beliefmap/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace bm {

int FieldGeometry::positive_modes() const {
    if (lambda.size() == 0) return 0;
    const double cut = 1e-12 * std::max(1.0, lambda[0]);
    int r = 0;
    while (r < lambda.size() && lambda[r] > cut) ++r;
    return r;
}

FieldGeometry field_eig(const Mat& K, const Vec& class_values) {
    if (K.rows() != K.cols() || K.rows() == 0) throw std::invalid_argument("Gram must be square and nonempty");
    const double scale = std::max(1.0, K.cwiseAbs().maxCoeff());
    if ((K - K.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
        throw std::invalid_argument("Gram matrix is not symmetric");
    Eigen::SelfAdjointEigenSolver<Mat> es(K);
    if (es.info() != Eigen::Success) throw NumericalError("Gram eigensolver failed");
    FieldGeometry g;
    g.K = K;
    g.lambda = es.eigenvalues().reverse();
    g.U = es.eigenvectors().rowwise().reverse();
    for (Eigen::Index j = 0; j < g.U.cols(); ++j) {
        Eigen::Index idx;
        g.U.col(j).cwiseAbs().maxCoeff(&idx);
        if (g.U(idx, j) < 0) g.U.col(j) *= -1.0;
    }
    g.class_values = class_values;
    return g;
}

Mat field_embed(const FieldGeometry& geom, int r) {
    if (r < 1) throw std::invalid_argument("rank must be >= 1");
    if (r > geom.positive_modes())
        throw std::invalid_argument("rank " + std::to_string(r) + " exceeds positive-eigenvalue count " +
                                    std::to_string(geom.positive_modes()));
    return geom.U.leftCols(r) * geom.lambda.head(r).cwiseSqrt().asDiagonal();
}

double cumvar(const Vec& lambda, int r) {
    if (r < 0 || r > lambda.size()) throw std::invalid_argument("rank out of range");
    const Vec pos = lambda.cwiseMax(0.0);
    const double total = pos.sum();
    if (!(total > 0.0)) throw NumericalError("all-zero spectrum");
    return std::min(1.0, pos.head(r).sum() / total);
}

int intrinsic_dim(const Vec& lambda, double threshold) {
    for (int r = 1; r <= lambda.size(); ++r)
        if (cumvar(lambda, r) >= threshold) return r;
    return static_cast<int>(lambda.size());
}

CurveFit fit_curve(const Vec& params, const Mat& points) {
    const auto M = params.size();
    if (M < 3) throw std::invalid_argument("spline needs at least 3 knots");
    if (points.rows() != M) throw std::invalid_argument("knot/point count mismatch");
    for (Eigen::Index i = 1; i < M; ++i)
        if (!(params[i] > params[i - 1])) throw std::invalid_argument("duplicate or unsorted knots");
    CurveFit f;
    f.knots = params;
    f.values = points;
    f.second = Mat::Zero(M, points.cols());
    // Tridiagonal system for interior second derivatives (natural ends).
    const auto n = M - 2;
    Vec sub(n), diag(n), sup(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double h0 = params[i + 1] - params[i], h1 = params[i + 2] - params[i + 1];
        sub[i] = h0;
        diag[i] = 2.0 * (h0 + h1);
        sup[i] = h1;
    }
    for (Eigen::Index c = 0; c < points.cols(); ++c) {
        Vec rhs(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const double h0 = params[i + 1] - params[i], h1 = params[i + 2] - params[i + 1];
            rhs[i] = 6.0 * ((points(i + 2, c) - points(i + 1, c)) / h1 - (points(i + 1, c) - points(i, c)) / h0);
        }
        Vec d = diag, r = rhs;
        for (Eigen::Index i = 1; i < n; ++i) {
            const double m = sub[i] / d[i - 1];
            d[i] -= m * sup[i - 1];
            r[i] -= m * r[i - 1];
        }
        Vec z(n);
        z[n - 1] = r[n - 1] / d[n - 1];
        for (Eigen::Index i = n - 1; i-- > 0;) z[i] = (r[i] - sup[i] * z[i + 1]) / d[i];
        f.second.block(1, c, n, 1) = z;
    }
    return f;
}

namespace {

Eigen::Index segment_of(const CurveFit& f, double x) {
    if (!(x >= f.lo() && x <= f.hi())) throw std::out_of_range("spline query " + fmt(x) + " outside knot range");
    auto it = std::upper_bound(f.knots.data(), f.knots.data() + f.knots.size(), x);
    auto i = static_cast<Eigen::Index>(it - f.knots.data()) - 1;
    return std::clamp<Eigen::Index>(i, 0, f.knots.size() - 2);
}

}  // namespace

Vec eval_curve(const CurveFit& f, double x) {
    const auto i = segment_of(f, x);
    if (x == f.knots[i]) return f.values.row(i).transpose();
    if (x == f.knots[i + 1]) return f.values.row(i + 1).transpose();
    const double h = f.knots[i + 1] - f.knots[i];
    const double a = (f.knots[i + 1] - x) / h, b = (x - f.knots[i]) / h;
    Vec out = a * f.values.row(i).transpose() + b * f.values.row(i + 1).transpose() +
              ((a * a * a - a) * f.second.row(i).transpose() + (b * b * b - b) * f.second.row(i + 1).transpose()) *
                  (h * h) / 6.0;
    return out;
}

Vec eval_curve_derivative(const CurveFit& f, double x) {
    const auto i = segment_of(f, x);
    const double h = f.knots[i + 1] - f.knots[i];
    const double a = (f.knots[i + 1] - x) / h, b = (x - f.knots[i]) / h;
    Vec out = (f.values.row(i + 1) - f.values.row(i)).transpose() / h -
              (3.0 * a * a - 1.0) * h / 6.0 * f.second.row(i).transpose() +
              (3.0 * b * b - 1.0) * h / 6.0 * f.second.row(i + 1).transpose();
    return out;
}

Vec mixture_interp(const Vec& c0, const CurveFit& curve_mu, const CurveFit& curve_sigma, double mu0,
                   double sigma0, double mu_star, double sigma_star) {
    Vec du = eval_curve(curve_mu, mu_star) - eval_curve(curve_mu, mu0);
    Vec dv = eval_curve(curve_sigma, sigma_star) - eval_curve(curve_sigma, sigma0);
    if (du.size() != c0.size() || dv.size() != c0.size()) throw std::invalid_argument("dimension mismatch");
    return c0 + du + dv;
}

}  // namespace bm
