#include "beliefmap/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace bm {

EmbeddingResult pca(const Mat& X, int k) {
    const auto n = X.rows(), d = X.cols();
    if (n < 2) throw std::invalid_argument("pca needs at least 2 points");
    if (k < 1 || k > std::min<Eigen::Index>(n, d)) throw std::invalid_argument("k too large");
    EmbeddingResult r;
    r.mean_vector = X.colwise().mean().transpose();
    Mat Xc = X.rowwise() - r.mean_vector.transpose();
    Mat C = (Xc.transpose() * Xc) / static_cast<double>(n - 1);
    Eigen::SelfAdjointEigenSolver<Mat> es(C);
    if (es.info() != Eigen::Success) throw NumericalError("pca eigensolver failed");
    const Vec lam = es.eigenvalues().reverse().cwiseMax(0.0);
    Mat V = es.eigenvectors().rowwise().reverse().leftCols(k);
    // Sign convention: largest-magnitude entry of each component is positive.
    for (int j = 0; j < k; ++j) {
        Eigen::Index idx;
        V.col(j).cwiseAbs().maxCoeff(&idx);
        if (V(idx, j) < 0) V.col(j) *= -1.0;
    }
    const double total = lam.sum();
    r.components = V;
    r.coords = Xc * V;
    r.axis_weights = lam.head(k);
    r.explained = total > 0 ? Vec(lam.head(k) / total) : Vec::Zero(k);
    return r;
}

Mat bhattacharyya_matrix(const std::vector<ProbVec>& P) {
    const auto n = static_cast<Eigen::Index>(P.size());
    Mat S(kTokens, n);
    for (Eigen::Index i = 0; i < n; ++i) S.col(i) = P[i].p().array().sqrt();
    Mat F = S.transpose() * S;
    Mat D(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        D(i, i) = 0.0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            double f = std::min(1.0, F(i, j));
            D(i, j) = D(j, i) = f > 0 ? -std::log(f) : std::numeric_limits<double>::infinity();
        }
    }
    return D;
}

EmbeddingResult inpca_from_divergence(const Mat& D, int k) {
    const auto n = D.rows();
    if (n < 2) throw std::invalid_argument("inpca needs at least 2 distributions");
    if (!D.allFinite()) throw NumericalError("divergence matrix has non-finite entries (disjoint supports)");
    if (k < 1 || k > n) throw std::invalid_argument("k out of range");
    if (D.cols() != n || (D - D.transpose()).cwiseAbs().maxCoeff() > 1e-9 * (1.0 + D.cwiseAbs().maxCoeff()))
        throw std::invalid_argument("divergence matrix must be square and symmetric");
    Mat J = Mat::Identity(n, n) - Mat::Constant(n, n, 1.0 / static_cast<double>(n));
    Mat W = -0.5 * J * D * J;
    W = 0.5 * (W + W.transpose());
    Eigen::SelfAdjointEigenSolver<Mat> es(W);
    if (es.info() != Eigen::Success) throw NumericalError("inpca eigensolver failed");
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), 0);
    const Vec& ev = es.eigenvalues();
    std::stable_sort(order.begin(), order.end(),
                     [&](auto a, auto b) { return std::abs(ev[a]) > std::abs(ev[b]); });
    const double total = ev.cwiseAbs().sum();
    EmbeddingResult r;
    r.coords.resize(n, k);
    r.axis_weights.resize(k);
    r.explained.resize(k);
    for (int j = 0; j < k; ++j) {
        const auto b = order[j];
        Vec u = es.eigenvectors().col(b);
        Eigen::Index idx;
        u.cwiseAbs().maxCoeff(&idx);
        if (u[idx] < 0) u = -u;
        r.coords.col(j) = std::sqrt(std::abs(ev[b])) * u;
        r.axis_weights[j] = ev[b];
        r.explained[j] = total > 0 ? std::abs(ev[b]) / total : 0.0;
    }
    return r;
}

EmbeddingResult inpca(const std::vector<ProbVec>& P, int k) {
    if (P.size() < 2) throw std::invalid_argument("inpca needs at least 2 distributions");
    return inpca_from_divergence(bhattacharyya_matrix(P), k);
}

double signed_sq_distance(const EmbeddingResult& e, int i, int j) {
    double s = 0.0;
    for (Eigen::Index b = 0; b < e.coords.cols(); ++b) {
        double diff = e.coords(i, b) - e.coords(j, b);
        s += (e.axis_weights[b] >= 0 ? 1.0 : -1.0) * diff * diff;
    }
    return s;
}

double inpca_stress(const EmbeddingResult& e, const Mat& D) {
    double num = 0.0, den = 0.0;
    for (Eigen::Index i = 0; i < D.rows(); ++i)
        for (Eigen::Index j = i + 1; j < D.cols(); ++j) {
            double r = signed_sq_distance(e, static_cast<int>(i), static_cast<int>(j)) - D(i, j);
            num += r * r;
            den += D(i, j) * D(i, j);
        }
    return den > 0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace bm
