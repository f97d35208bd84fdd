#pragma once

#include "beliefmap/dataio.hpp"

#include <vector>

namespace bm {

struct EmbeddingResult {
    Mat coords;            // N x k
    Vec axis_weights;      // PCA: component variances; inPCA: signed eigenvalues
    Vec explained;         // share of total (absolute) spectrum per axis
    Vec mean_vector;       // PCA only
    Mat components;        // PCA only: d x k, orthonormal columns
};

EmbeddingResult pca(const Mat& X, int k);

// D_ij = -log sum_k sqrt(p_ik p_jk).
Mat bhattacharyya_matrix(const std::vector<ProbVec>& P);

// MDS of the Bhattacharyya matrix with signed axes, ordered by |eigenvalue|.
EmbeddingResult inpca(const std::vector<ProbVec>& P, int k);
EmbeddingResult inpca_from_divergence(const Mat& D, int k);

// Signed squared distance sum_b sign(l_b) (x_ib - x_jb)^2 between rows i, j.
double signed_sq_distance(const EmbeddingResult& e, int i, int j);

// sqrt(sum (d2_ij - D_ij)^2 / sum D_ij^2) over i < j.
double inpca_stress(const EmbeddingResult& e, const Mat& D);

}  // namespace bm
