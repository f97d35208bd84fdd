#pragma once

#include "beliefmap/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace bm {

struct TrainMeta {
    double weight_decay = 1e-3;
    int epochs = 0;  // gradient steps actually taken
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
    std::string variant = "multiclass";  // or "ovr"
    bool centered = false;
};

struct ProbeField {
    Vec class_values;  // ascending
    Mat W;             // C x d
    Vec bias;          // always zero
    Vec offset;        // pooled training mean when centered, else empty
    int layer = 0;
    TrainMeta train_meta;

    int classes() const { return static_cast<int>(W.rows()); }
    int d() const { return static_cast<int>(W.cols()); }
    // Rows scaled to unit norm. Throws NumericalError on a zero row.
    Mat unit_rows() const;
    Eigen::Index index_of(double mu) const;
    void validate() const;
};

struct SplitIndices {
    std::vector<std::size_t> train_idx, test_idx;
};

struct TrainHyper {
    double weight_decay = 1e-3;
    double split_fraction = 0.8;
    std::uint64_t seed = 0;
    int max_iter = 20000;
    double tol = 1e-7;
    bool centered = false;
};

// Per-class shuffled split (std::mt19937_64 + std::shuffle); each class keeps
// round(fraction * n_c) training rows, at least one on each side.
SplitIndices stratified_split(const std::vector<int>& labels, double fraction, std::uint64_t seed);

// Class index per record from its mu value, plus the ascending class values.
std::pair<std::vector<int>, Vec> class_labels(const ActivationSet& set);

// Softmax cross-entropy probe, no bias, L2 weight decay on feature-scaled
// weights, full-batch Nesterov gradient descent with step 1/L.
std::pair<ProbeField, double> train_multiclass(const ActivationSet& set, const TrainHyper& hyper);
// Same data handling; C independent sigmoid/binary cross-entropy probes.
std::pair<ProbeField, double> train_ovr(const ActivationSet& set, const TrainHyper& hyper);

// Lower-level entry points on a prepared matrix and labels.
Mat fit_softmax(const Mat& X, const std::vector<int>& y, int C, double wd, int max_iter, double tol,
                int* iters = nullptr);
Mat fit_ovr(const Mat& X, const std::vector<int>& y, int C, double wd, int max_iter, double tol,
            int* iters = nullptr);

Vec probe_scores(const ProbeField& field, const Vec& x);
// Argmax of the scores, ties to the lowest class index.
Eigen::Index probe_predict_index(const ProbeField& field, const Vec& x);
double probe_predict(const ProbeField& field, const Vec& x);
double probe_accuracy(const ProbeField& field, const ActivationSet& set);

// Cosine Gram; with centered, the across-class mean row is removed first.
Mat probe_gram(const ProbeField& field, bool centered = false);

struct TransferPoint {
    double shift = 0.0;
    double mu_lo = 0.0, mu_hi = 0.0;
    double accuracy = 0.0;
};

// Binary probe on (mu_a, mu_b), evaluated zero-shot on (mu_a + s, mu_b + s).
// Both training and evaluation sets are centred by their own pooled mean; the
// decision is sign of <x - mean, w_hi - w_lo>. Shift 0 reports held-out accuracy.
std::vector<TransferPoint> transfer_curve(const ActivationSet& set, double mu_a, double mu_b,
                                          const std::vector<double>& shifts, const TrainHyper& hyper);

// Accuracy of a random Gaussian direction used as a binary probe on a pair,
// with the same centring protocol as transfer_curve.
double untrained_pair_accuracy(const ActivationSet& set, double mu_a, double mu_b, std::uint64_t seed);

Vec interp_linear(const Vec& w_a, const Vec& w_b, double alpha);
Vec interp_slerp(const Vec& w_a, const Vec& w_b, double alpha);

// w = sum_i a_i w_i (unit rows) with a = (G + ridge I)^-1 k*,
// k* = alpha G_row(mu_a) + (1 - alpha) G_row(mu_b).
Vec interp_kernel(const ProbeField& field, double mu_a, double mu_b, double alpha, double ridge = 1e-8);
// Kernel-regression weights for an arbitrary kernel row k.
Vec kernel_weights(const Mat& G, const Vec& k, double ridge);

// Probe file: "BMP1", u32 LE header length, JSON header, then C x d f64 rows
// and (when centered) d f64 offset entries.
void write_probe(const ProbeField& field, const std::filesystem::path& path);
ProbeField read_probe(const std::filesystem::path& path);

}  // namespace bm
