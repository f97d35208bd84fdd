#include "beliefmap/probes.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace bm {

using nlohmann::json;

Mat ProbeField::unit_rows() const {
    Mat U = W;
    for (Eigen::Index i = 0; i < U.rows(); ++i) {
        double n = U.row(i).norm();
        if (!(n > 0.0)) throw NumericalError("zero-norm probe row " + std::to_string(i));
        U.row(i) /= n;
    }
    return U;
}

Eigen::Index ProbeField::index_of(double mu) const {
    for (Eigen::Index i = 0; i < class_values.size(); ++i)
        if (class_values[i] == mu) return i;
    throw std::invalid_argument("class " + fmt(mu) + " not in probe field");
}

void ProbeField::validate() const {
    if (class_values.size() != W.rows()) throw FormatError("class_values/W row mismatch");
    for (Eigen::Index i = 1; i < class_values.size(); ++i)
        if (!(class_values[i] > class_values[i - 1])) throw FormatError("class_values not strictly increasing");
    if (!W.allFinite()) throw NumericalError("probe rows not finite");
    if (bias.size() != W.rows() || !bias.isZero(0.0)) throw FormatError("bias must be all zero");
    if (offset.size() != 0 && offset.size() != W.cols()) throw FormatError("offset has wrong length");
}

SplitIndices stratified_split(const std::vector<int>& labels, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0)) throw std::invalid_argument("split fraction must lie in (0, 1)");
    std::map<int, std::vector<std::size_t>> by_class;
    for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
    std::mt19937_64 rng(seed);
    SplitIndices s;
    for (auto& [c, idx] : by_class) {
        std::shuffle(idx.begin(), idx.end(), rng);
        auto n = static_cast<long>(idx.size());
        long n_train = std::lround(fraction * static_cast<double>(n));
        n_train = std::clamp(n_train, 1L, std::max(1L, n - 1));
        s.train_idx.insert(s.train_idx.end(), idx.begin(), idx.begin() + n_train);
        s.test_idx.insert(s.test_idx.end(), idx.begin() + n_train, idx.end());
    }
    std::sort(s.train_idx.begin(), s.train_idx.end());
    std::sort(s.test_idx.begin(), s.test_idx.end());
    return s;
}

std::pair<std::vector<int>, Vec> class_labels(const ActivationSet& set) {
    auto values = set.mu_values();
    std::vector<int> y;
    y.reserve(set.size());
    for (const auto& r : set.records)
        y.push_back(static_cast<int>(std::lower_bound(values.begin(), values.end(), r.mu) - values.begin()));
    return {y, Eigen::Map<Vec>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

namespace {

Mat take_rows(const Mat& X, const std::vector<std::size_t>& idx) {
    Mat out(static_cast<Eigen::Index>(idx.size()), X.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(i) = X.row(idx[i]);
    return out;
}

std::vector<int> take(const std::vector<int>& y, const std::vector<std::size_t>& idx) {
    std::vector<int> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(y[i]);
    return out;
}

// Largest eigenvalue of A^T A / n by power iteration from a fixed start.
double top_eig_gram(const Mat& A) {
    const double n = static_cast<double>(A.rows());
    Vec v = Vec::Ones(A.cols()).normalized();
    double lam = 0.0;
    for (int it = 0; it < 500; ++it) {
        Vec w = A.transpose() * (A * v) / n;
        double nw = w.norm();
        if (!(nw > 0.0)) return 0.0;
        double next = v.dot(w);
        v = w / nw;
        if (std::abs(next - lam) <= 1e-10 * std::abs(next)) {
            lam = next;
            break;
        }
        lam = next;
    }
    return lam * 1.02;
}

struct Scaled {
    Mat Xs;
    Vec sd;
};

Scaled scale_columns(const Mat& X) {
    const double n = static_cast<double>(X.rows());
    Vec mean = X.colwise().mean().transpose();
    Vec sd = ((X.rowwise() - mean.transpose()).array().square().colwise().sum() / n).sqrt().transpose();
    for (Eigen::Index j = 0; j < sd.size(); ++j)
        if (!(sd[j] > 1e-12)) sd[j] = 1.0;
    return {X * sd.cwiseInverse().asDiagonal(), sd};
}

template <class LossGrad>
Mat nesterov(const Mat& Xs, int C, double L, int max_iter, double tol, LossGrad&& loss_grad, int* iters) {
    const double lr = 1.0 / L;
    Mat W = Mat::Zero(C, Xs.cols());
    Mat V = W, G;
    double t_prev = 1.0, prev = 0.0;
    bool have_prev = false;
    int it = 0;
    for (; it < max_iter; ++it) {
        loss_grad(V, &G);
        Mat W_next = V - lr * G;
        double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_prev * t_prev));
        V = W_next + ((t_prev - 1.0) / t_next) * (W_next - W);
        W = std::move(W_next);
        t_prev = t_next;
        if (it % 10 == 0) {
            double l = loss_grad(W, nullptr);
            if (!std::isfinite(l)) throw NumericalError("probe loss diverged");
            if (have_prev && std::abs(prev - l) <= tol * std::abs(prev)) break;
            prev = l;
            have_prev = true;
        }
    }
    if (iters) *iters = std::min(it + 1, max_iter);
    return W;
}

}  // namespace

Mat fit_softmax(const Mat& X, const std::vector<int>& y, int C, double wd, int max_iter, double tol, int* iters) {
    const auto n = X.rows();
    auto [Xs, sd] = scale_columns(X);
    Mat Y = Mat::Zero(n, C);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, y[i]) = 1.0;
    const double L = 0.5 * top_eig_gram(Xs) + wd;
    const double inv_n = 1.0 / static_cast<double>(n);
    auto loss_grad = [&](const Mat& W, Mat* G) {
        Mat Z = Xs * W.transpose();
        Vec mx = Z.rowwise().maxCoeff();
        Z.colwise() -= mx;
        Mat E = Z.array().exp();
        Vec s = E.rowwise().sum();
        double loss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) loss -= Z(i, y[i]) - std::log(s[i]);
        loss = loss * inv_n + 0.5 * wd * W.squaredNorm();
        if (G) {
            Mat P = E.array().colwise() / s.array();
            *G = (P - Y).transpose() * Xs * inv_n + wd * W;
        }
        return loss;
    };
    Mat Ws = nesterov(Xs, C, L, max_iter, tol, loss_grad, iters);
    return Ws * sd.cwiseInverse().asDiagonal();
}

Mat fit_ovr(const Mat& X, const std::vector<int>& y, int C, double wd, int max_iter, double tol, int* iters) {
    const auto n = X.rows();
    auto [Xs, sd] = scale_columns(X);
    Mat Y = Mat::Zero(n, C);
    for (Eigen::Index i = 0; i < n; ++i) Y(i, y[i]) = 1.0;
    const double L = 0.25 * top_eig_gram(Xs) + wd;
    const double inv_n = 1.0 / static_cast<double>(n);
    auto loss_grad = [&](const Mat& W, Mat* G) {
        Mat Z = Xs * W.transpose();
        // log(1 + e^z) computed stably.
        Mat sp = Z.array().max(0.0) + (-Z.array().abs()).exp().log1p();
        double loss = (sp.array() - Y.array() * Z.array()).sum() * inv_n + 0.5 * wd * W.squaredNorm();
        if (G) {
            Mat P = (1.0 / (1.0 + (-Z.array()).exp())).matrix();
            *G = (P - Y).transpose() * Xs * inv_n + wd * W;
        }
        return loss;
    };
    Mat Ws = nesterov(Xs, C, L, max_iter, tol, loss_grad, iters);
    return Ws * sd.cwiseInverse().asDiagonal();
}

namespace {

std::pair<ProbeField, double> train_common(const ActivationSet& set, const TrainHyper& hyper, bool ovr) {
    set.validate();
    auto [y, values] = class_labels(set);
    const int C = static_cast<int>(values.size());
    if (C < 2) throw std::invalid_argument("single class: probes need at least 2 classes");
    std::vector<int> counts(C, 0);
    for (int c : y) ++counts[c];
    for (int c = 0; c < C; ++c)
        if (counts[c] < 2) throw std::invalid_argument("class " + fmt(values[c]) + " has fewer than 2 samples");
    Mat X = set.matrix();
    if (!X.allFinite()) throw NumericalError("non-finite activations");

    auto split = stratified_split(y, hyper.split_fraction, hyper.seed);
    Mat Xtr = take_rows(X, split.train_idx);
    Mat Xte = take_rows(X, split.test_idx);
    ProbeField f;
    if (hyper.centered) {
        f.offset = Xtr.colwise().mean().transpose();
        Xtr.rowwise() -= f.offset.transpose();
    }
    int iters = 0;
    auto ytr = take(y, split.train_idx);
    f.W = ovr ? fit_ovr(Xtr, ytr, C, hyper.weight_decay, hyper.max_iter, hyper.tol, &iters)
              : fit_softmax(Xtr, ytr, C, hyper.weight_decay, hyper.max_iter, hyper.tol, &iters);
    f.class_values = values;
    f.bias = Vec::Zero(C);
    f.layer = set.layer;
    f.train_meta = {hyper.weight_decay, iters, hyper.split_fraction, hyper.seed, ovr ? "ovr" : "multiclass",
                    hyper.centered};

    auto yte = take(y, split.test_idx);
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < Xte.rows(); ++i)
        if (probe_predict_index(f, Xte.row(i).transpose()) == yte[i]) ++correct;
    double acc = Xte.rows() ? static_cast<double>(correct) / static_cast<double>(Xte.rows()) : 0.0;
    return {f, acc};
}

}  // namespace

std::pair<ProbeField, double> train_multiclass(const ActivationSet& set, const TrainHyper& hyper) {
    return train_common(set, hyper, false);
}

std::pair<ProbeField, double> train_ovr(const ActivationSet& set, const TrainHyper& hyper) {
    return train_common(set, hyper, true);
}

Vec probe_scores(const ProbeField& field, const Vec& x) {
    if (x.size() != field.d()) throw std::invalid_argument("dimension mismatch");
    if (field.offset.size()) return field.W * (x - field.offset);
    return field.W * x;
}

Eigen::Index probe_predict_index(const ProbeField& field, const Vec& x) {
    Vec s = probe_scores(field, x);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < s.size(); ++i)
        if (s[i] > s[best]) best = i;
    return best;
}

double probe_predict(const ProbeField& field, const Vec& x) {
    return field.class_values[probe_predict_index(field, x)];
}

double probe_accuracy(const ProbeField& field, const ActivationSet& set) {
    if (set.size() == 0) throw std::invalid_argument("empty set");
    std::size_t correct = 0;
    Mat X = set.matrix();
    for (std::size_t i = 0; i < set.size(); ++i)
        if (probe_predict(field, X.row(static_cast<Eigen::Index>(i)).transpose()) == set.records[i].mu) ++correct;
    return static_cast<double>(correct) / static_cast<double>(set.size());
}

Mat probe_gram(const ProbeField& field, bool centered) {
    if (field.classes() < 2) throw std::invalid_argument("gram needs at least 2 classes");
    Mat W = field.W;
    if (centered) W.rowwise() -= W.colwise().mean();
    ProbeField tmp;
    tmp.W = W;
    Mat U = tmp.unit_rows();
    Mat K = U * U.transpose();
    K = 0.5 * (K + K.transpose());
    K.diagonal().setOnes();
    return K;
}

namespace {

std::pair<Mat, std::vector<int>> pair_data(const ActivationSet& set, double lo, double hi) {
    std::vector<std::size_t> idx;
    std::vector<int> y;
    for (std::size_t i = 0; i < set.size(); ++i) {
        double mu = set.records[i].mu;
        if (mu == lo || mu == hi) {
            idx.push_back(i);
            y.push_back(mu == hi ? 1 : 0);
        }
    }
    if (std::count(y.begin(), y.end(), 0) == 0) throw std::invalid_argument("missing class " + fmt(lo));
    if (std::count(y.begin(), y.end(), 1) == 0) throw std::invalid_argument("missing class " + fmt(hi));
    Mat X(static_cast<Eigen::Index>(idx.size()), set.d());
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (int j = 0; j < set.d(); ++j) X(i, j) = set.records[idx[i]].vector[j];
    return {X, y};
}

double centred_sign_accuracy(Mat X, const std::vector<int>& y, const Vec& w) {
    X.rowwise() -= X.colwise().mean();
    Vec s = X * w;
    std::size_t correct = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if ((s[i] > 0.0 ? 1 : 0) == y[i]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(s.size());
}

}  // namespace

std::vector<TransferPoint> transfer_curve(const ActivationSet& set, double mu_a, double mu_b,
                                          const std::vector<double>& shifts, const TrainHyper& hyper) {
    const double lo = std::min(mu_a, mu_b), hi = std::max(mu_a, mu_b);
    if (lo == hi) throw std::invalid_argument("transfer pair needs two distinct classes");
    auto [X, y] = pair_data(set, lo, hi);
    auto split = stratified_split(y, hyper.split_fraction, hyper.seed);
    Mat Xtr = take_rows(X, split.train_idx);
    Xtr.rowwise() -= Xtr.colwise().mean();
    Mat W = fit_softmax(Xtr, take(y, split.train_idx), 2, hyper.weight_decay, hyper.max_iter, hyper.tol);
    Vec w = (W.row(1) - W.row(0)).transpose();

    std::vector<TransferPoint> out;
    for (double s : shifts) {
        TransferPoint p{s, lo + s, hi + s, 0.0};
        if (s == 0.0) {
            p.accuracy = centred_sign_accuracy(take_rows(X, split.test_idx), take(y, split.test_idx), w);
        } else {
            auto [Xs, ys] = pair_data(set, lo + s, hi + s);
            p.accuracy = centred_sign_accuracy(Xs, ys, w);
        }
        out.push_back(p);
    }
    return out;
}

double untrained_pair_accuracy(const ActivationSet& set, double mu_a, double mu_b, std::uint64_t seed) {
    auto [X, y] = pair_data(set, std::min(mu_a, mu_b), std::max(mu_a, mu_b));
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    constexpr int kDraws = 256;
    double acc = 0.0;
    for (int k = 0; k < kDraws; ++k) {
        Vec w(X.cols());
        for (Eigen::Index j = 0; j < w.size(); ++j) w[j] = nd(rng);
        acc += centred_sign_accuracy(X, y, w);
    }
    return acc / kDraws;
}

Vec interp_linear(const Vec& w_a, const Vec& w_b, double alpha) {
    if (w_a.size() != w_b.size()) throw std::invalid_argument("dimension mismatch");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
    return alpha * w_a + (1.0 - alpha) * w_b;
}

Vec interp_slerp(const Vec& w_a, const Vec& w_b, double alpha) {
    if (w_a.size() != w_b.size()) throw std::invalid_argument("dimension mismatch");
    if (std::abs(w_a.norm() - 1.0) > 1e-9 || std::abs(w_b.norm() - 1.0) > 1e-9)
        throw std::invalid_argument("slerp needs unit-norm inputs");
    const double c = std::clamp(w_a.dot(w_b), -1.0, 1.0);
    const double theta = std::acos(c);
    if (M_PI - theta < 1e-6) throw NumericalError("undefined geodesic");
    if (theta < 1e-6) return ((1.0 - alpha) * w_a + alpha * w_b).normalized();
    const double s = std::sin(theta);
    Vec out = std::sin((1.0 - alpha) * theta) / s * w_a + std::sin(alpha * theta) / s * w_b;
    return out;
}

Vec kernel_weights(const Mat& G, const Vec& k, double ridge) {
    if (G.rows() != G.cols() || G.rows() != k.size()) throw std::invalid_argument("kernel shape mismatch");
    if (ridge <= 0.0) {
        Eigen::FullPivLU<Mat> lu(G);
        lu.setThreshold(1e-12);
        if (!lu.isInvertible()) throw NumericalError("singular Gram without ridge");
        return lu.solve(k);
    }
    Mat A = G + ridge * Mat::Identity(G.rows(), G.cols());
    Eigen::LDLT<Mat> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw NumericalError("kernel solve failed");
    return ldlt.solve(k);
}

Vec interp_kernel(const ProbeField& field, double mu_a, double mu_b, double alpha, double ridge) {
    const auto ia = field.index_of(mu_a), ib = field.index_of(mu_b);
    Mat U = field.unit_rows();
    Mat G = U * U.transpose();
    Vec k = alpha * G.row(ia).transpose() + (1.0 - alpha) * G.row(ib).transpose();
    Vec a = kernel_weights(G, k, ridge);
    return U.transpose() * a;
}

void write_probe(const ProbeField& field, const std::filesystem::path& path) {
    field.validate();
    const auto& m = field.train_meta;
    json header = {{"version", 1},
                   {"d", field.d()},
                   {"count", field.classes()},
                   {"layer", field.layer},
                   {"class_values", std::vector<double>(field.class_values.data(),
                                                        field.class_values.data() + field.class_values.size())},
                   {"train_meta",
                    {{"weight_decay", m.weight_decay},
                     {"epochs", m.epochs},
                     {"split_fraction", m.split_fraction},
                     {"seed", m.seed},
                     {"variant", m.variant},
                     {"centered", m.centered}}},
                   {"has_offset", field.offset.size() > 0}};
    std::string out("BMP1");
    std::string h = header.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
    out += h;
    for (Eigen::Index i = 0; i < field.W.rows(); ++i)
        for (Eigen::Index j = 0; j < field.W.cols(); ++j) detail::put_f64(out, field.W(i, j));
    for (Eigen::Index j = 0; j < field.offset.size(); ++j) detail::put_f64(out, field.offset[j]);
    detail::write_file(path, out);
}

ProbeField read_probe(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::Reader rd(bytes);
    if (rd.remaining() < 4 || rd.take(4) != "BMP1") throw FormatError("bad magic");
    json h;
    try {
        h = json::parse(rd.take(rd.u32()));
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad header: ") + e.what());
    }
    ProbeField f;
    try {
        const int d = h.at("d").get<int>(), C = h.at("count").get<int>();
        auto cv = h.at("class_values").get<std::vector<double>>();
        if (static_cast<int>(cv.size()) != C) throw FormatError("class_values/count mismatch");
        f.class_values = Eigen::Map<Vec>(cv.data(), C);
        f.layer = h.at("layer").get<int>();
        const auto& m = h.at("train_meta");
        f.train_meta = {m.at("weight_decay").get<double>(), m.at("epochs").get<int>(),
                        m.at("split_fraction").get<double>(), m.at("seed").get<std::uint64_t>(),
                        m.at("variant").get<std::string>(), m.at("centered").get<bool>()};
        const bool has_offset = h.value("has_offset", false);
        std::size_t expected = static_cast<std::size_t>(C) * d * 8 + (has_offset ? d * 8 : 0);
        if (rd.remaining() < expected) throw FormatError("truncated");
        if (rd.remaining() > expected) throw FormatError("header/payload count mismatch");
        f.W.resize(C, d);
        for (int i = 0; i < C; ++i)
            for (int j = 0; j < d; ++j) f.W(i, j) = rd.f64();
        if (has_offset) {
            f.offset.resize(d);
            for (int j = 0; j < d; ++j) f.offset[j] = rd.f64();
        }
        f.bias = Vec::Zero(C);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad probe header: ") + e.what());
    }
    f.validate();
    return f;
}

}  // namespace bm
