#pragma once

#include "beliefmap/common.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bm {

struct DistSpec {
    double mu = 500.0;
    double sigma = 100.0;

    // Throws std::invalid_argument unless sigma > 0 and 0 <= mu <= 999.
    void validate() const;
};

struct ActivationRecord {
    std::vector<float> vector;
    double mu = 0.0;
    double sigma = 0.0;
    std::int64_t t = 0;
    int layer = 0;
    std::int64_t seq_id = 0;
};

struct ActivationSet {
    std::vector<ActivationRecord> records;
    int layer = 0;

    std::size_t size() const { return records.size(); }
    int d() const { return records.empty() ? 0 : static_cast<int>(records.front().vector.size()); }

    // Throws FormatError "empty set" / "inconsistent d" / "inconsistent layer".
    void validate() const;
    // Rows widened to double.
    Mat matrix() const;
    // Records whose mu equals the given value exactly.
    ActivationSet select_mu(double mu) const;
    // Distinct mu values, ascending.
    std::vector<double> mu_values() const;
};

// Probability vector over token values 0..999.
class ProbVec {
public:
    ProbVec() : p_(Vec::Constant(kTokens, 1.0 / kTokens)) {}

    // Normalizes non-negative weights to sum 1. Rejects negative, non-finite
    // or all-zero input with NumericalError.
    static ProbVec normalized(const Vec& weights);

    const Vec& p() const { return p_; }
    double operator[](int k) const { return p_[k]; }

private:
    Vec p_;
};

struct HeadParams {
    Eigen::VectorXf norm_weights;
    double norm_epsilon = 1e-6;
    std::string norm = "rms";
    // kTokens x d; row j produces the logit for token value token_value_map[j].
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> unembed;
    std::vector<std::int64_t> token_value_map;

    int d() const { return static_cast<int>(norm_weights.size()); }
    // Throws FormatError on shape or permutation violations.
    void validate() const;
};

void write_activation_set(const ActivationSet& set, const std::filesystem::path& path);
ActivationSet read_activation_set(const std::filesystem::path& path);

void write_head_params(const HeadParams& head, const std::filesystem::path& path);
HeadParams read_head_params(const std::filesystem::path& path);

bool operator==(const ActivationRecord& a, const ActivationRecord& b);
bool operator==(const ActivationSet& a, const ActivationSet& b);
bool operator==(const HeadParams& a, const HeadParams& b);

namespace detail {

// Shared container framing: magic, u32 LE header length, JSON header.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);
void put_u32(std::string& out, std::uint32_t v);
void put_f32(std::string& out, float v);
void put_f64(std::string& out, double v);
void put_i64(std::string& out, std::int64_t v);

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}
    std::uint32_t u32();
    float f32();
    double f64();
    std::int64_t i64();
    std::string take(std::size_t n);
    std::size_t remaining() const { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const;
    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace detail

}  // namespace bm
