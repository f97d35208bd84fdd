#pragma once

#include "beliefmap/dataio.hpp"

#include <filesystem>
#include <random>
#include <string>

namespace testutil {

namespace fs = std::filesystem;

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("bm_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    fs::path operator/(const std::string& name) const { return path_ / name; }
    const fs::path& path() const { return path_; }

private:
    fs::path path_;
};

inline bm::ActivationSet random_set(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd;
    bm::ActivationSet set;
    set.layer = 3;
    for (int i = 0; i < n; ++i) {
        bm::ActivationRecord r;
        r.vector.resize(static_cast<std::size_t>(d));
        for (auto& v : r.vector) v = nd(rng);
        r.mu = 300.0 + 50.0 * (i % 5);
        r.sigma = 100.0;
        r.t = i;
        r.layer = 3;
        r.seq_id = i / 5;
        set.records.push_back(std::move(r));
    }
    return set;
}

inline bm::HeadParams random_head(int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> nd;
    bm::HeadParams h;
    h.norm_weights = Eigen::VectorXf::Ones(d);
    h.unembed.resize(bm::kTokens, d);
    for (int i = 0; i < bm::kTokens; ++i)
        for (int j = 0; j < d; ++j) h.unembed(i, j) = nd(rng);
    h.token_value_map.resize(bm::kTokens);
    for (int i = 0; i < bm::kTokens; ++i) h.token_value_map[static_cast<std::size_t>(i)] = i;
    return h;
}

}  // namespace testutil
