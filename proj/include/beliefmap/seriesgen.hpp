#pragma once

#include "beliefmap/dataio.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace bm {

struct Segment {
    DistSpec dist;
    std::int64_t length = 0;
};

struct SegmentedSeries {
    std::vector<Segment> segments;
    std::uint64_t seed = 0;
    std::vector<int> values;
};

// Draws each value from its segment's Gaussian using std::mt19937_64 seeded
// with `seed` and std::normal_distribution<double>, rounds half away from zero,
// then clamps to [0, 999]. Reproducible for a given standard library.
SegmentedSeries gen_series(const std::vector<Segment>& segments, std::uint64_t seed);

// Alternating A, B, A, ... segments of equal length.
SegmentedSeries gen_meta_series(int m_switches, std::int64_t len_per_segment, const DistSpec& a,
                                const DistSpec& b, std::uint64_t seed);

// "533,460,689": no spaces, no trailing comma.
std::string format_prompt(const SegmentedSeries& series);
std::string format_prompt(const std::vector<int>& values);

// Global token index of the comma that predicts number t (0-based, with a
// begin-of-text token in front).
std::int64_t com2num_index(std::int64_t t);

// Token count of a prompt with one token per number and per comma, plus BOS.
std::int64_t prompt_token_count(std::int64_t n_numbers);

// "300:100:1000,700:100:1000" -> segments (mu:sigma:length).
std::vector<Segment> parse_segments(const std::string& text);

void write_series_json(const SegmentedSeries& s, const std::filesystem::path& path);
SegmentedSeries read_series_json(const std::filesystem::path& path);

}  // namespace bm
