#include "beliefmap/seriesgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace bm {

using nlohmann::json;

SegmentedSeries gen_series(const std::vector<Segment>& segments, std::uint64_t seed) {
    if (segments.empty()) throw std::invalid_argument("empty segments");
    for (const auto& s : segments) {
        s.dist.validate();
        if (s.length <= 0) throw std::invalid_argument("segment length must be > 0");
    }
    SegmentedSeries out;
    out.segments = segments;
    out.seed = seed;
    std::mt19937_64 rng(seed);
    for (const auto& s : segments) {
        std::normal_distribution<double> dist(s.dist.mu, s.dist.sigma);
        for (std::int64_t i = 0; i < s.length; ++i) {
            long v = std::lround(dist(rng));
            out.values.push_back(static_cast<int>(std::clamp(v, 0L, 999L)));
        }
    }
    return out;
}

SegmentedSeries gen_meta_series(int m_switches, std::int64_t len_per_segment, const DistSpec& a,
                                const DistSpec& b, std::uint64_t seed) {
    if (m_switches < 2) throw std::invalid_argument("meta series needs at least 2 segments");
    if (len_per_segment <= 0) throw std::invalid_argument("segment length must be > 0");
    std::vector<Segment> segs;
    for (int i = 0; i < m_switches; ++i) segs.push_back({i % 2 == 0 ? a : b, len_per_segment});
    return gen_series(segs, seed);
}

std::string format_prompt(const std::vector<int>& values) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(',');
        out += std::to_string(values[i]);
    }
    return out;
}

std::string format_prompt(const SegmentedSeries& series) { return format_prompt(series.values); }

std::int64_t com2num_index(std::int64_t t) {
    if (t < 0) throw std::invalid_argument("t must be >= 0");
    return 2 * t + 2;
}

std::int64_t prompt_token_count(std::int64_t n_numbers) {
    if (n_numbers <= 0) return 1;
    return 2 * n_numbers - 1 + 1;
}

std::vector<Segment> parse_segments(const std::string& text) {
    std::vector<Segment> segs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        double mu = 0, sigma = 0;
        long long len = 0;
        char c1 = 0, c2 = 0;
        std::istringstream is(item);
        if (!(is >> mu >> c1 >> sigma >> c2 >> len) || c1 != ':' || c2 != ':' || !is.eof())
            throw std::invalid_argument("bad segment '" + item + "', expected mu:sigma:length");
        segs.push_back({{mu, sigma}, len});
    }
    if (segs.empty()) throw std::invalid_argument("empty segments");
    return segs;
}

void write_series_json(const SegmentedSeries& s, const std::filesystem::path& path) {
    json segs = json::array();
    for (const auto& g : s.segments)
        segs.push_back({{"mu", g.dist.mu}, {"sigma", g.dist.sigma}, {"length", g.length}});
    json j = {{"segments", segs}, {"seed", s.seed}, {"values", s.values}};
    detail::write_file(path, j.dump() + "\n");
}

SegmentedSeries read_series_json(const std::filesystem::path& path) {
    json j;
    try {
        j = json::parse(detail::read_file(path));
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad series file: ") + e.what());
    }
    SegmentedSeries s;
    try {
        for (const auto& g : j.at("segments"))
            s.segments.push_back({{g.at("mu").get<double>(), g.at("sigma").get<double>()},
                                  g.at("length").get<std::int64_t>()});
        s.seed = j.value("seed", std::uint64_t{0});
        s.values = j.at("values").get<std::vector<int>>();
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad series file: ") + e.what());
    }
    for (int v : s.values)
        if (v < 0 || v > 999) throw FormatError("series value out of [0, 999]");
    return s;
}

}  // namespace bm
