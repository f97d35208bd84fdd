#include "beliefmap/dataio.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

namespace bm {

using nlohmann::json;

void DistSpec::validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma))
        throw std::invalid_argument("sigma must be > 0");
    if (!(mu >= 0.0 && mu <= 999.0)) throw std::invalid_argument("mu must lie in [0, 999]");
}

void ActivationSet::validate() const {
    if (records.empty()) throw FormatError("empty set");
    const std::size_t d0 = records.front().vector.size();
    if (d0 == 0) throw FormatError("inconsistent d");
    for (const auto& r : records) {
        if (r.vector.size() != d0) throw FormatError("inconsistent d");
        if (r.layer != layer) throw FormatError("inconsistent layer");
    }
}

Mat ActivationSet::matrix() const {
    Mat X(static_cast<Eigen::Index>(records.size()), d());
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].vector.size() != static_cast<std::size_t>(X.cols()))
            throw FormatError("inconsistent d");
        for (Eigen::Index j = 0; j < X.cols(); ++j) X(i, j) = records[i].vector[j];
    }
    return X;
}

ActivationSet ActivationSet::select_mu(double mu) const {
    ActivationSet out;
    out.layer = layer;
    for (const auto& r : records)
        if (r.mu == mu) out.records.push_back(r);
    return out;
}

std::vector<double> ActivationSet::mu_values() const {
    std::set<double> s;
    for (const auto& r : records) s.insert(r.mu);
    return {s.begin(), s.end()};
}

ProbVec ProbVec::normalized(const Vec& weights) {
    if (weights.size() != kTokens) throw std::invalid_argument("ProbVec needs 1000 entries");
    double total = 0.0;
    for (Eigen::Index k = 0; k < weights.size(); ++k) {
        if (!std::isfinite(weights[k]) || weights[k] < 0.0)
            throw NumericalError("ProbVec entries must be finite and non-negative");
        total += weights[k];
    }
    if (!(total > 0.0)) throw NumericalError("ProbVec has zero mass");
    ProbVec out;
    out.p_ = weights / total;
    return out;
}

void HeadParams::validate() const {
    if (unembed.rows() != kTokens) throw FormatError("expected 1000 rows");
    if (unembed.cols() != norm_weights.size()) throw FormatError("unembed/norm_weights d mismatch");
    if (token_value_map.size() != static_cast<std::size_t>(kTokens))
        throw FormatError("token_value_map must have 1000 entries");
    std::vector<bool> seen(kTokens, false);
    for (auto v : token_value_map) {
        if (v < 0 || v >= kTokens) throw FormatError("token_value_map entry out of range");
        if (seen[v]) throw FormatError("token_value_map has duplicate value " + std::to_string(v));
        seen[v] = true;
    }
    if (!(norm_epsilon >= 0.0)) throw FormatError("norm_epsilon must be >= 0");
}

namespace detail {

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + path.string());
}

namespace {
template <class U>
void put_le(std::string& out, U u) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFF));
}
}  // namespace

void put_u32(std::string& out, std::uint32_t v) { put_le(out, v); }
void put_f32(std::string& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
void put_f64(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
void put_i64(std::string& out, std::int64_t v) { put_le(out, static_cast<std::uint64_t>(v)); }

void Reader::need(std::size_t n) const {
    if (remaining() < n) throw FormatError("truncated");
}

namespace {
template <class U>
U get_le(const std::string& b, std::size_t pos) {
    U u = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i)
        u |= static_cast<U>(static_cast<unsigned char>(b[pos + i])) << (8 * i);
    return u;
}
}  // namespace

std::uint32_t Reader::u32() {
    need(4);
    auto v = get_le<std::uint32_t>(bytes_, pos_);
    pos_ += 4;
    return v;
}

float Reader::f32() { return std::bit_cast<float>(u32()); }

double Reader::f64() {
    need(8);
    auto v = get_le<std::uint64_t>(bytes_, pos_);
    pos_ += 8;
    return std::bit_cast<double>(v);
}

std::int64_t Reader::i64() { return static_cast<std::int64_t>(std::bit_cast<std::uint64_t>(f64())); }

std::string Reader::take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
}

}  // namespace detail

namespace {

struct LabelField {
    std::string name;
    std::string type;
};

const std::vector<LabelField> kActivationLabels = {
    {"mu", "f64"}, {"sigma", "f64"}, {"t", "i64"}, {"seq_id", "i64"}};

std::string frame(const char* magic, const json& header) {
    std::string out(magic, 4);
    std::string h = header.dump();
    detail::put_u32(out, static_cast<std::uint32_t>(h.size()));
    out += h;
    return out;
}

json unframe(detail::Reader& rd, const char* magic) {
    if (rd.remaining() < 4 || rd.take(4) != std::string(magic, 4)) throw FormatError("bad magic");
    std::uint32_t len = rd.u32();
    std::string h = rd.take(len);
    try {
        return json::parse(h);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad header: ") + e.what());
    }
}

template <class T>
T header_get(const json& h, const char* key) {
    if (!h.contains(key)) throw FormatError(std::string("header missing ") + key);
    try {
        return h.at(key).get<T>();
    } catch (const json::exception&) {
        throw FormatError(std::string("header field has wrong type: ") + key);
    }
}

}  // namespace

void write_activation_set(const ActivationSet& set, const std::filesystem::path& path) {
    set.validate();
    const int d = set.d();
    json label_fields = json::array();
    for (const auto& f : kActivationLabels) label_fields.push_back({{"name", f.name}, {"type", f.type}});
    json header = {{"version", 1},
                   {"d", d},
                   {"layer", set.layer},
                   {"count", set.size()},
                   {"label_fields", label_fields}};
    std::string out = frame("BMA1", header);
    out.reserve(out.size() + set.size() * (4 * d + 32));
    for (const auto& r : set.records)
        for (float v : r.vector) detail::put_f32(out, v);
    for (const auto& r : set.records) detail::put_f64(out, r.mu);
    for (const auto& r : set.records) detail::put_f64(out, r.sigma);
    for (const auto& r : set.records) detail::put_i64(out, r.t);
    for (const auto& r : set.records) detail::put_i64(out, r.seq_id);
    detail::write_file(path, out);
}

ActivationSet read_activation_set(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::Reader rd(bytes);
    json h = unframe(rd, "BMA1");
    const auto d = header_get<std::int64_t>(h, "d");
    const auto count = header_get<std::int64_t>(h, "count");
    const auto layer = header_get<int>(h, "layer");
    if (d <= 0 || count <= 0) throw FormatError("empty set");

    std::vector<LabelField> fields;
    if (h.contains("label_fields")) {
        for (const auto& f : h.at("label_fields"))
            fields.push_back({f.at("name").get<std::string>(), f.at("type").get<std::string>()});
    } else {
        fields = kActivationLabels;
    }

    std::size_t expected = static_cast<std::size_t>(count) * static_cast<std::size_t>(d) * 4 +
                           fields.size() * static_cast<std::size_t>(count) * 8;
    if (rd.remaining() < expected) throw FormatError("truncated");
    if (rd.remaining() > expected) throw FormatError("header/payload count mismatch");

    ActivationSet set;
    set.layer = layer;
    set.records.resize(static_cast<std::size_t>(count));
    for (auto& r : set.records) {
        r.layer = layer;
        r.vector.resize(static_cast<std::size_t>(d));
        for (auto& v : r.vector) v = rd.f32();
    }
    for (const auto& f : fields) {
        if (f.type != "f64" && f.type != "i64") throw FormatError("unknown label type " + f.type);
        for (auto& r : set.records) {
            if (f.name == "mu") r.mu = rd.f64();
            else if (f.name == "sigma") r.sigma = rd.f64();
            else if (f.name == "t") r.t = rd.i64();
            else if (f.name == "seq_id") r.seq_id = rd.i64();
            else rd.f64();  // unknown column, skipped
        }
    }
    return set;
}

void write_head_params(const HeadParams& head, const std::filesystem::path& path) {
    head.validate();
    const int d = head.d();
    json header = {{"version", 1},
                   {"d", d},
                   {"count", kTokens},
                   {"norm", head.norm},
                   {"norm_epsilon", head.norm_epsilon},
                   {"blocks", {"unembed:f32[count][d]", "norm_weights:f32[d]"}},
                   {"label_fields", json::array({{{"name", "token_value"}, {"type", "i64"}}})}};
    std::string out = frame("BMH1", header);
    for (int i = 0; i < kTokens; ++i)
        for (int j = 0; j < d; ++j) detail::put_f32(out, head.unembed(i, j));
    for (int j = 0; j < d; ++j) detail::put_f32(out, head.norm_weights[j]);
    for (auto v : head.token_value_map) detail::put_i64(out, v);
    detail::write_file(path, out);
}

HeadParams read_head_params(const std::filesystem::path& path) {
    const std::string bytes = detail::read_file(path);
    detail::Reader rd(bytes);
    json h = unframe(rd, "BMH1");
    const auto d = header_get<std::int64_t>(h, "d");
    const auto count = header_get<std::int64_t>(h, "count");
    if (count != kTokens) throw FormatError("expected 1000 rows");
    if (d <= 0) throw FormatError("d must be positive");
    std::size_t expected = static_cast<std::size_t>(count * d * 4 + d * 4 + count * 8);
    if (rd.remaining() < expected) throw FormatError("truncated");
    if (rd.remaining() > expected) throw FormatError("header/payload count mismatch");

    HeadParams head;
    head.norm = h.value("norm", std::string("rms"));
    head.norm_epsilon = header_get<double>(h, "norm_epsilon");
    head.unembed.resize(kTokens, d);
    for (int i = 0; i < kTokens; ++i)
        for (int j = 0; j < d; ++j) head.unembed(i, j) = rd.f32();
    head.norm_weights.resize(d);
    for (int j = 0; j < d; ++j) head.norm_weights[j] = rd.f32();
    head.token_value_map.resize(kTokens);
    for (auto& v : head.token_value_map) v = rd.i64();
    head.validate();
    return head;
}

bool operator==(const ActivationRecord& a, const ActivationRecord& b) {
    return a.vector == b.vector && a.mu == b.mu && a.sigma == b.sigma && a.t == b.t &&
           a.layer == b.layer && a.seq_id == b.seq_id;
}

bool operator==(const ActivationSet& a, const ActivationSet& b) {
    return a.layer == b.layer && a.records == b.records;
}

bool operator==(const HeadParams& a, const HeadParams& b) {
    return a.norm == b.norm && a.norm_epsilon == b.norm_epsilon &&
           a.norm_weights.size() == b.norm_weights.size() && a.norm_weights == b.norm_weights &&
           a.unembed.rows() == b.unembed.rows() && a.unembed.cols() == b.unembed.cols() &&
           a.unembed == b.unembed && a.token_value_map == b.token_value_map;
}

}  // namespace bm
