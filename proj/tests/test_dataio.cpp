#include "beliefmap/dataio.hpp"

#include "util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstring>
#include <limits>

using namespace bm;
using testutil::TempDir;

namespace {

std::uint32_t header_len(const std::string& bytes) {
    std::uint32_t n = 0;
    std::memcpy(&n, bytes.data() + 4, 4);
    return n;
}

}  // namespace

TEST_CASE("single record of width 4 writes header plus 16 payload bytes") {
    TempDir tmp;
    ActivationSet set;
    set.records.push_back({{1.0f, -2.5f, 3.25f, 0.0f}, 300, 100, 7, 0, 2});
    write_activation_set(set, tmp / "a.bma");
    const std::string bytes = detail::read_file(tmp / "a.bma");
    CHECK(bytes.substr(0, 4) == "BMA1");
    const auto hl = header_len(bytes);
    // Label columns mu, sigma, t, seq_id follow the payload, 8 bytes each.
    CHECK(bytes.size() == 8 + hl + 16 + 4 * 8);
    auto header = nlohmann::json::parse(bytes.substr(8, hl));
    CHECK(header["d"] == 4);
    CHECK(header["count"] == 1);
    CHECK(header["layer"] == 0);
    float first = 0;
    std::memcpy(&first, bytes.data() + 8 + hl, 4);
    CHECK(first == 1.0f);
    CHECK(read_activation_set(tmp / "a.bma") == set);
}

TEST_CASE("activation round trip is bit exact for awkward floats") {
    TempDir tmp;
    ActivationSet set = testutil::random_set(23, 7, 5);
    set.records[0].vector[0] = std::numeric_limits<float>::denorm_min();
    set.records[1].vector[1] = -0.0f;
    set.records[2].vector[2] = std::numeric_limits<float>::max();
    set.records[3].mu = 123.456789012345;
    set.records[4].t = (std::int64_t{1} << 40) + 3;
    set.records[5].seq_id = -9;
    write_activation_set(set, tmp / "a.bma");
    ActivationSet back = read_activation_set(tmp / "a.bma");
    CHECK(back == set);
    CHECK(std::signbit(back.records[1].vector[1]));
}

TEST_CASE("empty and ragged sets are rejected") {
    TempDir tmp;
    ActivationSet empty;
    CHECK_THROWS_WITH_AS(write_activation_set(empty, tmp / "e.bma"), "empty set", FormatError);
    ActivationSet ragged;
    ragged.records.push_back({{1, 2, 3}, 300, 100, 0, 0, 0});
    ragged.records.push_back({{1, 2}, 300, 100, 1, 0, 0});
    CHECK_THROWS_WITH_AS(write_activation_set(ragged, tmp / "r.bma"), "inconsistent d", FormatError);
}

TEST_CASE("corrupt activation files") {
    TempDir tmp;
    write_activation_set(testutil::random_set(4, 3, 1), tmp / "a.bma");
    const std::string good = detail::read_file(tmp / "a.bma");

    SUBCASE("bad magic") {
        std::string b = good;
        b.replace(0, 4, "XXXX");
        detail::write_file(tmp / "x.bma", b);
        CHECK_THROWS_WITH_AS(read_activation_set(tmp / "x.bma"), "bad magic", FormatError);
    }
    SUBCASE("truncated payload") {
        detail::write_file(tmp / "t.bma", good.substr(0, good.size() - 5));
        CHECK_THROWS_WITH_AS(read_activation_set(tmp / "t.bma"), "truncated", FormatError);
    }
    SUBCASE("trailing bytes") {
        detail::write_file(tmp / "l.bma", good + std::string(12, '\0'));
        CHECK_THROWS_WITH_AS(read_activation_set(tmp / "l.bma"), "header/payload count mismatch", FormatError);
    }
    SUBCASE("header cut inside the JSON") {
        detail::write_file(tmp / "h.bma", good.substr(0, 12));
        CHECK_THROWS_AS(read_activation_set(tmp / "h.bma"), FormatError);
    }
    SUBCASE("missing file is an I/O error") {
        CHECK_THROWS_AS(read_activation_set(tmp / "none.bma"), IoError);
    }
}

TEST_CASE("head params round trip") {
    TempDir tmp;
    HeadParams h = testutil::random_head(8, 3);
    h.norm_weights[2] = 0.5f;
    h.norm_epsilon = 1e-5;
    std::swap(h.token_value_map[0], h.token_value_map[999]);
    write_head_params(h, tmp / "h.bmh");
    CHECK(read_head_params(tmp / "h.bmh") == h);
    CHECK(detail::read_file(tmp / "h.bmh").substr(0, 4) == "BMH1");
}

TEST_CASE("head params validation") {
    TempDir tmp;
    HeadParams h = testutil::random_head(8, 3);
    SUBCASE("duplicate token value") {
        h.token_value_map[5] = 4;
        CHECK_THROWS_AS(write_head_params(h, tmp / "h.bmh"), FormatError);
    }
    SUBCASE("999 rows") {
        h.unembed.conservativeResize(999, 8);
        CHECK_THROWS_WITH_AS(h.validate(), "expected 1000 rows", FormatError);
    }
    SUBCASE("activation magic in a head file") {
        write_activation_set(testutil::random_set(2, 8, 0), tmp / "a.bma");
        CHECK_THROWS_WITH_AS(read_head_params(tmp / "a.bma"), "bad magic", FormatError);
    }
}

TEST_CASE("ProbVec normalizes and rejects bad mass") {
    Vec w = Vec::LinSpaced(kTokens, 0.0, 3.0);
    ProbVec p = ProbVec::normalized(w);
    CHECK(p.p().sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] == 0.0);
    CHECK(p[999] / p[500] == doctest::Approx(3.0 / (1.5015015015015014)).epsilon(1e-9));
    w[10] = -1e-9;
    CHECK_THROWS_AS(ProbVec::normalized(w), NumericalError);
    CHECK_THROWS_AS(ProbVec::normalized(Vec::Zero(kTokens)), NumericalError);
    CHECK(ProbVec().p().sum() == doctest::Approx(1.0));
}

TEST_CASE("set helpers") {
    ActivationSet set = testutil::random_set(10, 4, 2);
    CHECK(set.mu_values() == std::vector<double>{300, 350, 400, 450, 500});
    CHECK(set.select_mu(400).size() == 2);
    Mat X = set.matrix();
    CHECK(X.rows() == 10);
    CHECK(X(3, 2) == static_cast<double>(set.records[3].vector[2]));
}

TEST_CASE("DistSpec bounds") {
    CHECK_NOTHROW(DistSpec(0, 1).validate());
    CHECK_THROWS_AS(DistSpec(500, 0).validate(), std::invalid_argument);
    CHECK_THROWS_AS(DistSpec(1000, 10).validate(), std::invalid_argument);
}
