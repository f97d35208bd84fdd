#include "beliefmap/cli.hpp"
#include "beliefmap/dataio.hpp"
#include "beliefmap/seriesgen.hpp"
#include "beliefmap/synth.hpp"

#include "util.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace bm;
using nlohmann::json;
using testutil::TempDir;

namespace {

int run_cli(const std::vector<std::string>& args) { return bm::cli::run(args); }

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cells.push_back(c);
        rows.push_back(std::move(cells));
    }
    return rows;
}

// Runs the installed binary with stderr captured to a file.
int shell(const std::string& args, const std::filesystem::path& err) {
    const std::string cmd = std::string(BM_CLI_PATH) + " " + args + " 2> " + err.string() + " > /dev/null";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void small_world(const std::filesystem::path& dir) {
    SynthConfig cfg;
    cfg.d = 24;
    cfg.n_per_class = 30;
    detail::write_file(dir / "small.json", synth_config_to_json(cfg));
    REQUIRE(run_cli({"synth", "--config", (dir / "small.json").string(), "--out", (dir / "w").string()}) == 0);
}

}  // namespace

TEST_CASE("gen writes the series and a manifest") {
    TempDir tmp;
    const auto out = (tmp / "s.json").string();
    REQUIRE(run_cli({"gen", "--segments", "300:100:1000,700:100:1000", "--seed", "7", "--out", out, "--prompt",
                 (tmp / "s.txt").string()}) == 0);
    auto s = read_series_json(out);
    CHECK(s.values.size() == 2000);
    CHECK(s.seed == 7);
    CHECK(detail::read_file(tmp / "s.txt") == format_prompt(s));

    auto m = json::parse(detail::read_file(out + ".manifest.json"));
    CHECK(m["command"] == json{"gen"});
    CHECK(m["seed"] == 7);
    CHECK(m["options"]["--segments"] == "300:100:1000,700:100:1000");
    CHECK(m["outputs"][0] == out);
    for (const char* k : {"beliefmap", "eigen", "boost", "nlohmann_json"}) CHECK(m["versions"].contains(k));

    const std::string first = detail::read_file(out);
    REQUIRE(run_cli({"gen", "--segments", "300:100:1000,700:100:1000", "--seed", "7", "--out", out}) == 0);
    CHECK(detail::read_file(out) == first);

    REQUIRE(run_cli({"gen", "--meta", "4", "--len", "10", "--out", out}) == 0);
    CHECK(read_series_json(out).values.size() == 40);
}

TEST_CASE("synth, probe and geometry pipeline") {
    TempDir tmp;
    small_world(tmp.path());
    const auto w = tmp / "w";
    CHECK(std::filesystem::exists(w / "acts.bma"));
    CHECK(std::filesystem::exists(w / "head.bmh"));
    CHECK(std::filesystem::exists(w / "manifest.json"));
    const std::string acts_before = detail::read_file(w / "acts.bma");

    const auto probe = (tmp / "p.probe").string();
    REQUIRE(run_cli({"probe", "train", "--acts", (w / "acts.bma").string(), "--out", probe}) == 0);
    CHECK(detail::read_file(w / "acts.bma") == acts_before);
    auto pm = json::parse(detail::read_file(probe + ".manifest.json"));
    CHECK(pm["command"] == json{"probe", "train"});
    CHECK(pm["results"]["test_accuracy"].get<double>() > 0.6);

    const auto gram = tmp / "k.csv";
    REQUIRE(run_cli({"probe", "gram", "--probe", probe, "--out", gram.string()}) == 0);
    auto rows = read_csv(gram);
    REQUIRE(rows.size() == 10);
    CHECK(rows[0].size() == 10);
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(std::stod(rows[i][i]) == doctest::Approx(1.0).epsilon(1e-12));

    REQUIRE(run_cli({"probe", "eval", "--probe", probe, "--acts", (w / "acts.bma").string(), "--out",
                 (tmp / "e.json").string()}) == 0);
    CHECK(json::parse(detail::read_file(tmp / "e.json"))["accuracy"].get<double>() > 0.6);

    REQUIRE(run_cli({"probe", "interp", "--probe", probe, "--a", "300", "--b", "400", "--alpha", "0.5", "--method",
                 "kernel", "--target", "350", "--out", (tmp / "i.json").string()}) == 0);
    REQUIRE(run_cli({"probe", "transfer", "--acts", (w / "acts.bma").string(), "--pair", "300,350", "--shifts",
                 "0,100,200", "--out", (tmp / "t.csv").string()}) == 0);
    CHECK(read_csv(tmp / "t.csv").size() == 4);

    REQUIRE(run_cli({"geom", "eig", "--probe", probe, "--out", (tmp / "eig.csv").string()}) == 0);
    REQUIRE(run_cli({"geom", "embed", "--probe", probe, "--r", "2", "--out", (tmp / "emb.csv").string()}) == 0);
    REQUIRE(run_cli({"geom", "spline", "--acts", (w / "acts.bma").string(), "--at", "325,675", "--out",
                 (tmp / "spl.csv").string()}) == 0);
    REQUIRE(run_cli({"embed", "--acts", (w / "acts.bma").string(), "--k", "2", "--out", (tmp / "pca.csv").string()}) == 0);
    CHECK(read_csv(tmp / "pca.csv")[0].back() == "c2");

    for (const char* mode : {"linear", "spline", "probe", "field"}) {
        std::vector<std::string> args{"steer", "--mode", mode, "--acts", (w / "acts.bma").string(), "--head",
                                      (w / "head.bmh").string(), "--out", (tmp / (std::string(mode) + ".csv")).string()};
        if (std::string(mode) == "probe" || std::string(mode) == "field") {
            args.push_back("--probe");
            args.push_back(probe);
        }
        CHECK(run_cli(args) == 0);
        CHECK(read_csv(tmp / (std::string(mode) + ".csv"))[0][0] == "step");
    }
}

TEST_CASE("metrics and observer write trajectories") {
    TempDir tmp;
    small_world(tmp.path());
    const auto w = tmp / "w";
    REQUIRE(run_cli({"metrics", "--acts", (w / "acts.bma").string(), "--head", (w / "head.bmh").string(), "--seq", "2",
                 "--out", (tmp / "m.csv").string()}) == 0);
    auto rows = read_csv(tmp / "m.csv");
    CHECK(rows.size() == 31);
    CHECK(rows[0][5] == "hellinger_to_prev");

    REQUIRE(run_cli({"gen", "--segments", "300:100:200,700:100:200", "--out", (tmp / "s.json").string()}) == 0);
    REQUIRE(run_cli({"observer", "--series", (tmp / "s.json").string(), "--stride", "50", "--out",
                 (tmp / "o.csv").string()}) == 0);
    CHECK(read_csv(tmp / "o.csv").size() == 9);
}

TEST_CASE("reproduce bundles are deterministic") {
    TempDir tmp;
    REQUIRE(run_cli({"reproduce", "fig5", "--synth", "default", "--out", (tmp / "a").string()}) == 0);
    const auto dir = tmp / "a" / "fig5_primal_steer";
    CHECK(read_csv(dir / "linear.csv")[0][0] == "step");
    CHECK(read_csv(dir / "spline.csv").size() > 2);
    CHECK(std::filesystem::exists(dir / "manifest.json"));
    REQUIRE(run_cli({"reproduce", "fig5", "--out", (tmp / "b").string()}) == 0);
    CHECK(detail::read_file(dir / "linear.csv") == detail::read_file(tmp / "b" / "fig5_primal_steer" / "linear.csv"));

    REQUIRE(run_cli({"reproduce", "figB_observer", "--out", (tmp / "c").string()}) == 0);
    CHECK(read_csv(tmp / "c" / "figB_observer" / "closed_vs_simulated.csv").size() > 10);
}

TEST_CASE("exit codes") {
    TempDir tmp;
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    CHECK(run_cli({"reproduce", "fig99"}) == 2);
    CHECK(run_cli({"gen", "--segments", "300:100", "--out", (tmp / "x.json").string()}) == 2);
    CHECK(run_cli({"gen", "--segments", "300:100:10", "--seed", "abc", "--out", (tmp / "x.json").string()}) == 2);
    CHECK(run_cli({"probe", "gram", "--probe", (tmp / "missing.probe").string(), "--out", (tmp / "k.csv").string()}) == 3);
    detail::write_file(tmp / "junk.bma", "not an activation file");
    CHECK(run_cli({"embed", "--acts", (tmp / "junk.bma").string(), "--out", (tmp / "e.csv").string()}) == 3);

    // A zero activation cannot be rms-normalized.
    ActivationSet zero;
    zero.records.push_back({std::vector<float>(8, 0.0f), 500, 100, 0, 0, 0});
    write_activation_set(zero, tmp / "zero.bma");
    write_head_params(testutil::random_head(8, 1), tmp / "h.bmh");
    CHECK(run_cli({"metrics", "--acts", (tmp / "zero.bma").string(), "--head", (tmp / "h.bmh").string(), "--out",
               (tmp / "m.csv").string()}) == 4);
}

TEST_CASE("the binary reports one diagnostic line") {
    TempDir tmp;
    const auto err = tmp / "err.txt";
    CHECK(shell("reproduce no_such_experiment --out " + (tmp / "f").string(), err) == 2);
    const std::string msg = detail::read_file(err);
    CHECK(msg.rfind("beliefmap: ", 0) == 0);
    CHECK(std::count(msg.begin(), msg.end(), '\n') == 1);
    CHECK(shell("probe gram --probe " + (tmp / "none").string() + " --out " + (tmp / "k.csv").string(), err) == 3);
    CHECK(shell("--version", err) == 0);
}
