#include "beliefmap/cli.hpp"

#include "beliefmap/embedding.hpp"
#include "beliefmap/experiments.hpp"
#include "beliefmap/metrics.hpp"
#include "beliefmap/seriesgen.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/version.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace bm::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Run {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    fs::path manifest;
    std::optional<std::uint64_t> seed;
    json extra = json::object();
};

using Action = std::function<void(Run&)>;

// ------------------------------------------------------------------ parsing

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep)) out.push_back(item);
    if (!s.empty() && s.back() == sep) out.emplace_back();
    return out;
}

double to_double(const std::string& s, const std::string& what) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        pos = 0;
    }
    if (pos == 0 || pos != s.size() || !std::isfinite(v)) throw std::invalid_argument("bad number in " + what + ": '" + s + "'");
    return v;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
    std::vector<double> out;
    for (const auto& item : split(s, ',')) out.push_back(to_double(item, what));
    if (out.empty()) throw std::invalid_argument(what + " is empty");
    return out;
}

DistSpec parse_dist(const std::string& s) {
    auto parts = split(s, ':');
    if (parts.size() != 2) throw std::invalid_argument("expected mu:sigma, got '" + s + "'");
    DistSpec d{to_double(parts[0], "mu"), to_double(parts[1], "sigma")};
    d.validate();
    return d;
}

fs::path manifest_for(const fs::path& out) {
    if (fs::is_directory(out)) return out / "manifest.json";
    return fs::path(out.string() + ".manifest.json");
}

void write_csv(const fs::path& path, const std::string& header, const std::vector<std::vector<double>>& rows) {
    std::string s = header + "\n";
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < r.size(); ++j) s += (j ? "," : "") + fmt(r[j]);
        s += "\n";
    }
    detail::write_file(path, s);
}

void write_vector_csv(const fs::path& path, const Vec& v) {
    std::vector<std::vector<double>> rows;
    for (Eigen::Index j = 0; j < v.size(); ++j) rows.push_back({static_cast<double>(j), v[j]});
    write_csv(path, "index,value", rows);
}

void write_matrix_csv(const fs::path& path, const Mat& M, const Vec& labels) {
    std::string header = "mu";
    for (Eigen::Index j = 0; j < M.cols(); ++j) header += ",mu_" + fmt(labels[j]);
    std::vector<std::vector<double>> rows;
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        std::vector<double> r{labels[i]};
        for (Eigen::Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(std::move(r));
    }
    write_csv(path, header, rows);
}

double default_sigma(const ActivationSet& set) {
    if (set.records.empty()) throw std::invalid_argument("empty set");
    return set.records.front().sigma;
}

SynthConfig load_synth(const std::string& spec) {
    if (spec == "default") return SynthConfig{};
    return synth_config_from_json(detail::read_file(spec));
}

json options_json(const CLI::App* app) {
    json o = json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_name() == "--help" || opt->count() == 0) continue;
        auto res = opt->results();
        o[opt->get_name()] = res.size() == 1 ? json(res.front()) : json(res);
    }
    return o;
}

void write_manifest(const Run& run, const std::vector<const CLI::App*>& chain) {
    json m;
    std::vector<std::string> cmd;
    json opts = json::object();
    for (const auto* a : chain) {
        if (a->get_parent() == nullptr) continue;
        cmd.push_back(a->get_name());
        opts.update(options_json(a));
    }
    m["command"] = cmd;
    m["options"] = opts;
    m["inputs"] = run.inputs;
    m["outputs"] = run.outputs;
    m["seed"] = run.seed ? json(*run.seed) : json(nullptr);
    m["versions"] = {{"beliefmap", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"boost", BOOST_LIB_VERSION},
                     {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                           std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
    if (!run.extra.empty()) m["results"] = run.extra;
    detail::write_file(run.manifest, m.dump(2) + "\n");
}

// -------------------------------------------------------------- subcommands

struct Registry {
    std::map<const CLI::App*, Action> actions;
};

void add_gen(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("gen", "Generate a segmented integer series");
    auto segments = std::make_shared<std::string>();
    auto meta = std::make_shared<int>(0);
    auto len = std::make_shared<std::int64_t>(1000);
    auto a = std::make_shared<std::string>("300:100");
    auto b = std::make_shared<std::string>("700:100");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto out = std::make_shared<std::string>();
    auto prompt = std::make_shared<std::string>();
    auto* seg_opt = sub->add_option("--segments", *segments, "mu:sigma:length,...");
    auto* meta_opt = sub->add_option("--meta", *meta, "alternate --a/--b for this many switches");
    seg_opt->excludes(meta_opt);
    sub->add_option("--len", *len, "length per segment with --meta");
    sub->add_option("--a", *a, "mu:sigma of even segments with --meta");
    sub->add_option("--b", *b, "mu:sigma of odd segments with --meta");
    sub->add_option("--seed", *seed);
    sub->add_option("--out", *out, "series JSON")->required();
    sub->add_option("--prompt", *prompt, "also write the comma-joined prompt text");
    reg.actions[sub] = [=](Run& run) {
        SegmentedSeries s;
        if (!segments->empty()) {
            s = gen_series(parse_segments(*segments), *seed);
        } else if (*meta > 0) {
            s = gen_meta_series(*meta, *len, parse_dist(*a), parse_dist(*b), *seed);
        } else {
            throw std::invalid_argument("gen needs --segments or --meta");
        }
        write_series_json(s, *out);
        run.outputs.push_back(*out);
        if (!prompt->empty()) {
            detail::write_file(*prompt, format_prompt(s));
            run.outputs.push_back(*prompt);
        }
        run.seed = *seed;
        run.manifest = manifest_for(*out);
        run.extra["values"] = s.values.size();
    };
}

void add_synth(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("synth", "Sample the synthetic world: activations and readout head");
    auto config = std::make_shared<std::string>("default");
    auto out = std::make_shared<std::string>();
    auto seed = std::make_shared<std::uint64_t>(0);
    auto* seed_opt = sub->add_option("--seed", *seed, "overrides the config seed");
    sub->add_option("--config", *config, "JSON config or 'default'");
    sub->add_option("--out", *out, "output directory")->required();
    reg.actions[sub] = [=](Run& run) {
        SynthConfig cfg = load_synth(*config);
        if (seed_opt->count()) cfg.seed = *seed;
        cfg.validate();
        if (*config != "default") run.inputs.push_back(*config);
        fs::create_directories(*out);
        SynthWorld world(cfg);
        const fs::path dir(*out);
        write_activation_set(sample_set(world, cfg), dir / "acts.bma");
        write_head_params(world.head(), dir / "head.bmh");
        detail::write_file(dir / "config.json", synth_config_to_json(cfg));
        run.outputs = {(dir / "acts.bma").string(), (dir / "head.bmh").string(), (dir / "config.json").string()};
        run.seed = cfg.seed;
        run.manifest = dir / "manifest.json";
        run.extra["head_max_mean_err"] = world.head_fit().max_mean_err;
        run.extra["head_max_std_err"] = world.head_fit().max_std_err;
    };
}

void add_metrics(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("metrics", "Belief trajectory of one sequence read out through a head");
    auto acts = std::make_shared<std::string>();
    auto head = std::make_shared<std::string>();
    auto ref = std::make_shared<std::string>("500:100");
    auto seq = std::make_shared<std::int64_t>(-1);
    auto temp = std::make_shared<double>(1.0);
    auto tol = std::make_shared<std::string>();
    auto from = std::make_shared<std::int64_t>(0);
    auto out = std::make_shared<std::string>();
    sub->add_option("--acts", *acts)->required();
    sub->add_option("--head", *head)->required();
    sub->add_option("--ref", *ref, "mu:sigma reference for kl_to_ref and equilibration");
    sub->add_option("--seq", *seq, "seq_id to use (default: the first record's)");
    sub->add_option("--temperature", *temp);
    sub->add_option("--equilibrate", *tol, "tol_mean,tol_std");
    sub->add_option("--from", *from, "equilibration counted from this t");
    sub->add_option("--out", *out, "trajectory CSV")->required();
    reg.actions[sub] = [=](Run& run) {
        const ActivationSet set = read_activation_set(*acts);
        const HeadParams h = read_head_params(*head);
        const DistSpec r = parse_dist(*ref);
        set.validate();
        const std::int64_t id = *seq >= 0 ? *seq : set.records.front().seq_id;
        std::vector<const ActivationRecord*> recs;
        for (const auto& rec : set.records)
            if (rec.seq_id == id) recs.push_back(&rec);
        if (recs.empty()) throw std::invalid_argument("no records with seq_id " + std::to_string(id));
        std::stable_sort(recs.begin(), recs.end(), [](auto* a, auto* b) { return a->t < b->t; });
        std::vector<std::int64_t> ts(recs.size());
        std::vector<ProbVec> ps(recs.size());
        parallel_for(recs.size(), [&](std::size_t i) {
            ts[i] = recs[i]->t;
            ps[i] = readout(Eigen::Map<const Eigen::VectorXf>(recs[i]->vector.data(),
                                                               static_cast<Eigen::Index>(recs[i]->vector.size()))
                                .cast<double>(),
                            h, *temp);
        });
        auto traj = make_trajectory(ts, ps);
        write_trajectory_csv(traj, discretized_normal(r), *out);
        run.inputs = {*acts, *head};
        run.outputs = {*out};
        run.manifest = manifest_for(*out);
        if (!tol->empty()) {
            auto t = parse_doubles(*tol, "--equilibrate");
            if (t.size() != 2) throw std::invalid_argument("--equilibrate expects tol_mean,tol_std");
            auto eq = equilibration_time(traj, r, t[0], t[1], *from);
            run.extra["equilibration_time"] = eq ? json(*eq) : json("never");
            std::cout << "equilibration_time: " << (eq ? std::to_string(*eq) : std::string("never")) << "\n";
        }
    };
}

void add_embed(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("embed", "PCA of activations or inPCA of their readouts");
    auto acts = std::make_shared<std::string>();
    auto head = std::make_shared<std::string>();
    auto method = std::make_shared<std::string>("pca");
    auto k = std::make_shared<int>(3);
    auto out = std::make_shared<std::string>();
    sub->add_option("--acts", *acts)->required();
    sub->add_option("--head", *head, "required for inpca");
    sub->add_option("--method", *method)->check(CLI::IsMember({"pca", "inpca"}));
    sub->add_option("--k", *k)->check(CLI::PositiveNumber);
    sub->add_option("--out", *out, "coordinates CSV")->required();
    reg.actions[sub] = [=](Run& run) {
        const ActivationSet set = read_activation_set(*acts);
        set.validate();
        run.inputs = {*acts};
        EmbeddingResult e;
        if (*method == "pca") {
            e = pca(set.matrix(), *k);
        } else {
            if (head->empty()) throw std::invalid_argument("inpca needs --head");
            const HeadParams h = read_head_params(*head);
            run.inputs.push_back(*head);
            const Mat X = set.matrix();
            std::vector<ProbVec> ps(set.size());
            parallel_for(ps.size(), [&](std::size_t i) {
                ps[i] = readout(X.row(static_cast<Eigen::Index>(i)).transpose(), h);
            });
            e = inpca(ps, *k);
            run.extra["stress"] = inpca_stress(e, bhattacharyya_matrix(ps));
        }
        std::string header = "index,mu,sigma,t,seq_id";
        for (int j = 0; j < e.coords.cols(); ++j) header += ",c" + std::to_string(j + 1);
        std::vector<std::vector<double>> rows;
        for (std::size_t i = 0; i < set.size(); ++i) {
            const auto& rec = set.records[i];
            std::vector<double> r{static_cast<double>(i), rec.mu, rec.sigma, static_cast<double>(rec.t),
                                  static_cast<double>(rec.seq_id)};
            for (int j = 0; j < e.coords.cols(); ++j) r.push_back(e.coords(static_cast<Eigen::Index>(i), j));
            rows.push_back(std::move(r));
        }
        write_csv(*out, header, rows);
        run.outputs = {*out};
        run.manifest = manifest_for(*out);
        run.extra["axis_weights"] = std::vector<double>(e.axis_weights.data(), e.axis_weights.data() + e.axis_weights.size());
    };
}

void add_probe(CLI::App& app, Registry& reg) {
    auto* probe = app.add_subcommand("probe", "Linear field probes");
    probe->require_subcommand(1);

    {
        auto* sub = probe->add_subcommand("train", "Train one probe per class value");
        auto acts = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto variant = std::make_shared<std::string>("multiclass");
        auto hyper = std::make_shared<TrainHyper>();
        sub->add_option("--acts", *acts)->required();
        sub->add_option("--out", *out)->required();
        sub->add_option("--variant", *variant)->check(CLI::IsMember({"multiclass", "ovr"}));
        sub->add_option("--weight-decay", hyper->weight_decay)->check(CLI::NonNegativeNumber);
        sub->add_option("--split", hyper->split_fraction)->check(CLI::Range(0.0, 1.0));
        sub->add_option("--seed", hyper->seed);
        sub->add_option("--max-iter", hyper->max_iter)->check(CLI::PositiveNumber);
        sub->add_flag("--centered", hyper->centered, "subtract the pooled training mean");
        reg.actions[sub] = [=](Run& run) {
            const ActivationSet set = read_activation_set(*acts);
            auto [field, acc] = *variant == "ovr" ? train_ovr(set, *hyper) : train_multiclass(set, *hyper);
            write_probe(field, *out);
            run.inputs = {*acts};
            run.outputs = {*out};
            run.seed = hyper->seed;
            run.manifest = manifest_for(*out);
            run.extra["test_accuracy"] = acc;
            run.extra["epochs"] = field.train_meta.epochs;
            std::cout << "test_accuracy: " << fmt(acc) << "\n";
        };
    }
    {
        auto* sub = probe->add_subcommand("eval", "Accuracy of a probe on a set");
        auto pf = std::make_shared<std::string>();
        auto acts = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--probe", *pf)->required();
        sub->add_option("--acts", *acts)->required();
        sub->add_option("--out", *out, "JSON result")->required();
        reg.actions[sub] = [=](Run& run) {
            const ProbeField field = read_probe(*pf);
            const double acc = probe_accuracy(field, read_activation_set(*acts));
            detail::write_file(*out, json{{"accuracy", acc}}.dump(2) + "\n");
            run.inputs = {*pf, *acts};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
            std::cout << "accuracy: " << fmt(acc) << "\n";
        };
    }
    {
        auto* sub = probe->add_subcommand("gram", "Cosine Gram matrix of the probe rows");
        auto pf = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto centered = std::make_shared<bool>(false);
        sub->add_option("--probe", *pf)->required();
        sub->add_option("--out", *out)->required();
        sub->add_flag("--centered", *centered, "remove the mean probe before normalizing");
        reg.actions[sub] = [=](Run& run) {
            const ProbeField field = read_probe(*pf);
            write_matrix_csv(*out, probe_gram(field, *centered), field.class_values);
            run.inputs = {*pf};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
        };
    }
    {
        auto* sub = probe->add_subcommand("transfer", "Pair probe evaluated on shifted pairs");
        auto acts = std::make_shared<std::string>();
        auto pair = std::make_shared<std::string>();
        auto shifts = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto hyper = std::make_shared<TrainHyper>();
        sub->add_option("--acts", *acts)->required();
        sub->add_option("--pair", *pair, "mu_a,mu_b")->required();
        sub->add_option("--shifts", *shifts, "comma list")->required();
        sub->add_option("--seed", hyper->seed);
        sub->add_option("--out", *out)->required();
        reg.actions[sub] = [=](Run& run) {
            auto p = parse_doubles(*pair, "--pair");
            if (p.size() != 2) throw std::invalid_argument("--pair expects mu_a,mu_b");
            const ActivationSet set = read_activation_set(*acts);
            auto curve = transfer_curve(set, p[0], p[1], parse_doubles(*shifts, "--shifts"), *hyper);
            std::vector<std::vector<double>> rows;
            for (const auto& c : curve) rows.push_back({c.shift, c.mu_lo, c.mu_hi, c.accuracy});
            write_csv(*out, "shift,mu_lo,mu_hi,accuracy", rows);
            run.inputs = {*acts};
            run.outputs = {*out};
            run.seed = hyper->seed;
            run.manifest = manifest_for(*out);
            run.extra["untrained_accuracy"] = untrained_pair_accuracy(set, p[0], p[1], hyper->seed);
        };
    }
    {
        auto* sub = probe->add_subcommand("interp", "Interpolate between two probe rows");
        auto pf = std::make_shared<std::string>();
        auto a = std::make_shared<double>(0.0);
        auto b = std::make_shared<double>(0.0);
        auto alpha = std::make_shared<double>(0.5);
        auto method = std::make_shared<std::string>("kernel");
        auto target = std::make_shared<double>(std::nan(""));
        auto out = std::make_shared<std::string>();
        sub->add_option("--probe", *pf)->required();
        sub->add_option("--a", *a, "class value of the first endpoint")->required();
        sub->add_option("--b", *b, "class value of the second endpoint")->required();
        sub->add_option("--alpha", *alpha, "linear and kernel weight --a by alpha; slerp by 1 - alpha")->check(CLI::Range(0.0, 1.0));
        sub->add_option("--method", *method)->check(CLI::IsMember({"linear", "slerp", "kernel"}));
        sub->add_option("--target", *target, "class value to compare against (cosine)");
        sub->add_option("--out", *out, "vector CSV")->required();
        reg.actions[sub] = [=](Run& run) {
            const ProbeField field = read_probe(*pf);
            const Mat U = field.unit_rows();
            const Vec wa = U.row(field.index_of(*a)).transpose(), wb = U.row(field.index_of(*b)).transpose();
            Vec w;
            if (*method == "linear") w = interp_linear(wa, wb, *alpha);
            else if (*method == "slerp") w = interp_slerp(wa, wb, *alpha);
            else w = interp_kernel(field, *a, *b, *alpha);
            write_vector_csv(*out, w);
            run.inputs = {*pf};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
            if (!std::isnan(*target)) {
                const Vec wt = U.row(field.index_of(*target)).transpose();
                const double c = w.dot(wt) / w.norm();
                run.extra["cosine_to_target"] = c;
                std::cout << "cosine_to_target: " << fmt(c) << "\n";
            }
        };
    }
}

void add_geom(CLI::App& app, Registry& reg) {
    auto* geom = app.add_subcommand("geom", "Field geometry: spectrum, embedding, curves");
    geom->require_subcommand(1);
    {
        auto* sub = geom->add_subcommand("eig", "Eigen-spectrum of the probe Gram");
        auto pf = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto threshold = std::make_shared<double>(0.95);
        sub->add_option("--probe", *pf)->required();
        sub->add_option("--threshold", *threshold)->check(CLI::Range(0.0, 1.0));
        sub->add_option("--out", *out, "spectrum CSV")->required();
        reg.actions[sub] = [=](Run& run) {
            const ProbeField field = read_probe(*pf);
            const FieldGeometry g = field_eig(probe_gram(field), field.class_values);
            std::vector<std::vector<double>> rows;
            for (Eigen::Index k = 0; k < g.lambda.size(); ++k)
                rows.push_back({static_cast<double>(k + 1), g.lambda[k], cumvar(g.lambda, static_cast<int>(k + 1))});
            write_csv(*out, "k,lambda,cumvar", rows);
            run.inputs = {*pf};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
            run.extra["intrinsic_dim"] = intrinsic_dim(g.lambda, *threshold);
            std::cout << "intrinsic_dim: " << intrinsic_dim(g.lambda, *threshold) << "\n";
        };
    }
    {
        auto* sub = geom->add_subcommand("embed", "Spectral embedding of the class values");
        auto pf = std::make_shared<std::string>();
        auto r = std::make_shared<int>(3);
        auto out = std::make_shared<std::string>();
        sub->add_option("--probe", *pf)->required();
        sub->add_option("--r", *r)->check(CLI::PositiveNumber);
        sub->add_option("--out", *out)->required();
        reg.actions[sub] = [=](Run& run) {
            const ProbeField field = read_probe(*pf);
            const FieldGeometry g = field_eig(probe_gram(field), field.class_values);
            const Mat E = field_embed(g, *r);
            std::string header = "mu";
            for (int j = 0; j < E.cols(); ++j) header += ",e" + std::to_string(j + 1);
            std::vector<std::vector<double>> rows;
            for (Eigen::Index i = 0; i < E.rows(); ++i) {
                std::vector<double> row{g.class_values[i]};
                for (int j = 0; j < E.cols(); ++j) row.push_back(E(i, j));
                rows.push_back(std::move(row));
            }
            write_csv(*out, header, rows);
            run.inputs = {*pf};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
        };
    }
    {
        auto* sub = geom->add_subcommand("spline", "Natural cubic spline through class centroids");
        auto acts = std::make_shared<std::string>();
        auto sigma = std::make_shared<double>(std::nan(""));
        auto at = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--acts", *acts)->required();
        sub->add_option("--sigma", *sigma, "sigma slice (default: first record's)");
        sub->add_option("--at", *at, "comma list of mu values")->required();
        sub->add_option("--out", *out, "one row per --at value")->required();
        reg.actions[sub] = [=](Run& run) {
            const ActivationSet set = read_activation_set(*acts);
            const double sg = std::isnan(*sigma) ? default_sigma(set) : *sigma;
            std::vector<double> mus;
            for (const auto& rec : set.records)
                if (rec.sigma == sg) mus.push_back(rec.mu);
            std::sort(mus.begin(), mus.end());
            mus.erase(std::unique(mus.begin(), mus.end()), mus.end());
            const CurveFit c = fit_curve(Eigen::Map<const Vec>(mus.data(), static_cast<Eigen::Index>(mus.size())),
                                         class_centroids(set, mus, sg));
            std::string header = "mu";
            for (int j = 0; j < c.dims(); ++j) header += ",x" + std::to_string(j);
            std::vector<std::vector<double>> rows;
            for (double m : parse_doubles(*at, "--at")) {
                Vec v = eval_curve(c, m);
                std::vector<double> row{m};
                row.insert(row.end(), v.data(), v.data() + v.size());
                rows.push_back(std::move(row));
            }
            write_csv(*out, header, rows);
            run.inputs = {*acts};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
        };
    }
    {
        auto* sub = geom->add_subcommand("mixture", "Additive (mu, sigma) prediction from two centroid curves");
        auto acts = std::make_shared<std::string>();
        auto base = std::make_shared<std::string>("500:100");
        auto target = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        sub->add_option("--acts", *acts)->required();
        sub->add_option("--base", *base, "mu0:sigma0 where the curves cross");
        sub->add_option("--target", *target, "mu:sigma to predict")->required();
        sub->add_option("--out", *out, "vector CSV")->required();
        reg.actions[sub] = [=](Run& run) {
            const ActivationSet set = read_activation_set(*acts);
            const DistSpec b = parse_dist(*base), t = parse_dist(*target);
            std::vector<double> mus, sgs;
            for (const auto& rec : set.records) {
                if (rec.sigma == b.sigma) mus.push_back(rec.mu);
                if (rec.mu == b.mu) sgs.push_back(rec.sigma);
            }
            for (auto* v : {&mus, &sgs}) {
                std::sort(v->begin(), v->end());
                v->erase(std::unique(v->begin(), v->end()), v->end());
            }
            if (mus.size() < 2 || sgs.size() < 2) throw std::invalid_argument("base point needs a mu and a sigma slice");
            const Mat along_mu = class_centroids(set, mus, b.sigma);
            Mat along_sigma(static_cast<Eigen::Index>(sgs.size()), set.d());
            for (std::size_t j = 0; j < sgs.size(); ++j)
                along_sigma.row(static_cast<Eigen::Index>(j)) = class_centroids(set, {b.mu}, sgs[j]).row(0);
            const CurveFit cm = fit_curve(Eigen::Map<const Vec>(mus.data(), static_cast<Eigen::Index>(mus.size())),
                                          along_mu);
            const CurveFit cs = fit_curve(Eigen::Map<const Vec>(sgs.data(), static_cast<Eigen::Index>(sgs.size())),
                                          along_sigma);
            const Vec c0 = class_centroids(set, {b.mu}, b.sigma).row(0).transpose();
            write_vector_csv(*out, mixture_interp(c0, cm, cs, b.mu, b.sigma, t.mu, t.sigma));
            run.inputs = {*acts};
            run.outputs = {*out};
            run.manifest = manifest_for(*out);
        };
    }
}

void add_steer(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("steer", "Steer the centroid of one class toward another");
    auto mode = std::make_shared<std::string>("linear");
    auto acts = std::make_shared<std::string>();
    auto head = std::make_shared<std::string>();
    auto pf = std::make_shared<std::string>();
    auto from = std::make_shared<double>(300);
    auto to = std::make_shared<double>(500);
    auto steps = std::make_shared<int>(20);
    auto sigma0 = std::make_shared<double>(std::nan(""));
    auto rank = std::make_shared<int>(0);
    auto out = std::make_shared<std::string>();
    sub->add_option("--mode", *mode)->check(CLI::IsMember({"linear", "spline", "probe", "field"}));
    sub->add_option("--acts", *acts)->required();
    sub->add_option("--head", *head)->required();
    sub->add_option("--probe", *pf, "required for probe and field modes");
    sub->add_option("--from", *from);
    sub->add_option("--to", *to);
    sub->add_option("--steps", *steps)->check(CLI::PositiveNumber);
    sub->add_option("--sigma0", *sigma0, "reference std (default: the set's sigma)");
    sub->add_option("--rank", *rank, "field rank (default: 99% spectrum rule)");
    sub->add_option("--out", *out, "SteerReport CSV")->required();
    reg.actions[sub] = [=](Run& run) {
        const ActivationSet set = read_activation_set(*acts);
        const HeadParams h = read_head_params(*head);
        run.inputs = {*acts, *head};
        const double sg = std::isnan(*sigma0) ? default_sigma(set) : *sigma0;
        std::vector<double> mus;
        for (const auto& rec : set.records)
            if (rec.sigma == sg) mus.push_back(rec.mu);
        std::sort(mus.begin(), mus.end());
        mus.erase(std::unique(mus.begin(), mus.end()), mus.end());
        const Mat cent = class_centroids(set, mus, sg);
        auto row_of = [&](double m) {
            auto it = std::find(mus.begin(), mus.end(), m);
            if (it == mus.end()) throw std::invalid_argument("no class at mu " + fmt(m));
            return static_cast<Eigen::Index>(it - mus.begin());
        };
        const Vec x = cent.row(row_of(*from)).transpose();
        SteerReport rep;
        if (*mode == "linear") {
            const Vec s = (cent.row(row_of(*to)) - cent.row(row_of(*from))).transpose();
            rep = sweep_linear(x, s, linspace(0.0, 1.0, *steps + 1), h, sg);
        } else if (*mode == "spline") {
            const CurveFit c = fit_curve(Eigen::Map<const Vec>(mus.data(), static_cast<Eigen::Index>(mus.size())), cent);
            rep = sweep_spline(x, c, *from, linspace(*from, *to, *steps + 1), h, sg);
        } else {
            if (pf->empty()) throw std::invalid_argument("--mode " + *mode + " needs --probe");
            const ProbeField field = read_probe(*pf);
            run.inputs.push_back(*pf);
            if (*mode == "probe") {
                const SteeringVector v = probe_dir(field, *from, *to);
                const double span = (field.W.row(field.index_of(*to)) - field.W.row(field.index_of(*from))).norm();
                rep = sweep_linear(x, v.direction, linspace(0.0, 2.0 * span, *steps + 1), h, sg);
            } else {
                const FieldGeometry g = field_eig(probe_gram(field), field.class_values);
                const int r = *rank > 0 ? *rank : std::min(intrinsic_dim(g.lambda, kFieldRankCumvar), g.positive_modes());
                FieldSteer fsteer(field, g, r);
                const double gain = fsteer.calibrate_gain(cent);
                rep = sweep_field(x, fsteer.increments(*from, *to, *steps, gain), *from, *to, h, sg);
                run.extra["rank"] = r;
                run.extra["gain"] = gain;
            }
        }
        write_steer_csv(rep, *out);
        run.outputs = {*out};
        run.manifest = manifest_for(*out);
    };
}

void add_observer(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("observer", "Normal-inverse-gamma ideal observer on a series");
    auto series = std::make_shared<std::string>();
    auto prior = std::make_shared<std::string>();
    auto stride = std::make_shared<std::int64_t>(1);
    auto ref = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>();
    sub->add_option("--series", *series)->required();
    sub->add_option("--prior", *prior, "mu0,kappa0,alpha0,beta0");
    sub->add_option("--stride", *stride, "report every stride-th t")->check(CLI::PositiveNumber);
    sub->add_option("--ref", *ref, "mu:sigma for kl_to_ref (default: last segment)");
    sub->add_option("--out", *out, "trajectory CSV")->required();
    reg.actions[sub] = [=](Run& run) {
        const SegmentedSeries s = read_series_json(*series);
        ObserverPrior p;
        if (!prior->empty()) {
            auto v = parse_doubles(*prior, "--prior");
            if (v.size() != 4) throw std::invalid_argument("--prior expects mu0,kappa0,alpha0,beta0");
            p = {v[0], v[1], v[2], v[3]};
        }
        const auto n = static_cast<std::int64_t>(s.values.size());
        std::vector<std::int64_t> ts;
        for (std::int64_t t = *stride; t <= n; t += *stride) ts.push_back(t);
        if (ts.empty() || ts.back() != n) ts.push_back(n);
        const DistSpec r = !ref->empty() ? parse_dist(*ref)
                           : !s.segments.empty() ? s.segments.back().dist
                                                 : DistSpec{};
        write_trajectory_csv(observer_trajectory(s.values, p, ts), discretized_normal(r), *out);
        run.inputs = {*series};
        run.outputs = {*out};
        run.manifest = manifest_for(*out);
    };
}

void add_reproduce(CLI::App& app, Registry& reg) {
    auto* sub = app.add_subcommand("reproduce", "Write the CSV/JSON bundle of one experiment");
    auto id = std::make_shared<std::string>();
    auto out = std::make_shared<std::string>("figs");
    auto seed = std::make_shared<std::uint64_t>(0);
    auto synth = std::make_shared<std::string>("default");
    sub->add_option("experiment", *id, "experiment id or unique prefix")->required();
    sub->add_option("--out", *out, "output directory");
    sub->add_option("--seed", *seed);
    sub->add_option("--synth", *synth, "synthetic world config JSON or 'default'");
    reg.actions[sub] = [=](Run& run) {
        const std::string resolved = resolve_experiment(*id);
        const SynthConfig cfg = load_synth(*synth);
        if (*synth != "default") run.inputs.push_back(*synth);
        const fs::path dir = fs::path(*out) / resolved;
        for (const auto& f : reproduce(resolved, dir, *seed, cfg)) run.outputs.push_back(f.string());
        run.seed = *seed;
        run.manifest = dir / "manifest.json";
        run.extra["experiment"] = resolved;
        std::cout << resolved << ": " << run.outputs.size() << " files in " << dir.string() << "\n";
    };
}

int report(const char* kind, const std::string& msg, int code) {
    std::cerr << "beliefmap: " << kind << ": " << msg << "\n";
    return code;
}

}  // namespace

int run(int argc, const char* const* argv) {
    CLI::App app{"Belief-state analysis toolkit", "beliefmap"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Registry reg;
    add_gen(app, reg);
    add_synth(app, reg);
    add_metrics(app, reg);
    add_embed(app, reg);
    add_probe(app, reg);
    add_geom(app, reg);
    add_steer(app, reg);
    add_observer(app, reg);
    add_reproduce(app, reg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        return report("usage", e.what(), 2);
    }

    std::vector<const CLI::App*> chain{&app};
    while (true) {
        auto subs = chain.back()->get_subcommands();
        if (subs.empty()) break;
        chain.push_back(subs.front());
    }
    auto it = reg.actions.find(chain.back());
    if (it == reg.actions.end()) return report("usage", "incomplete command", 2);

    try {
        Run r;
        it->second(r);
        write_manifest(r, chain);
    } catch (const FormatError& e) {
        return report("format error", e.what(), 3);
    } catch (const IoError& e) {
        return report("io error", e.what(), 3);
    } catch (const fs::filesystem_error& e) {
        return report("io error", e.what(), 3);
    } catch (const NumericalError& e) {
        return report("numerical error", e.what(), 4);
    } catch (const std::invalid_argument& e) {
        return report("invalid argument", e.what(), 2);
    } catch (const std::out_of_range& e) {
        return report("invalid argument", e.what(), 2);
    } catch (const std::exception& e) {
        return report("error", e.what(), 1);
    }
    return 0;
}

int run(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"beliefmap"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace bm::cli
