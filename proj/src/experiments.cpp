#include "beliefmap/experiments.hpp"

#include "beliefmap/embedding.hpp"
#include "beliefmap/seriesgen.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

namespace bm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ProbeField drop_class(const ProbeField& f, Eigen::Index i) {
    ProbeField out = f;
    const auto C = f.classes();
    out.W.resize(C - 1, f.d());
    out.class_values.resize(C - 1);
    for (Eigen::Index r = 0, k = 0; r < C; ++r) {
        if (r == i) continue;
        out.W.row(k) = f.W.row(r);
        out.class_values[k] = f.class_values[r];
        ++k;
    }
    out.bias = Vec::Zero(C - 1);
    return out;
}

double cosine(const Vec& a, const Vec& b) { return a.dot(b) / (a.norm() * b.norm()); }

bool has_class(const ProbeField& f, double mu) {
    return (f.class_values.array() == mu).any();
}

void sweep_stats(const SteerReport& rep, double sigma0, double* max_rel, bool* monotone) {
    *max_rel = 0.0;
    *monotone = true;
    for (std::size_t i = 0; i < rep.size(); ++i) {
        *max_rel = std::max(*max_rel, std::abs(rep[i].std - sigma0) / sigma0);
        if (i > 0 && !(rep[i].mean > rep[i - 1].mean)) *monotone = false;
    }
}

}  // namespace

ProbeField phi_field(const SynthWorld& world, double sigma) {
    const auto& grid = world.config().mu_grid;
    ProbeField f;
    f.class_values = Eigen::Map<const Vec>(grid.data(), static_cast<Eigen::Index>(grid.size()));
    f.W.resize(f.class_values.size(), world.config().d);
    for (Eigen::Index i = 0; i < f.W.rows(); ++i) f.W.row(i) = world.phi(grid[i], sigma).transpose();
    f.bias = Vec::Zero(f.W.rows());
    f.layer = world.config().layer;
    f.train_meta.variant = "oracle";
    return f;
}

LfpStudy run_lfp_study(const SynthConfig& cfg, const TrainHyper& hyper) {
    SynthWorld world(cfg);
    ActivationSet set = sample_set(world, cfg);
    LfpStudy s;
    std::tie(s.field, s.accuracy) = train_multiclass(set, hyper);
    s.ovr_accuracy = train_ovr(set, hyper).second;
    s.gram = probe_gram(s.field);

    const Mat U = s.field.unit_rows();
    for (Eigen::Index i = 1; i + 1 < s.field.classes(); ++i) {
        ProbeField sub = drop_class(s.field, i);
        Vec w = interp_kernel(sub, s.field.class_values[i - 1], s.field.class_values[i + 1], 0.5);
        s.loo_mu.push_back(s.field.class_values[i]);
        s.loo_cos.push_back(cosine(w, U.row(i).transpose()));
    }
    if (has_class(s.field, 300) && has_class(s.field, 350) && has_class(s.field, 400)) {
        ProbeField sub = drop_class(s.field, s.field.index_of(350));
        Vec w = interp_kernel(sub, 300, 400, 0.5);
        s.kernel_350_cos = cosine(w, U.row(s.field.index_of(350)).transpose());
    }

    const double m0 = s.field.class_values[0], m1 = s.field.class_values[1];
    std::vector<double> shifts;
    for (Eigen::Index k = 0; k + 1 < s.field.classes(); ++k) shifts.push_back(static_cast<double>(k) * (m1 - m0));
    s.transfer = transfer_curve(set, m0, m1, shifts, hyper);
    s.untrained_accuracy = untrained_pair_accuracy(set, m0, m1, cfg.seed + 17);

    std::mt19937_64 rng(cfg.seed + 29);
    std::normal_distribution<double> nd(0.0, 1.0);
    Vec a(cfg.d), b(cfg.d);
    for (int j = 0; j < cfg.d; ++j) a[j] = nd(rng);
    for (int j = 0; j < cfg.d; ++j) b[j] = nd(rng);
    s.random_cos = cosine(a, b);
    return s;
}

SteeringStudy run_steering_study(const SynthConfig& cfg, const TrainHyper& hyper) {
    SynthWorld world(cfg);
    ActivationSet set = sample_set(world, cfg);
    const auto& head = world.head();
    SteeringStudy st;
    st.sigma0 = cfg.sigma_grid.front();
    const double from = cfg.mu_grid.front(), to = cfg.mu_grid.back(), mid = 0.5 * (from + to);
    const Mat cent = class_centroids(set, cfg.mu_grid, st.sigma0);
    const Vec x0 = cent.row(0).transpose();

    // Primal schemes.
    const Vec s = diff_means(cent.topRows(1), cent.bottomRows(1)).direction;
    st.linear_alpha = match_linear_alpha(x0, s, mid, head, 0.0, 1.0);
    auto lin = dist_mean_std(readout(apply_linear(x0, s, st.linear_alpha), head));
    st.linear_mean = lin.mean;
    st.linear_std = lin.std;
    st.linear = sweep_linear(x0, s, linspace(0.0, 1.0, 21), head, st.sigma0);

    const Vec knots = Eigen::Map<const Vec>(cfg.mu_grid.data(), static_cast<Eigen::Index>(cfg.mu_grid.size()));
    const CurveFit curve = fit_curve(knots, cent);
    st.spline_mu = match_spline_mu(x0, curve, from, mid, head);
    auto spl = dist_mean_std(readout(spline_steer(x0, curve, from, st.spline_mu), head));
    st.spline_mean = spl.mean;
    st.spline_std = spl.std;
    st.spline = sweep_spline(x0, curve, from, linspace(from, to, 21), head, st.sigma0);

    // Dual schemes.
    auto [field, acc] = train_multiclass(set, hyper);
    (void)acc;
    const SteeringVector pd = probe_dir(field, from, to);
    const double wdist = (field.W.row(field.index_of(to)) - field.W.row(field.index_of(from))).norm();
    st.probe = sweep_linear(x0, pd.direction, linspace(0.0, 2.0 * wdist, 21), head, st.sigma0);
    for (const auto& row : st.probe)
        if (std::abs(row.std - st.sigma0) / st.sigma0 > 0.1) {
            st.probe_violation_alpha = row.alpha_or_mu;
            break;
        }

    auto run_field = [&](const ProbeField& f, SteerReport* rep, double* max_rel, bool* mono, int* rank,
                         double* gain) {
        FieldGeometry geom = field_eig(probe_gram(f), f.class_values);
        const int r = std::min(intrinsic_dim(geom.lambda, kFieldRankCumvar), geom.positive_modes());
        FieldSteer fsteer(f, geom, r);
        const double g = fsteer.calibrate_gain(cent);
        *rep = sweep_field(x0, fsteer.increments(from, mid, 20, g), from, mid, head, st.sigma0);
        sweep_stats(*rep, st.sigma0, max_rel, mono);
        if (rank) *rank = r;
        if (gain) *gain = g;
    };
    run_field(field, &st.field, &st.field_max_rel_dev, &st.field_monotone, &st.field_rank, &st.field_gain);

    if (cfg.noise_std > 0) {
        ProbeField bayes = field;
        bayes.W = cent / (cfg.noise_std * cfg.noise_std);
        bayes.offset.resize(0);
        run_field(bayes, &st.field_bayes, &st.field_bayes_max_rel_dev, &st.field_bayes_monotone, nullptr, nullptr);
    }
    return st;
}

MixtureStudy run_mixture_study(std::uint64_t seed, double cross_term) {
    SynthConfig cfg;
    cfg.mu_grid = {300, 400, 500, 600, 700};
    cfg.sigma_grid = {40, 70, 100, 130, 160};
    cfg.seed = seed;
    const double mu0 = 500, sigma0 = 100;
    MixtureStudy out;
    out.noise_floor = 3.0 * cfg.noise_std * std::sqrt(static_cast<double>(cfg.d) / cfg.n_per_class);

    const Vec mu_knots = Eigen::Map<const Vec>(cfg.mu_grid.data(), 5);
    const Vec sg_knots = Eigen::Map<const Vec>(cfg.sigma_grid.data(), 5);
    std::vector<std::vector<double>> errs(2);
    for (int w = 0; w < 2; ++w) {
        SynthConfig c = cfg;
        c.cross_term = w == 0 ? 0.0 : cross_term;
        SynthWorld world(c);
        ActivationSet set = sample_set(world, c);
        std::vector<Mat> sheet;  // per sigma: mu x d centroids
        for (double sg : c.sigma_grid) sheet.push_back(class_centroids(set, c.mu_grid, sg));
        const Mat along_mu = sheet[2];
        Mat along_sigma(5, c.d);
        for (int j = 0; j < 5; ++j) along_sigma.row(j) = sheet[j].row(2);
        const CurveFit cmu = fit_curve(mu_knots, along_mu);
        const CurveFit csg = fit_curve(sg_knots, along_sigma);
        const Vec c0 = along_mu.row(2).transpose();
        for (int j = 0; j < 5; ++j)
            for (int i = 0; i < 5; ++i) {
                Vec pred = mixture_interp(c0, cmu, csg, mu0, sigma0, c.mu_grid[i], c.sigma_grid[j]);
                errs[w].push_back((pred - world.phi(c.mu_grid[i], c.sigma_grid[j])).norm());
            }
    }
    std::size_t k = 0;
    for (int j = 0; j < 5; ++j)
        for (int i = 0; i < 5; ++i, ++k) {
            out.rows.push_back({cfg.mu_grid[i], cfg.sigma_grid[j], errs[0][k], errs[1][k]});
            out.max_err_additive = std::max(out.max_err_additive, errs[0][k]);
            out.max_err_cross = std::max(out.max_err_cross, errs[1][k]);
        }
    return out;
}

std::vector<ObserverCheck> run_observer_check(const std::vector<std::int64_t>& ts, int seeds, std::uint64_t seed0,
                                              double m1, double m2, double sigma, std::int64_t t_switch) {
    std::vector<ObserverCheck> out(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i)
        out[i] = {ts[i], closed_form_mean(ts[i], m1, m2, t_switch), closed_form_std(ts[i], sigma, m1, m2, t_switch),
                  0.0, 0.0};
    std::vector<BeliefTrajectory> trajs(static_cast<std::size_t>(seeds));
    for (int k = 0; k < seeds; ++k) {
        auto series = gen_series({{{m1, sigma}, t_switch}, {{m2, sigma}, t_switch}}, seed0 + static_cast<std::uint64_t>(k));
        trajs[k] = observer_trajectory(series.values, ObserverPrior{}, ts);
    }
    for (const auto& tr : trajs)
        for (std::size_t i = 0; i < ts.size(); ++i) {
            out[i].sim_mean += tr.means[i] / seeds;
            out[i].sim_std += tr.stds[i] / seeds;
        }
    return out;
}

// ---------------------------------------------------------------- reproduce

const std::vector<std::string>& experiment_ids() {
    static const std::vector<std::string> ids = {"fig2_dynamics", "fig3_lfp",        "fig4_geometry",
                                                 "fig5_primal_steer", "fig6_field_steer", "figA_convergence",
                                                 "figB_observer", "figC_meta",       "fig_mixture"};
    return ids;
}

std::string resolve_experiment(const std::string& id) {
    std::vector<std::string> hits;
    for (const auto& e : experiment_ids()) {
        if (e == id) return e;
        if (e.rfind(id, 0) == 0) hits.push_back(e);
    }
    if (hits.size() == 1 && !id.empty()) return hits.front();
    if (hits.empty()) throw std::invalid_argument("unknown experiment id '" + id + "'");
    throw std::invalid_argument("ambiguous experiment id '" + id + "'");
}

namespace {

class Csv {
public:
    Csv(const fs::path& path, const std::string& header) : path_(path), out_(path) {
        if (!out_) throw IoError("cannot write " + path.string());
        out_ << header << '\n';
    }
    template <class... T>
    void row(const T&... cols) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cols), first = false), ...);
        out_ << '\n';
    }
    ~Csv() noexcept(false) {
        out_.flush();
        if (!out_ && std::uncaught_exceptions() == 0) throw IoError("write failed: " + path_.string());
    }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::int64_t v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    fs::path path_;
    std::ofstream out_;
};

void write_json(const fs::path& path, const json& j) { detail::write_file(path, j.dump(2) + "\n"); }

json opt_json(const std::optional<std::int64_t>& v) { return v ? json(*v) : json("never"); }

void write_matrix_csv(const fs::path& path, const Mat& M, const Vec& labels, const std::string& label_name) {
    std::string header = label_name;
    for (Eigen::Index j = 0; j < M.cols(); ++j) header += "," + label_name + "_" + fmt(labels[j]);
    Csv csv(path, header);
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
        std::string line = fmt(labels[i]);
        for (Eigen::Index j = 0; j < M.cols(); ++j) line += "," + fmt(M(i, j));
        csv.row(line);
    }
}

std::vector<std::int64_t> stride_ts(std::int64_t n, std::int64_t stride) {
    std::vector<std::int64_t> ts;
    for (std::int64_t t = stride; t <= n; t += stride) ts.push_back(t);
    return ts;
}

void trajectory_csv(const fs::path& path, const BeliefTrajectory& tr, const ProbVec& ref) {
    write_trajectory_csv(tr, ref, path);
}

std::vector<fs::path> fig2(const fs::path& out, std::uint64_t seed) {
    auto series = gen_series({{{300, 100}, 1000}, {{700, 100}, 1000}}, seed);
    write_series_json(series, out / "series.json");
    auto tr = observer_trajectory(series.values, ObserverPrior{}, stride_ts(2000, 5));
    trajectory_csv(out / "trajectory.csv", tr, discretized_normal({700, 100}));
    {
        Csv csv(out / "closed_form.csv", "t,mean,std");
        for (auto t : tr.t) csv.row(t, closed_form_mean(t, 300, 700, 1000), closed_form_std(t, 100, 300, 700, 1000));
    }
    std::vector<ProbVec> sub;
    std::vector<std::int64_t> sub_t;
    for (std::size_t i = 9; i < tr.size(); i += 10) {
        sub.push_back(tr.probs[i]);
        sub_t.push_back(tr.t[i]);
    }
    auto emb = inpca(sub, 3);
    {
        Csv csv(out / "inpca.csv", "t,c1,c2,c3");
        for (std::size_t i = 0; i < sub.size(); ++i)
            csv.row(sub_t[i], emb.coords(i, 0), emb.coords(i, 1), emb.coords(i, 2));
    }
    json summary = {{"axis_weights", std::vector<double>(emb.axis_weights.data(), emb.axis_weights.data() + 3)},
                    {"inpca_stress_k3", inpca_stress(emb, bhattacharyya_matrix(sub))},
                    {"equilibration_after_switch_tol_mean20_std20",
                     opt_json(equilibration_time(tr, {700, 100}, 20, 20, 1000))}};
    write_json(out / "summary.json", summary);
    return {out / "series.json", out / "trajectory.csv", out / "closed_form.csv", out / "inpca.csv",
            out / "summary.json"};
}

std::vector<fs::path> fig3(const fs::path& out, const SynthConfig& base) {
    auto s = run_lfp_study(base);
    write_matrix_csv(out / "gram.csv", s.gram, s.field.class_values, "mu");
    {
        Csv csv(out / "transfer.csv", "shift,mu_lo,mu_hi,accuracy");
        for (const auto& p : s.transfer) csv.row(p.shift, p.mu_lo, p.mu_hi, p.accuracy);
    }
    {
        Csv csv(out / "interpolation.csv", "mu,loo_kernel_cos");
        for (std::size_t i = 0; i < s.loo_mu.size(); ++i) csv.row(s.loo_mu[i], s.loo_cos[i]);
    }
    write_json(out / "summary.json", {{"multiclass_accuracy", s.accuracy},
                                      {"ovr_accuracy", s.ovr_accuracy},
                                      {"kernel_350_cos", s.kernel_350_cos},
                                      {"untrained_accuracy", s.untrained_accuracy},
                                      {"random_vector_cos", s.random_cos},
                                      {"epochs", s.field.train_meta.epochs}});
    return {out / "gram.csv", out / "transfer.csv", out / "interpolation.csv", out / "summary.json"};
}

std::vector<fs::path> fig4(const fs::path& out, const SynthConfig& base) {
    // Curvature plays the role of depth: deeper "layers" carry more curved fields.
    const std::vector<double> depth = {0.25 * base.curvature, 0.5 * base.curvature, base.curvature,
                                       2.0 * base.curvature};
    std::vector<FieldGeometry> trained(depth.size()), oracle(depth.size());
    for (std::size_t l = 0; l < depth.size(); ++l) {
        SynthConfig cfg = base;
        cfg.curvature = depth[l];
        cfg.layer = static_cast<int>(l);
        SynthWorld world(cfg);
        auto field = train_multiclass(sample_set(world, cfg), TrainHyper{}).first;
        trained[l] = field_eig(probe_gram(field), field.class_values);
        const ProbeField ph = phi_field(world, cfg.sigma_grid.front());
        oracle[l] = field_eig(probe_gram(ph), ph.class_values);
    }
    json summary = json::object();
    summary["curvature"] = depth;
    {
        Csv csv(out / "spectrum.csv", "field,layer,curvature,k,lambda,cumvar");
        for (const auto& [name, geoms] : {std::pair{"oracle", &oracle}, std::pair{"trained", &trained}}) {
            json dims = json::array(), cv1 = json::array();
            for (std::size_t l = 0; l < geoms->size(); ++l) {
                const Vec& lam = (*geoms)[l].lambda;
                for (Eigen::Index k = 0; k < lam.size(); ++k)
                    csv.row(name, static_cast<int>(l), depth[l], static_cast<int>(k + 1), lam[k],
                            cumvar(lam, static_cast<int>(k + 1)));
                dims.push_back(intrinsic_dim(lam));
                cv1.push_back(cumvar(lam, 1));
            }
            summary[name] = {{"intrinsic_dim_95", dims}, {"cumvar_r1", cv1}};
        }
    }
    const auto& g = trained[2];
    Mat E = field_embed(g, std::min(3, g.positive_modes()));
    {
        Csv csv(out / "embedding.csv", "mu,c1,c2,c3");
        for (Eigen::Index i = 0; i < E.rows(); ++i)
            csv.row(g.class_values[i], E(i, 0), E.cols() > 1 ? E(i, 1) : 0.0, E.cols() > 2 ? E(i, 2) : 0.0);
    }
    write_json(out / "summary.json", summary);
    return {out / "spectrum.csv", out / "embedding.csv", out / "summary.json"};
}

std::vector<fs::path> fig5_6(const fs::path& out, const SynthConfig& cfg, bool field) {
    auto st = run_steering_study(cfg);
    if (!field) {
        write_steer_csv(st.linear, out / "linear.csv");
        write_steer_csv(st.spline, out / "spline.csv");
        write_json(out / "matched.json",
                   {{"target_mean", 500},
                    {"linear", {{"alpha", st.linear_alpha}, {"mean", st.linear_mean}, {"std", st.linear_std}}},
                    {"spline", {{"mu_to", st.spline_mu}, {"mean", st.spline_mean}, {"std", st.spline_std}}}});
        return {out / "linear.csv", out / "spline.csv", out / "matched.json"};
    }
    write_steer_csv(st.probe, out / "probe_dir.csv");
    write_steer_csv(st.field, out / "field.csv");
    write_steer_csv(st.field_bayes, out / "field_bayes_probes.csv");
    json pv = st.probe_violation_alpha ? json(*st.probe_violation_alpha) : json(nullptr);
    write_json(out / "summary.json", {{"probe_dir_first_violation_alpha", pv},
                                      {"field_rank", st.field_rank},
                                      {"field_gain", st.field_gain},
                                      {"field_max_rel_std_dev", st.field_max_rel_dev},
                                      {"field_mean_monotone", st.field_monotone},
                                      {"field_bayes_max_rel_std_dev", st.field_bayes_max_rel_dev},
                                      {"field_bayes_mean_monotone", st.field_bayes_monotone}});
    return {out / "probe_dir.csv", out / "field.csv", out / "field_bayes_probes.csv", out / "summary.json"};
}

std::vector<fs::path> figA(const fs::path& out, std::uint64_t seed) {
    auto series = gen_series({{{500, 100}, 1000}}, seed);
    auto tr = observer_trajectory(series.values, ObserverPrior{}, stride_ts(1000, 2));
    const ProbVec ref = discretized_normal({500, 100});
    trajectory_csv(out / "trajectory.csv", tr, ref);
    std::optional<std::int64_t> below;
    for (std::size_t i = tr.size(); i-- > 0;) {
        if (kl(tr.probs[i], ref) >= 0.2) break;
        below = tr.t[i];
    }
    write_json(out / "summary.json", {{"kl_below_0.2_from_t", opt_json(below)},
                                      {"reference_entropy", entropy(ref)},
                                      {"reference_kl_to_uniform", kl(ref, ProbVec{})}});
    return {out / "trajectory.csv", out / "summary.json"};
}

std::vector<fs::path> figB(const fs::path& out, std::uint64_t seed) {
    auto checks = run_observer_check(stride_ts(2000, 20), 10, seed);
    Csv csv(out / "closed_vs_simulated.csv", "t,closed_mean,closed_std,sim_mean,sim_std");
    for (const auto& c : checks) csv.row(c.t, c.closed_mean, c.closed_std, c.sim_mean, c.sim_std);
    return {out / "closed_vs_simulated.csv"};
}

std::vector<fs::path> figC(const fs::path& out, std::uint64_t seed) {
    const DistSpec A{300, 100}, B{700, 100};
    auto series = gen_meta_series(10, 1000, A, B, seed);
    auto tr = observer_trajectory(series.values, ObserverPrior{}, stride_ts(10000, 10));
    trajectory_csv(out / "trajectory.csv", tr, discretized_normal(B));
    Csv csv(out / "switches.csv", "segment,start_t,target_mu,equilibration_dt");
    for (int k = 1; k < 10; ++k) {
        const std::int64_t start = 1000 * k;
        // Only the steps inside this segment count.
        std::vector<std::int64_t> ts;
        std::vector<ProbVec> ps;
        for (std::size_t i = 0; i < tr.size(); ++i)
            if (tr.t[i] >= start && tr.t[i] <= start + 1000) {
                ts.push_back(tr.t[i]);
                ps.push_back(tr.probs[i]);
            }
        auto seg = make_trajectory(ts, ps);
        const DistSpec target = k % 2 == 0 ? A : B;
        auto dt = equilibration_time(seg, target, 20, 20, start);
        csv.row(k, start, target.mu, dt ? std::to_string(*dt) : std::string("never"));
    }
    return {out / "trajectory.csv", out / "switches.csv"};
}

std::vector<fs::path> fig_mixture(const fs::path& out, std::uint64_t seed) {
    auto m = run_mixture_study(seed);
    {
        Csv csv(out / "mixture.csv", "mu,sigma,err_additive,err_cross");
        for (const auto& r : m.rows) csv.row(r.mu, r.sigma, r.err_additive, r.err_cross);
    }
    write_json(out / "summary.json", {{"noise_floor", m.noise_floor},
                                      {"max_err_additive", m.max_err_additive},
                                      {"max_err_cross", m.max_err_cross}});
    return {out / "mixture.csv", out / "summary.json"};
}

}  // namespace

std::vector<fs::path> reproduce(const std::string& id_or_prefix, const fs::path& out_dir, std::uint64_t seed,
                                const SynthConfig& synth) {
    const std::string id = resolve_experiment(id_or_prefix);
    SynthConfig cfg = synth;
    cfg.seed = seed;
    cfg.validate();
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
    if (id == "fig2_dynamics") return fig2(out_dir, seed);
    if (id == "fig3_lfp") return fig3(out_dir, cfg);
    if (id == "fig4_geometry") return fig4(out_dir, cfg);
    if (id == "fig5_primal_steer") return fig5_6(out_dir, cfg, false);
    if (id == "fig6_field_steer") return fig5_6(out_dir, cfg, true);
    if (id == "figA_convergence") return figA(out_dir, seed);
    if (id == "figB_observer") return figB(out_dir, seed);
    if (id == "figC_meta") return figC(out_dir, seed);
    return fig_mixture(out_dir, seed);
}

}  // namespace bm
