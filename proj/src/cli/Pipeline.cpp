#include "deepesn/cli/Pipeline.hpp"

#include "deepesn/Analysis.hpp"
#include "deepesn/Errors.hpp"
#include "deepesn/Init.hpp"
#include "deepesn/Random.hpp"
#include "deepesn/Readout.hpp"
#include "Tagged.hpp"

#include <algorithm>
#include <cmath>

namespace deepesn::cli {

namespace {

struct Features {
    Eigen::MatrixXd train_x, train_y, val_x, val_y, test_x, test_y;
};

Features time_series_features(const DeepReservoir<double>& res, const TaskDataset& d)
{
    const auto traj = run(res, d.inputs, 0);
    const auto& s = d.split;
    const Eigen::Index n = d.length();
    return {traj.states.middleRows(s.washout, s.train_end - s.washout),
            d.targets.middleRows(s.washout, s.train_end - s.washout),
            traj.states.middleRows(s.train_end, s.val_end - s.train_end),
            d.targets.middleRows(s.train_end, s.val_end - s.train_end),
            traj.states.bottomRows(n - s.val_end),
            d.targets.bottomRows(n - s.val_end)};
}

// Each item is run from the zero state; its feature is the final state or
// the mean state after the per-item washout.
Features item_features(const DeepReservoir<double>& res, const TaskDataset& d, const std::string& mode)
{
    const Eigen::Index items = d.n_items();
    const Eigen::Index len = d.item_length;
    Eigen::MatrixXd x(items, res.state_dim());
    Eigen::MatrixXd y(items, d.targets.cols());
    for (Eigen::Index k = 0; k < items; ++k) {
        const auto traj = run(res, d.inputs.middleRows(k * len, len), d.split.washout);
        x.row(k) = mode == "mean" ? traj.post_washout().colwise().mean().eval() : traj.states.row(len - 1).eval();
        y.row(k) = d.targets.row(k * len);
    }
    const auto& s = d.split;
    return {x.topRows(s.train_end),
            y.topRows(s.train_end),
            x.middleRows(s.train_end, s.val_end - s.train_end),
            y.middleRows(s.train_end, s.val_end - s.train_end),
            x.bottomRows(items - s.val_end),
            y.bottomRows(items - s.val_end)};
}

double mse(const Readout<double>& r, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y)
{
    if (x.rows() == 0) return std::numeric_limits<double>::quiet_NaN();
    return evaluate(predict(r, x), y, Metric::MSE);
}

} // namespace

nlohmann::json json_number(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return v;
}

TaskDataset make_dataset(const TaskConfig& t, Eigen::Index total_units, std::uint64_t seed)
{
    if (t.name == "mackey_glass") return gen_mackey_glass(t.length ? t.length : 5000, t.tau, t.delta, seed, t.split);
    if (t.name == "mso") return gen_mso(t.length ? t.length : 700, t.n_components, seed, t.split);
    if (t.name == "memory_capacity") {
        const int k = t.max_delay ? t.max_delay : static_cast<int>(2 * total_units);
        return gen_memory_capacity(t.length ? t.length : 5000, k, seed, t.split);
    }
    if (t.name == "frequency_classification")
        return gen_frequency_classification(t.length_per_item, t.n_items, t.n_classes, seed, t.noise, t.split);
    throw ConfigError("unknown task '" + t.name + "'");
}

namespace {

SeedResult fit_and_score(const ExperimentConfig& cfg, std::uint64_t seed, const InitConfig& rc,
                         DeepReservoir<double> res, const Features& f)
{
    if (f.val_x.rows() == 0) throw ConfigError("validation split is empty; lambda selection needs it");
    if (f.test_x.rows() == 0) throw ConfigError("test split is empty");

    const RegressionProblem<double> problem{f.train_x, f.train_y};
    const RidgeSolver<double> solver(problem, cfg.readout.intercept);
    std::optional<Readout<double>> best;
    double best_val = std::numeric_limits<double>::infinity();
    for (double lambda : cfg.readout.lambdas) {
        Readout<double> r = solver.solve(lambda);
        const double v = mse(r, f.val_x, f.val_y);
        if (!std::isfinite(v)) throw NumericalError("non-finite validation error at lambda " + format_float(lambda));
        if (v < best_val) {
            best_val = v;
            best = std::move(r);
        }
    }

    SeedResult out;
    out.seed = seed;
    out.task = cfg.task.name;
    out.n_layers = rc.n_layers;
    out.units = rc.units_per_layer;
    out.lambda = best->regularization;
    out.train_mse = mse(*best, f.train_x, f.train_y);
    out.val_mse = best_val;
    const Eigen::MatrixXd test_pred = predict(*best, f.test_x);
    out.test_mse = evaluate(test_pred, f.test_y, Metric::MSE);
    out.test_nrmse = evaluate(test_pred, f.test_y, Metric::NRMSE);
    if (cfg.task.name == "memory_capacity")
        out.score = score_memory_capacity(test_pred, f.test_y).total_mc;
    else if (cfg.task.item_structured())
        out.score = evaluate(test_pred, f.test_y, Metric::Accuracy);
    else
        out.score = out.test_nrmse;

    out.model.reservoir = std::move(res);
    out.model.readout = std::move(best);
    out.model.provenance = {cfg.hash(), seed, kLibraryVersion, cfg.task.name};
    return out;
}

} // namespace

SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed)
{
    InitConfig rc = cfg.reservoir;
    rc.master_seed = seed;
    const auto total = static_cast<Eigen::Index>(rc.n_layers) * rc.units_per_layer;
    const TaskDataset data = tagged("tasks", [&] { return make_dataset(cfg.task, total, seed); });
    rc.input_dim = data.inputs.cols();
    DeepReservoir<double> res = tagged("init", [&] { return build_reservoir(rc); });
    const Features f = tagged("reservoir", [&] {
        return cfg.task.item_structured() ? item_features(res, data, cfg.task.features)
                                          : time_series_features(res, data);
    });
    return tagged("readout", [&] { return fit_and_score(cfg, seed, rc, std::move(res), f); });
}

Eigen::MatrixXd make_probe(const AnalysisConfig& a, Eigen::Index input_dim, Eigen::Index length)
{
    Eigen::MatrixXd probe = Eigen::MatrixXd::Zero(length, input_dim);
    if (a.probe == "white_noise") {
        Rng rng(a.probe_seed);
        for (Eigen::Index t = 0; t < length; ++t)
            for (Eigen::Index j = 0; j < input_dim; ++j) probe(t, j) = rng.uniform(-1.0, 1.0);
    }
    return probe;
}

namespace {

nlohmann::json analysis_json(const DeepReservoir<double>& res, const AnalysisConfig& a, const Provenance& p)
{
    using nlohmann::json;
    const bool wants_lyapunov = std::count(a.reports.begin(), a.reports.end(), "lyapunov") > 0;
    const Eigen::Index length =
        std::max(a.probe_length, wants_lyapunov ? a.lyapunov_warmup + a.lyapunov_steps : Eigen::Index(0));
    const Eigen::MatrixXd probe = make_probe(a, res.input_dim(), length);
    const auto driven = probe.topRows(a.probe_length);

    json report;
    report["config_hash"] = p.config_hash;
    report["seed"] = p.seed;
    report["library_version"] = p.library_version;
    report["probe"] = {{"kind", a.probe}, {"length", a.probe_length}, {"seed", a.probe_seed}};

    std::optional<StateTrajectory<double>> traj;
    auto trajectory = [&]() -> const StateTrajectory<double>& {
        if (!traj) traj = run(res, driven, a.washout);
        return *traj;
    };

    for (const auto& name : a.reports) {
        if (name == "esp") {
            const auto s1 = GlobalState<double>::zero(res.layout());
            auto s2 = s1;
            for (auto& v : s2.per_layer) v.setConstant(0.5);
            const auto r = esp_convergence_test(res, driven, s1, s2, a.esp_tolerance);
            json curve = json::array();
            for (double d : r.distance_curve) curve.push_back(json_number(d));
            report["esp"] = {{"tolerance", a.esp_tolerance},
                             {"final_distance", json_number(r.final_distance)},
                             {"converged", r.converged},
                             {"distance_curve", curve}};
        } else if (name == "lyapunov") {
            const auto r = lyapunov_exponents(res, probe, a.lyapunov_warmup, a.lyapunov_steps, a.lyapunov_count);
            json ex = json::array();
            for (double e : r.exponents) ex.push_back(json_number(e));
            report["lyapunov"] = {{"mlle", json_number(r.mlle)},
                                  {"steps_used", r.steps_used},
                                  {"warmup", a.lyapunov_warmup},
                                  {"count", r.exponents.size()},
                                  {"floor", kLyapunovFloor},
                                  {"exponents", ex}};
        } else if (name == "spectral") {
            const auto r = spectral_profile(trajectory(), a.window, a.probe);
            json spectra = json::array();
            for (const auto& s : r.per_layer_spectrum)
                spectra.push_back(std::vector<double>(s.data(), s.data() + s.size()));
            report["spectral"] = {{"window", r.window},
                                  {"probe", r.probe_description},
                                  {"per_layer_centroid", r.per_layer_centroid},
                                  {"per_layer_spectrum", spectra}};
        } else if (name == "entropy") {
            const auto r = state_entropy(trajectory());
            json e = json::array();
            for (double v : r.per_layer_entropy) e.push_back(json_number(v));
            report["entropy"] = {{"estimator", "gaussian_approx"}, {"per_layer_entropy", e}};
        } else {
            throw ConfigError("unknown report '" + name + "'");
        }
    }
    return report;
}

} // namespace

nlohmann::json analysis_report(const DeepReservoir<double>& res, const AnalysisConfig& a, const Provenance& p)
{
    return tagged("analysis", [&] { return analysis_json(res, a, p); });
}

} // namespace deepesn::cli
