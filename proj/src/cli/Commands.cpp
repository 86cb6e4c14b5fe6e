#include "deepesn/cli/Commands.hpp"

#include "deepesn/Design.hpp"
#include "deepesn/Errors.hpp"
#include "deepesn/cli/ConfigFile.hpp"
#include "deepesn/cli/Experiment.hpp"
#include "deepesn/cli/ModelFile.hpp"
#include "deepesn/cli/Pipeline.hpp"
#include "Tagged.hpp"
#include "WorkerPool.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace deepesn::cli {

namespace fs = std::filesystem;

unsigned worker_count()
{
    if (const char* env = std::getenv("DEEPESN_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

ConfigFile load_config(const CommonOptions& opt)
{
    ConfigFile file = opt.config.empty() ? ConfigFile{} : ConfigFile::load(opt.config);
    for (const auto& s : opt.sets) file.set(s);
    if (opt.seed) file.set("experiment.seeds", parse_value(std::to_string(*opt.seed), "experiment.seeds"));
    if (!opt.out.empty()) file.set("output.dir", Value{{opt.out}, false});
    return file;
}

fs::path prepare_output(const std::string& dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir + "': " + ec.message());
    return fs::path(dir);
}

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

const char* kMetricsHeader = "seed,task,n_layers,units,lambda,train_mse,val_mse,test_mse,test_nrmse,score,config_hash\n";

std::string metrics_row(const SeedResult& r)
{
    std::ostringstream os;
    os << r.seed << ',' << r.task << ',' << r.n_layers << ',' << r.units << ',' << format_float(r.lambda) << ','
       << format_float(r.train_mse) << ',' << format_float(r.val_mse) << ',' << format_float(r.test_mse) << ','
       << format_float(r.test_nrmse) << ',' << format_float(r.score) << ',' << r.model.provenance.config_hash << '\n';
    return os.str();
}

std::string score_name(const std::string& task)
{
    if (task == "memory_capacity") return "memory_capacity";
    if (task == "frequency_classification") return "accuracy";
    return "test_nrmse";
}

// Type-7 (linear interpolation) sample quantile.
double quantile(std::vector<double> v, double q)
{
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

std::string seed_list(const std::vector<std::uint64_t>& seeds)
{
    std::string out;
    for (std::size_t i = 0; i < seeds.size(); ++i) out += (i ? ";" : "") + std::to_string(seeds[i]);
    return out;
}

std::vector<std::string> split_commas(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty()) out.push_back(item);
    return out;
}

} // namespace

int cmd_run(const CommonOptions& opt, std::ostream& log)
{
    const ExperimentConfig cfg = experiment_from(load_config(opt));
    const fs::path dir = prepare_output(cfg.output_dir);
    const std::string hash = cfg.hash();

    std::vector<SeedResult> results(cfg.seeds.size());
    std::vector<std::string> analyses(cfg.seeds.size());
    parallel_for(cfg.seeds.size(), worker_count(), [&](std::size_t i) {
        results[i] = run_seed(cfg, cfg.seeds[i]);
        if (!cfg.analysis.reports.empty())
            analyses[i] = analysis_report(results[i].model.reservoir, cfg.analysis, results[i].model.provenance)
                              .dump(2) + "\n";
    });

    std::vector<std::size_t> order(results.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return results[a].seed < results[b].seed; });

    std::string metrics = kMetricsHeader;
    for (auto i : order) {
        const auto& r = results[i];
        metrics += metrics_row(r);
        const std::string stem = "seed" + std::to_string(r.seed);
        write_model_file(r.model, (dir / ("model_" + stem + ".txt")).string());
        if (!analyses[i].empty()) write_text(dir / ("analysis_" + stem + ".json"), analyses[i]);
        log << "seed " << r.seed << ": " << score_name(r.task) << " " << format_float(r.score) << " (lambda "
            << format_float(r.lambda) << ")\n";
    }
    write_text(dir / "metrics.csv", metrics);
    log << "config " << hash << ": wrote " << results.size() << " model(s) to " << dir.string() << '\n';
    return kExitOk;
}

int cmd_analyze(const CommonOptions& opt, const std::string& model_path, const std::string& reports, std::ostream& log)
{
    ConfigFile file = load_config(opt);
    if (!reports.empty()) {
        Value v;
        v.is_list = true;
        for (const auto& r : split_commas(reports)) v.items.emplace_back(r);
        file.set("analysis.reports", v);
    }
    ExperimentConfig cfg = experiment_from(file, false);
    if (cfg.analysis.reports.empty()) cfg.analysis.reports = known_reports();
    const Model model = tagged("model", [&] { return read_model_file(model_path); });
    const fs::path dir = prepare_output(cfg.output_dir);
    const auto report = analysis_report(model.reservoir, cfg.analysis, model.provenance);
    const fs::path out = dir / ("analysis_" + fs::path(model_path).stem().string() + ".json");
    write_text(out, report.dump(2) + "\n");
    log << "wrote " << out.string() << '\n';
    return kExitOk;
}

int cmd_compare(const CommonOptions& opt, std::ostream& log)
{
    const ExperimentConfig base = experiment_from(load_config(opt));
    const auto& c = base.compare;
    if (c.depths.empty()) throw ConfigError("'compare.depths' must list at least one depth");

    // Resolve and validate every configuration before running any.
    std::vector<ExperimentConfig> grid;
    Eigen::Index budget = 0;
    for (std::size_t k = 0; k < c.depths.size(); ++k) {
        const auto depth = static_cast<Eigen::Index>(c.depths[k]);
        Eigen::Index units = 0;
        if (!c.units.empty()) {
            if (c.units.size() != c.depths.size())
                throw ConfigError("'compare.units' must have one entry per entry of 'compare.depths'");
            units = c.units[k];
        } else {
            if (c.total_units < 1) throw ConfigError("'compare.total_units' or 'compare.units' is required");
            if (c.total_units % depth != 0)
                throw ConfigError("'compare.total_units' " + std::to_string(c.total_units) +
                                  " is not divisible by depth " + std::to_string(depth));
            units = c.total_units / depth;
        }
        if (k == 0) budget = depth * units;
        if (depth * units != budget)
            throw ConfigError("compare grid violates the constant total-units budget: depth " + std::to_string(depth) +
                              " x " + std::to_string(units) + " units != " + std::to_string(budget));
        ExperimentConfig e = base;
        e.reservoir.n_layers = c.depths[k];
        e.reservoir.units_per_layer = units;
        try {
            e.reservoir.validate();
        } catch (const ConfigError& err) {
            throw ConfigError("depth " + std::to_string(depth) + ": reservoir." + err.what());
        }
        grid.push_back(std::move(e));
    }

    const fs::path dir = prepare_output(base.output_dir);
    const std::size_t n_seeds = base.seeds.size();
    std::vector<SeedResult> results(grid.size() * n_seeds);
    parallel_for(results.size(), worker_count(), [&](std::size_t job) {
        results[job] = run_seed(grid[job / n_seeds], base.seeds[job % n_seeds]);
    });

    // Sorted by seed, then configuration.
    std::vector<std::size_t> order(results.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) {
        if (results[a].seed != results[b].seed) return results[a].seed < results[b].seed;
        return a / n_seeds < b / n_seeds;
    });
    std::string metrics = kMetricsHeader;
    for (auto i : order) metrics += metrics_row(results[i]);
    write_text(dir / "metrics.csv", metrics);

    const std::string metric = score_name(base.task.name);
    std::ostringstream table;
    table << "n_layers,units,total_units,metric,n_seeds,median,q1,q3,seeds,config_hash\n";
    for (std::size_t k = 0; k < grid.size(); ++k) {
        std::vector<double> scores;
        for (std::size_t s = 0; s < n_seeds; ++s) scores.push_back(results[k * n_seeds + s].score);
        const auto& r = grid[k].reservoir;
        table << r.n_layers << ',' << r.units_per_layer << ',' << budget << ',' << metric << ',' << n_seeds << ','
              << format_float(quantile(scores, 0.5)) << ',' << format_float(quantile(scores, 0.25)) << ','
              << format_float(quantile(scores, 0.75)) << ',' << seed_list(base.seeds) << ',' << grid[k].hash() << '\n';
        log << "depth " << r.n_layers << " x " << r.units_per_layer << ": median " << metric << ' '
            << format_float(quantile(scores, 0.5)) << '\n';
    }
    write_text(dir / "comparison.csv", table.str());

    std::vector<std::size_t> seed_order(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) seed_order[s] = s;
    std::stable_sort(seed_order.begin(), seed_order.end(),
                     [&](auto a, auto b) { return base.seeds[a] < base.seeds[b]; });
    std::ostringstream pairs;
    pairs << "seed";
    for (const auto& g : grid)
        pairs << ',' << metric << "_L" << g.reservoir.n_layers << "_U" << g.reservoir.units_per_layer;
    pairs << ",config_hash\n";
    for (auto s : seed_order) {
        pairs << base.seeds[s];
        for (std::size_t k = 0; k < grid.size(); ++k) pairs << ',' << format_float(results[k * n_seeds + s].score);
        pairs << ',' << base.hash() << '\n';
    }
    write_text(dir / "pairs.csv", pairs.str());
    return kExitOk;
}

int cmd_design(const CommonOptions& opt, std::optional<double> epsilon, std::optional<std::size_t> max_layers,
               std::ostream& log)
{
    ConfigFile file = load_config(opt);
    if (epsilon) file.set("design.epsilon", parse_value(format_float(*epsilon), "design.epsilon"));
    if (max_layers) file.set("design.max_layers", parse_value(std::to_string(*max_layers), "design.max_layers"));
    const ExperimentConfig cfg = experiment_from(file, false);
    const fs::path dir = prepare_output(cfg.output_dir);

    std::ostringstream trace;
    trace << "seed,depth,top_layer_centroid,selected,config_hash\n";
    for (auto seed : cfg.seeds) {
        InitConfig rc = cfg.reservoir;
        rc.master_seed = seed;
        rc.input_dim = 1;
        const Eigen::MatrixXd probe = make_probe(cfg.analysis, 1, cfg.design.probe_length);
        const DepthSelection sel = tagged("analysis", [&] {
            return select_depth(rc, probe, cfg.design.max_layers, cfg.design.epsilon, cfg.design.washout,
                                cfg.analysis.window);
        });
        for (std::size_t d = 0; d < sel.centroid_trace.size(); ++d)
            trace << seed << ',' << d + 1 << ',' << format_float(sel.centroid_trace[d]) << ','
                  << (d + 1 == sel.depth ? 1 : 0) << ',' << cfg.hash() << '\n';
        log << "seed " << seed << ": selected depth " << sel.depth << '\n';
    }
    write_text(dir / "design_trace.csv", trace.str());
    return kExitOk;
}

int cmd_gen(const CommonOptions& opt, std::ostream& log)
{
    const ExperimentConfig cfg = experiment_from(load_config(opt));
    const fs::path dir = prepare_output(cfg.output_dir);
    const auto total = static_cast<Eigen::Index>(cfg.reservoir.n_layers) * cfg.reservoir.units_per_layer;
    for (auto seed : cfg.seeds) {
        const TaskDataset d = tagged("tasks", [&] { return make_dataset(cfg.task, total, seed); });
        const std::string stem = "dataset_" + d.task_name + "_seed" + std::to_string(seed);
        std::ostringstream csv;
        write_dataset_csv(d, csv);
        write_text(dir / (stem + ".csv"), csv.str());
        nlohmann::json meta;
        meta["config_hash"] = cfg.hash();
        meta["seed"] = seed;
        meta["task"] = d.task_name;
        meta["generator_params"] = d.generator_params;
        meta["item_length"] = d.item_length;
        meta["labels"] = d.labels;
        write_text(dir / (stem + ".json"), meta.dump(2) + "\n");
        log << "wrote " << (dir / (stem + ".csv")).string() << '\n';
    }
    return kExitOk;
}

int cli_main(int argc, const char* const* argv, std::ostream& log, std::ostream& err)
{
    CLI::App app{"Deep echo state network experiments"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string model_path;
    std::string reports;
    std::optional<double> epsilon;
    std::optional<std::size_t> max_layers;
    std::uint64_t seed = 0;

    auto common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config, "Config file");
        sub->add_option("--seed", seed, "Single master seed, replaces experiment.seeds");
        sub->add_option("--out", opt.out, "Output directory, replaces output.dir");
        sub->add_option("--set", opt.sets, "Override, key=value (repeatable)")->take_all()->allow_extra_args(false);
    };
    auto* run = app.add_subcommand("run", "Train and evaluate over the configured seeds");
    auto* analyze = app.add_subcommand("analyze", "Dynamical reports for a saved model");
    auto* compare = app.add_subcommand("compare", "Matched-budget depth comparison");
    auto* design = app.add_subcommand("design", "Frequency-driven depth selection");
    auto* gen = app.add_subcommand("gen", "Export the configured dataset as CSV");
    for (auto* s : {run, analyze, compare, design, gen}) common(s);
    analyze->add_option("--model", model_path, "Model file")->required();
    analyze->add_option("--reports", reports, "Comma-separated: esp,lyapunov,spectral,entropy");
    design->add_option("--epsilon", epsilon, "Relative centroid change threshold");
    design->add_option("--max-layers", max_layers, "Largest depth to try");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        log << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "deepesn: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        for (auto* s : {run, analyze, compare, design, gen})
            if (s->parsed() && s->count("--seed")) opt.seed = seed;
        if (run->parsed()) return cmd_run(opt, log);
        if (analyze->parsed()) return cmd_analyze(opt, model_path, reports, log);
        if (compare->parsed()) return cmd_compare(opt, log);
        if (design->parsed()) return cmd_design(opt, epsilon, max_layers, log);
        return cmd_gen(opt, log);
    } catch (const NumericalError& e) {
        err << "deepesn: numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const Error& e) {
        err << "deepesn: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "deepesn: " << e.what() << '\n';
        return kExitFailure;
    }
}

} // namespace deepesn::cli
