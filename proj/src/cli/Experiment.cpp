#include "deepesn/cli/Experiment.hpp"

#include "deepesn/Errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace deepesn::cli {

namespace {

std::string join(const std::vector<double>& v)
{
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + format_float(v[i]);
    return out + "]";
}

template <typename T>
std::string join_int(const std::vector<T>& v)
{
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
    return out + "]";
}

std::string join_str(const std::vector<std::string>& v)
{
    std::string out = "[";
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
    return out + "]";
}

std::string opt(const std::optional<Eigen::Index>& v) { return v ? std::to_string(*v) : "default"; }

Eigen::Index positive(const ConfigFile& f, const std::string& key, std::int64_t fallback)
{
    const auto v = f.get_int(key, fallback);
    if (v < 1) throw ConfigError("'" + key + "' must be positive, got " + std::to_string(v));
    return static_cast<Eigen::Index>(v);
}

std::optional<Eigen::Index> optional_index(const ConfigFile& f, const std::string& key)
{
    if (!f.has(key)) {
        f.get_int(key, 0);  // marks the key as known
        return std::nullopt;
    }
    const auto v = f.get_int(key, 0);
    if (v < 0) throw ConfigError("'" + key + "' must be non-negative");
    return static_cast<Eigen::Index>(v);
}

} // namespace

const std::vector<std::string>& known_tasks()
{
    static const std::vector<std::string> names{"mackey_glass", "mso", "memory_capacity", "frequency_classification"};
    return names;
}

const std::vector<std::string>& known_reports()
{
    static const std::vector<std::string> names{"esp", "lyapunov", "spectral", "entropy"};
    return names;
}

std::vector<double> default_lambda_grid()
{
    std::vector<double> grid;
    for (int k = 0; k < 15; ++k) grid.push_back(std::pow(10.0, -12.0 + k));
    return grid;
}

std::uint64_t fnv1a64(const std::string& text)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string ExperimentConfig::canonical() const
{
    const auto& r = reservoir;
    std::map<std::string, std::string> kv{
        {"reservoir.n_layers", std::to_string(r.n_layers)},
        {"reservoir.units_per_layer", std::to_string(r.units_per_layer)},
        {"reservoir.leak_rates", join(r.leak_rates)},
        {"reservoir.spectral_radius_targets", join(r.spectral_radius_targets)},
        {"reservoir.input_scaling", format_float(r.input_scaling)},
        {"reservoir.inter_layer_scaling", format_float(r.inter_layer_scaling)},
        {"reservoir.use_bias", r.use_bias ? "true" : "false"},
        {"reservoir.bias_scaling", format_float(r.bias_scaling)},
        {"reservoir.recurrent_density", format_float(r.recurrent_density)},
        {"reservoir.activation", to_string(r.activation)},
        {"task.name", task.name},
        {"task.length", std::to_string(task.length)},
        {"task.tau", std::to_string(task.tau)},
        {"task.delta", format_float(task.delta)},
        {"task.n_components", std::to_string(task.n_components)},
        {"task.max_delay", std::to_string(task.max_delay)},
        {"task.length_per_item", std::to_string(task.length_per_item)},
        {"task.n_items", std::to_string(task.n_items)},
        {"task.n_classes", std::to_string(task.n_classes)},
        {"task.noise", format_float(task.noise)},
        {"task.washout", opt(task.split.washout)},
        {"task.train_end", opt(task.split.train_end)},
        {"task.val_end", opt(task.split.val_end)},
        {"task.features", task.features},
        {"readout.lambdas", join(readout.lambdas)},
        {"readout.intercept", readout.intercept ? "true" : "false"},
        {"analysis.reports", join_str(analysis.reports)},
        {"analysis.probe", analysis.probe},
        {"analysis.probe_length", std::to_string(analysis.probe_length)},
        {"analysis.probe_seed", std::to_string(analysis.probe_seed)},
        {"analysis.washout", std::to_string(analysis.washout)},
        {"analysis.window", std::to_string(analysis.window)},
        {"analysis.lyapunov_warmup", std::to_string(analysis.lyapunov_warmup)},
        {"analysis.lyapunov_steps", std::to_string(analysis.lyapunov_steps)},
        {"analysis.lyapunov_count", std::to_string(analysis.lyapunov_count)},
        {"analysis.esp_tolerance", format_float(analysis.esp_tolerance)},
        {"compare.depths", join_int(compare.depths)},
        {"compare.total_units", std::to_string(compare.total_units)},
        {"compare.units", join_int(compare.units)},
        {"design.max_layers", std::to_string(design.max_layers)},
        {"design.epsilon", format_float(design.epsilon)},
        {"design.probe_length", std::to_string(design.probe_length)},
        {"design.washout", std::to_string(design.washout)},
    };
    std::string out;
    for (const auto& [k, v] : kv) out += k + "=" + v + "\n";
    return out;
}

std::string ExperimentConfig::hash() const
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(canonical())));
    return buf;
}

ExperimentConfig experiment_from(const ConfigFile& f, bool need_task)
{
    ExperimentConfig e;

    const auto seeds = f.get_int_list("experiment.seeds", {0});
    if (seeds.empty()) throw ConfigError("'experiment.seeds' must list at least one seed");
    e.seeds.clear();
    for (auto s : seeds) {
        if (s < 0) throw ConfigError("'experiment.seeds' entries must be non-negative");
        e.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    e.output_dir = f.get_string("output.dir", e.output_dir);

    auto& r = e.reservoir;
    r.n_layers = static_cast<std::size_t>(positive(f, "reservoir.n_layers", 1));
    r.units_per_layer = positive(f, "reservoir.units_per_layer", 100);
    r.leak_rates = f.get_double_list("reservoir.leak_rates", {1.0});
    r.spectral_radius_targets = f.get_double_list("reservoir.spectral_radius_targets", {0.9});
    r.input_scaling = f.get_double("reservoir.input_scaling", 1.0);
    r.inter_layer_scaling = f.get_double("reservoir.inter_layer_scaling", 1.0);
    r.use_bias = f.get_bool("reservoir.use_bias", true);
    r.bias_scaling = f.get_double("reservoir.bias_scaling", 0.1);
    r.recurrent_density = f.get_double("reservoir.recurrent_density", 1.0);
    const std::string act = f.get_string("reservoir.activation", "tanh");
    try {
        r.activation = activation_from_string(act);
    } catch (const Error&) {
        throw ConfigError("'reservoir.activation': unknown activation '" + act + "'");
    }

    auto& t = e.task;
    t.name = f.get_string("task.name", "");
    if (need_task && t.name.empty()) throw ConfigError("'task.name' is required");
    if (!t.name.empty() && std::find(known_tasks().begin(), known_tasks().end(), t.name) == known_tasks().end())
        throw ConfigError("unknown task '" + t.name + "'");
    t.length = static_cast<Eigen::Index>(f.get_int("task.length", 0));
    if (t.length < 0) throw ConfigError("'task.length' must be non-negative");
    t.tau = static_cast<int>(positive(f, "task.tau", 17));
    t.delta = f.get_double("task.delta", 0.1);
    t.n_components = static_cast<int>(positive(f, "task.n_components", 8));
    t.max_delay = static_cast<int>(f.get_int("task.max_delay", 0));
    if (t.max_delay < 0) throw ConfigError("'task.max_delay' must be non-negative");
    t.length_per_item = positive(f, "task.length_per_item", 200);
    t.n_items = positive(f, "task.n_items", 200);
    t.n_classes = static_cast<int>(positive(f, "task.n_classes", 4));
    t.noise = f.get_double("task.noise", 0.1);
    t.split.washout = optional_index(f, "task.washout");
    t.split.train_end = optional_index(f, "task.train_end");
    t.split.val_end = optional_index(f, "task.val_end");
    t.features = f.get_string("task.features", "final");
    if (t.features != "final" && t.features != "mean")
        throw ConfigError("'task.features' must be \"final\" or \"mean\", got '" + t.features + "'");

    e.readout.lambdas = f.get_double_list("readout.lambdas", default_lambda_grid());
    if (e.readout.lambdas.empty()) throw ConfigError("'readout.lambdas' must not be empty");
    for (double l : e.readout.lambdas)
        if (!(l >= 0.0) || !std::isfinite(l)) throw ConfigError("'readout.lambdas' entries must be finite and >= 0");
    e.readout.intercept = f.get_bool("readout.intercept", true);

    auto& a = e.analysis;
    a.reports = f.get_string_list("analysis.reports", {});
    for (const auto& name : a.reports)
        if (std::find(known_reports().begin(), known_reports().end(), name) == known_reports().end())
            throw ConfigError("unknown report '" + name + "'");
    a.probe = f.get_string("analysis.probe", a.probe);
    if (a.probe != "white_noise" && a.probe != "zero")
        throw ConfigError("'analysis.probe' must be \"white_noise\" or \"zero\", got '" + a.probe + "'");
    a.probe_length = positive(f, "analysis.probe_length", a.probe_length);
    a.probe_seed = static_cast<std::uint64_t>(f.get_int("analysis.probe_seed", 0));
    a.washout = static_cast<Eigen::Index>(f.get_int("analysis.washout", a.washout));
    if (a.washout < 0) throw ConfigError("'analysis.washout' must be non-negative");
    a.window = positive(f, "analysis.window", a.window);
    a.lyapunov_warmup = static_cast<Eigen::Index>(f.get_int("analysis.lyapunov_warmup", a.lyapunov_warmup));
    a.lyapunov_steps = positive(f, "analysis.lyapunov_steps", a.lyapunov_steps);
    a.lyapunov_count = static_cast<Eigen::Index>(f.get_int("analysis.lyapunov_count", 0));
    if (a.lyapunov_count < 0) throw ConfigError("'analysis.lyapunov_count' must be non-negative");
    a.esp_tolerance = f.get_double("analysis.esp_tolerance", a.esp_tolerance);
    if (!(a.esp_tolerance > 0.0)) throw ConfigError("'analysis.esp_tolerance' must be positive");

    for (auto d : f.get_int_list("compare.depths", {})) {
        if (d < 1) throw ConfigError("'compare.depths' entries must be positive");
        e.compare.depths.push_back(static_cast<std::size_t>(d));
    }
    e.compare.total_units = static_cast<Eigen::Index>(f.get_int("compare.total_units", 0));
    for (auto u : f.get_int_list("compare.units", {})) {
        if (u < 1) throw ConfigError("'compare.units' entries must be positive");
        e.compare.units.push_back(static_cast<Eigen::Index>(u));
    }

    e.design.max_layers = static_cast<std::size_t>(positive(f, "design.max_layers", 10));
    e.design.epsilon = f.get_double("design.epsilon", 0.05);
    if (!(e.design.epsilon > 0.0)) throw ConfigError("'design.epsilon' must be positive");
    e.design.probe_length = positive(f, "design.probe_length", 4096);
    e.design.washout = static_cast<Eigen::Index>(f.get_int("design.washout", 100));

    f.reject_unused();
    // Layer-count dependent checks (list lengths, target vs leak).
    try {
        r.validate();
    } catch (const ConfigError& err) {
        throw ConfigError(std::string("reservoir.") + err.what());
    }
    return e;
}

} // namespace deepesn::cli
