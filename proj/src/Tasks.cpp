#include "deepesn/Tasks.hpp"

#include "deepesn/Errors.hpp"
#include "deepesn/Random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace deepesn {

namespace {

std::string to_text(double v)
{
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

DataSplit resolve_split(const SplitOverride& o, DataSplit defaults)
{
    return {o.washout.value_or(defaults.washout), o.train_end.value_or(defaults.train_end),
            o.val_end.value_or(defaults.val_end)};
}

void record_split(TaskDataset& d)
{
    d.generator_params["split.washout"] = std::to_string(d.split.washout);
    d.generator_params["split.train_end"] = std::to_string(d.split.train_end);
    d.generator_params["split.val_end"] = std::to_string(d.split.val_end);
}

} // namespace

void TaskDataset::validate() const
{
    if (inputs.rows() != targets.rows()) throw ConfigError(task_name + ": inputs and targets are not aligned");
    if (inputs.rows() == 0) throw ConfigError(task_name + ": empty dataset");
    const Eigen::Index units = item_length > 0 ? n_items() : length();
    if (item_length > 0) {
        if (length() % item_length != 0) throw ConfigError(task_name + ": length is not a multiple of item_length");
        if (static_cast<Eigen::Index>(labels.size()) != n_items())
            throw ConfigError(task_name + ": one label per item required");
        if (split.washout < 0 || split.washout >= item_length)
            throw ConfigError(task_name + ": item washout must be below item_length");
        if (!(0 < split.train_end && split.train_end <= split.val_end && split.val_end < units))
            throw ConfigError(task_name + ": item split must satisfy 0 < train_end <= val_end < n_items");
        return;
    }
    if (!(0 <= split.washout && split.washout < split.train_end && split.train_end <= split.val_end &&
          split.val_end < units))
        throw ConfigError(task_name + ": split must satisfy 0 <= washout < train_end <= val_end < length (washout " +
                          std::to_string(split.washout) + ", train_end " + std::to_string(split.train_end) +
                          ", val_end " + std::to_string(split.val_end) + ", length " + std::to_string(units) + ")");
}

TaskDataset gen_mackey_glass(Eigen::Index length, int tau, double delta, std::uint64_t seed, const SplitOverride& so)
{
    if (tau < 1) throw ConfigError("mackey_glass: tau must be positive");
    if (!(delta > 0.0)) throw ConfigError("mackey_glass: delta must be positive");
    const DataSplit split = resolve_split(so, {100, length * 6 / 10, length * 8 / 10});
    if (length <= tau + split.washout) throw ConfigError("mackey_glass: length must exceed tau + washout");

    const auto history = static_cast<Eigen::Index>(std::lround(tau / delta));
    Rng rng(seed);
    // Ring buffer over the last history + 1 integration points.
    std::vector<double> ring(static_cast<std::size_t>(history + 1));
    for (auto& v : ring) v = rng.uniform(0.2, 1.4);
    Eigen::Index head = history;  // index of x(now)

    const Eigen::Index emitted_needed = kMackeyGlassTransient + length + 1;
    Eigen::VectorXd series(length + 1);
    Eigen::Index emitted = 0;
    for (Eigen::Index n = 0; emitted < emitted_needed; ++n) {
        const double x = ring[static_cast<std::size_t>(head)];
        const Eigen::Index lag_idx = (head + 1) % (history + 1);  // oldest entry, x(now - history)
        const double lagged = ring[static_cast<std::size_t>(lag_idx)];
        const double dx = kMackeyGlassBeta * lagged / (1.0 + std::pow(lagged, kMackeyGlassExponent)) -
                          kMackeyGlassGamma * x;
        const double next = x + delta * dx;
        head = lag_idx;
        ring[static_cast<std::size_t>(head)] = next;
        if ((n + 1) % kMackeyGlassSubsample == 0) {
            if (emitted >= kMackeyGlassTransient) series(emitted - kMackeyGlassTransient) = next;
            ++emitted;
        }
    }
    if (!series.allFinite()) throw NumericalError("mackey_glass: integration diverged");

    TaskDataset d;
    d.task_name = "mackey_glass";
    d.inputs = series.head(length);
    d.targets = series.tail(length);
    d.split = split;
    d.generator_params = {{"length", std::to_string(length)}, {"tau", std::to_string(tau)},
                          {"delta", to_text(delta)},          {"seed", std::to_string(seed)}};
    record_split(d);
    d.validate();
    return d;
}

TaskDataset gen_mso(Eigen::Index length, int n_components, std::uint64_t seed, const SplitOverride& so)
{
    if (n_components < 1 || n_components > static_cast<int>(kMsoFrequencies.size()))
        throw ConfigError("mso: n_components must lie in 1..8, got " + std::to_string(n_components));
    if (length < 2) throw ConfigError("mso: length must be at least 2");
    const DataSplit split = resolve_split(so, {100, 300, 400});

    Eigen::VectorXd series = Eigen::VectorXd::Zero(length + 1);
    for (Eigen::Index t = 0; t <= length; ++t)
        for (int k = 0; k < n_components; ++k)
            series(t) += std::sin(kMsoFrequencies[static_cast<std::size_t>(k)] * static_cast<double>(t));

    TaskDataset d;
    d.task_name = "mso";
    d.inputs = series.head(length);
    d.targets = series.tail(length);
    d.split = split;
    d.generator_params = {{"length", std::to_string(length)},
                          {"n_components", std::to_string(n_components)},
                          {"seed", std::to_string(seed)}};
    record_split(d);
    d.validate();
    return d;
}

TaskDataset gen_memory_capacity(Eigen::Index length, int max_delay, std::uint64_t seed, const SplitOverride& so)
{
    if (max_delay < 1) throw ConfigError("memory_capacity: max_delay must be positive");
    const Eigen::Index k = max_delay;
    const DataSplit split =
        resolve_split(so, {std::max<Eigen::Index>(100, k), length * 6 / 10, length * 8 / 10});
    if (length <= k + split.washout) throw ConfigError("memory_capacity: length must exceed max_delay + washout");

    Rng rng(seed);
    Eigen::VectorXd stream(length + k);
    for (Eigen::Index i = 0; i < stream.size(); ++i) stream(i) = rng.uniform(-0.8, 0.8);

    TaskDataset d;
    d.task_name = "memory_capacity";
    d.inputs = stream.tail(length);
    d.targets.resize(length, k);
    for (Eigen::Index t = 0; t < length; ++t)
        for (Eigen::Index j = 1; j <= k; ++j) d.targets(t, j - 1) = stream(t + k - j);
    d.split = split;
    d.generator_params = {{"length", std::to_string(length)},
                          {"max_delay", std::to_string(max_delay)},
                          {"seed", std::to_string(seed)}};
    record_split(d);
    d.validate();
    return d;
}

double class_frequency(int c, int n_classes)
{
    if (n_classes < 1 || n_classes > static_cast<int>(kClassFrequencies.size()) || c < 0 || c >= n_classes)
        throw ConfigError("class index out of range");
    const int last = static_cast<int>(kClassFrequencies.size()) - 1;
    const int idx = n_classes == 1 ? 0 : static_cast<int>(std::lround(double(c) * last / (n_classes - 1)));
    return kClassFrequencies[static_cast<std::size_t>(idx)];
}

TaskDataset gen_frequency_classification(Eigen::Index length_per_item, Eigen::Index n_items, int n_classes,
                                         std::uint64_t seed, double noise_amplitude, const SplitOverride& so)
{
    if (length_per_item < 2) throw ConfigError("frequency_classification: length_per_item must be at least 2");
    if (n_items < 3) throw ConfigError("frequency_classification: need at least 3 items");
    if (n_classes < 2 || n_classes > static_cast<int>(kClassFrequencies.size()))
        throw ConfigError("frequency_classification: n_classes must lie in 2..8");
    if (!(noise_amplitude >= 0.0)) throw ConfigError("frequency_classification: noise amplitude must be >= 0");
    const DataSplit split = resolve_split(
        so, {0, std::max<Eigen::Index>(1, n_items * 6 / 10), std::max<Eigen::Index>(1, n_items * 8 / 10)});

    Rng rng(seed);
    TaskDataset d;
    d.task_name = "frequency_classification";
    d.item_length = length_per_item;
    d.inputs.resize(length_per_item * n_items, 1);
    d.targets = Eigen::MatrixXd::Zero(length_per_item * n_items, n_classes);
    for (Eigen::Index item = 0; item < n_items; ++item) {
        const int label = static_cast<int>(rng.below(static_cast<std::uint64_t>(n_classes)));
        const double freq = class_frequency(label, n_classes);
        const double phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
        d.labels.push_back(label);
        for (Eigen::Index s = 0; s < length_per_item; ++s) {
            const Eigen::Index t = item * length_per_item + s;
            double v = std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(s) + phase);
            if (noise_amplitude > 0.0) v += rng.uniform(-noise_amplitude, noise_amplitude);
            d.inputs(t, 0) = v;
            d.targets(t, label) = 1.0;
        }
    }
    d.split = split;
    d.generator_params = {{"length_per_item", std::to_string(length_per_item)},
                          {"n_items", std::to_string(n_items)},
                          {"n_classes", std::to_string(n_classes)},
                          {"noise", to_text(noise_amplitude)},
                          {"seed", std::to_string(seed)}};
    record_split(d);
    d.validate();
    return d;
}

MemoryCapacityReport score_memory_capacity(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw StructuralError("memory capacity: prediction and target shapes differ");
    if (pred.rows() < 2) throw DataError("memory capacity: need at least two steps");
    MemoryCapacityReport report;
    for (Eigen::Index k = 0; k < pred.cols(); ++k) {
        const Eigen::ArrayXd y = pred.col(k).array() - pred.col(k).mean();
        const Eigen::ArrayXd u = target.col(k).array() - target.col(k).mean();
        const double syy = y.square().sum();
        const double suu = u.square().sum();
        const bool flat = pred.col(k).maxCoeff() == pred.col(k).minCoeff() ||
                          target.col(k).maxCoeff() == target.col(k).minCoeff();
        double r2 = 0.0;
        if (!flat && syy > 0.0 && suu > 0.0) {
            const double syu = (y * u).sum();
            r2 = std::clamp(syu * syu / (syy * suu), 0.0, 1.0);
        }
        report.per_delay_r2.push_back(r2);
    }
    for (double r : report.per_delay_r2) report.total_mc += r;
    return report;
}

std::string format_float(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.16e", v);
    return buf;
}

void write_dataset_csv(const TaskDataset& data, std::ostream& out)
{
    out << 't';
    for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) out << ",u_" << j;
    for (Eigen::Index j = 0; j < data.targets.cols(); ++j) out << ",y_" << j;
    out << '\n';
    for (Eigen::Index t = 0; t < data.length(); ++t) {
        out << t;
        for (Eigen::Index j = 0; j < data.inputs.cols(); ++j) out << ',' << format_float(data.inputs(t, j));
        for (Eigen::Index j = 0; j < data.targets.cols(); ++j) out << ',' << format_float(data.targets(t, j));
        out << '\n';
    }
}

} // namespace deepesn
