#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace deepesn {

/// Split boundaries. For time-series tasks they count time steps: washout
/// is [0, washout), training [washout, train_end), validation
/// [train_end, val_end) and test [val_end, length). For item-structured
/// tasks (`item_length > 0`) train_end and val_end count items and washout
/// counts the leading steps of every item left out of its features.
struct DataSplit {
    Eigen::Index washout = 0;
    Eigen::Index train_end = 0;
    Eigen::Index val_end = 0;
};

struct TaskDataset {
    std::string task_name;
    Eigen::MatrixXd inputs;   // one row per time step
    Eigen::MatrixXd targets;  // one row per time step
    DataSplit split;
    Eigen::Index item_length = 0;
    std::vector<int> labels;  // per item, classification only
    std::map<std::string, std::string> generator_params;

    Eigen::Index length() const { return inputs.rows(); }
    Eigen::Index washout() const { return split.washout; }
    Eigen::Index n_items() const { return item_length > 0 ? inputs.rows() / item_length : 0; }

    /// Checks alignment and split ordering; throws ConfigError.
    void validate() const;
};

/// Optional split override; unset fields take the generator's default.
struct SplitOverride {
    std::optional<Eigen::Index> washout;
    std::optional<Eigen::Index> train_end;
    std::optional<Eigen::Index> val_end;
};

// Mackey-Glass system x' = 0.2 x(t-tau) / (1 + x(t-tau)^10) - 0.1 x(t).
inline constexpr double kMackeyGlassBeta = 0.2;
inline constexpr double kMackeyGlassGamma = 0.1;
inline constexpr double kMackeyGlassExponent = 10.0;
inline constexpr int kMackeyGlassSubsample = 10;
inline constexpr int kMackeyGlassTransient = 1000;

/// Next-step prediction on an Euler-integrated Mackey-Glass series sampled
/// once per unit time. The initial history is uniform on [0.2, 1.4] and
/// the first 1000 emitted samples are dropped.
TaskDataset gen_mackey_glass(Eigen::Index length, int tau = 17, double delta = 0.1, std::uint64_t seed = 0,
                             const SplitOverride& split = {});

inline constexpr std::array<double, 8> kMsoFrequencies{0.2, 0.311, 0.42, 0.51, 0.63, 0.74, 0.85, 0.97};

/// Next-step prediction of u(t) = sum_k sin(phi_k t), t = 0, 1, ...
/// The series is deterministic; the seed is only recorded.
TaskDataset gen_mso(Eigen::Index length, int n_components, std::uint64_t seed = 0, const SplitOverride& split = {});

/// Delayed recall: scalar input uniform on [-0.8, 0.8], target channel k-1
/// holds u(t - k) for k = 1..max_delay. Samples before t = 0 come from the
/// same stream so every target is defined.
TaskDataset gen_memory_capacity(Eigen::Index length, int max_delay, std::uint64_t seed = 0,
                                const SplitOverride& split = {});

/// Class frequencies in cycles/step, low to high.
inline constexpr std::array<double, 8> kClassFrequencies{0.01, 0.02, 0.04, 0.06, 0.09, 0.13, 0.18, 0.25};

/// Frequency used for class `c` out of `n_classes`: evenly spread indices
/// into the class-frequency table.
double class_frequency(int c, int n_classes);

/// Sequence classification: each item is a sinusoid at its class frequency
/// with random phase plus uniform noise of the given amplitude. Targets are
/// one-hot rows repeated over the item's steps.
TaskDataset gen_frequency_classification(Eigen::Index length_per_item, Eigen::Index n_items, int n_classes,
                                         std::uint64_t seed = 0, double noise_amplitude = 0.1,
                                         const SplitOverride& split = {});

struct MemoryCapacityReport {
    std::vector<double> per_delay_r2;
    double total_mc = 0;
};

/// Squared Pearson correlation per delay channel, clamped to [0,1]. A
/// channel whose prediction (or target) has zero variance scores 0.
MemoryCapacityReport score_memory_capacity(const Eigen::MatrixXd& pred, const Eigen::MatrixXd& target);

/// Dataset as CSV: header `t,u_0..,y_0..`, one row per step, values in
/// 17-significant-digit scientific notation.
void write_dataset_csv(const TaskDataset& data, std::ostream& out);

/// Formats a double with 17 significant digits in scientific notation.
std::string format_float(double v);

} // namespace deepesn
