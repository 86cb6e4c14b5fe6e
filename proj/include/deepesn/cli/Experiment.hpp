#pragma once

#include "deepesn/Init.hpp"
#include "deepesn/Tasks.hpp"
#include "deepesn/cli/ConfigFile.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace deepesn::cli {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct TaskConfig {
    std::string name;
    Eigen::Index length = 0;  // 0: task default
    int tau = 17;
    double delta = 0.1;
    int n_components = 8;
    int max_delay = 0;  // 0: twice the total recurrent units
    Eigen::Index length_per_item = 200;
    Eigen::Index n_items = 200;
    int n_classes = 4;
    double noise = 0.1;
    SplitOverride split;
    std::string features = "final";  // item tasks: "final" or "mean"

    bool item_structured() const { return name == "frequency_classification"; }
};

struct ReadoutConfig {
    std::vector<double> lambdas;
    bool intercept = true;
};

struct AnalysisConfig {
    std::vector<std::string> reports;
    std::string probe = "white_noise";  // or "zero"
    Eigen::Index probe_length = 4096;
    std::uint64_t probe_seed = 0;
    Eigen::Index washout = 100;
    Eigen::Index window = 256;
    Eigen::Index lyapunov_warmup = 500;
    Eigen::Index lyapunov_steps = 2000;
    Eigen::Index lyapunov_count = 0;  // leading exponents to track, 0 = all
    double esp_tolerance = 1e-6;
};

struct CompareConfig {
    std::vector<std::size_t> depths;
    Eigen::Index total_units = 0;
    std::vector<Eigen::Index> units;  // explicit per-depth widths, optional
};

struct DesignConfig {
    std::size_t max_layers = 10;
    double epsilon = 0.05;
    Eigen::Index probe_length = 4096;
    Eigen::Index washout = 100;
};

struct ExperimentConfig {
    InitConfig reservoir;
    TaskConfig task;
    ReadoutConfig readout;
    AnalysisConfig analysis;
    CompareConfig compare;
    DesignConfig design;
    std::string output_dir = "out";
    std::vector<std::uint64_t> seeds{0};

    /// Resolved settings as sorted key=value lines. Seeds and the output
    /// directory are left out: they do not change what a single run computes.
    std::string canonical() const;
    /// FNV-1a 64 of canonical(), as 16 hex digits.
    std::string hash() const;
};

const std::vector<std::string>& known_tasks();
const std::vector<std::string>& known_reports();

/// Fifteen log-spaced values from 1e-12 to 1e2.
std::vector<double> default_lambda_grid();

/// Reads every recognised key, applies defaults and validates. Unknown keys,
/// task names and report names are ConfigErrors naming the offender.
/// `need_task` is false for subcommands that do not generate data.
ExperimentConfig experiment_from(const ConfigFile& file, bool need_task = true);

std::uint64_t fnv1a64(const std::string& text);

} // namespace deepesn::cli
