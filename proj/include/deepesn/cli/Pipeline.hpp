#pragma once

#include "deepesn/Reservoir.hpp"
#include "deepesn/cli/Experiment.hpp"
#include "deepesn/cli/ModelFile.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>

namespace deepesn::cli {

/// One row of metrics.csv. `score` is the task's headline number: test
/// NRMSE for prediction tasks, total memory capacity for memory_capacity
/// and test accuracy for frequency_classification.
struct SeedResult {
    std::uint64_t seed = 0;
    std::string task;
    std::size_t n_layers = 0;
    Eigen::Index units = 0;
    double lambda = 0;
    double train_mse = 0;
    double val_mse = 0;
    double test_mse = 0;
    double test_nrmse = 0;
    double score = 0;
    Model model;
};

/// Generates the configured dataset for `seed`. `total_units` resolves a
/// memory-capacity max_delay of 0.
TaskDataset make_dataset(const TaskConfig& task, Eigen::Index total_units, std::uint64_t seed);

/// Build, drive, select lambda on the validation split (readout trained on
/// the training split only), then evaluate on every split.
SeedResult run_seed(const ExperimentConfig& cfg, std::uint64_t seed);

/// Probe input for the analysis reports.
Eigen::MatrixXd make_probe(const AnalysisConfig& a, Eigen::Index input_dim, Eigen::Index length);

/// Requested reports as one JSON object, with provenance fields.
nlohmann::json analysis_report(const DeepReservoir<double>& res, const AnalysisConfig& a, const Provenance& p);

/// JSON number, or the strings "inf" / "-inf" / "nan".
nlohmann::json json_number(double v);

} // namespace deepesn::cli
