#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace deepesn::cli {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitUsage = 2, kExitNumerical = 3 };

struct CommonOptions {
    std::string config;             // optional path
    std::optional<std::uint64_t> seed;  // replaces experiment.seeds
    std::string out;                // replaces output.dir
    std::vector<std::string> sets;  // key=value overrides, applied in order
};

int cmd_run(const CommonOptions& opt, std::ostream& log);
int cmd_analyze(const CommonOptions& opt, const std::string& model_path, const std::string& reports, std::ostream& log);
int cmd_compare(const CommonOptions& opt, std::ostream& log);
int cmd_design(const CommonOptions& opt, std::optional<double> epsilon, std::optional<std::size_t> max_layers,
               std::ostream& log);
int cmd_gen(const CommonOptions& opt, std::ostream& log);

/// Full command line entry point; diagnostics go to `err`.
int cli_main(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

/// Worker count from DEEPESN_WORKERS, else the hardware concurrency.
unsigned worker_count();

} // namespace deepesn::cli
