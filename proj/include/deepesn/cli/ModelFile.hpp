#pragma once

#include "deepesn/Readout.hpp"
#include "deepesn/Reservoir.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace deepesn::cli {

inline constexpr int kModelFormatVersion = 1;

struct Provenance {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string library_version;
    std::string task;
};

struct Model {
    DeepReservoir<double> reservoir;
    std::optional<Readout<double>> readout;
    Provenance provenance;
};

/// Line-oriented text. Every number is written with 17 significant digits,
/// so load(save(m)) reproduces m exactly and save(load(text)) == text.
/// Dense matrices are row-major; sparse ones list (row, col, value)
/// triplets in storage order.
std::string save_model(const Model& m);
Model load_model(const std::string& text);

void write_model_file(const Model& m, const std::string& path);
Model read_model_file(const std::string& path);

} // namespace deepesn::cli
