#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspat/geometry.hpp"
#include "cspat/measure.hpp"
#include "cspat/net.hpp"
#include "cspat/solver.hpp"
#include "cspat/wave.hpp"

namespace cspat {

struct SensorConfig {
    int count = 60;
    double radius = 48.0;
    double angle_start_deg = 0.0;
    double angle_end_deg = 360.0;
};

struct TimeConfig {
    int samples = 193;
    double t_final = 96.0;
};

struct GeometryConfig {
    int nx = 64, ny = 64;
    double x0 = -31.5, y0 = -31.5;
    double dx = 1.0, dy = 1.0;
    SensorConfig sensors;
    TimeConfig time;
    double sound_speed = 1.0;
    WaveQuadrature quadrature;
};

struct NoiseConfig {
    double sigma = 0.0;
    uint64_t seed = 1;
};

struct MeasurementConfig {
    std::string kind = "subsampling";
    int rows = 15;
    uint64_t seed = 7;
    int stride = 4;
    double weight = 2.0;
    NoiseConfig noise;
};

struct TwoStageConfig {
    double beta = 5e-3;
    int iters = 150;
    double step = 0.0;  // 0 = automatic
};

struct NetworkConfig {
    NetArch arch;
    // Rates calibrated for the per-pixel mean absolute error at desk scale.
    TrainConfig train{30, 1, 0.9, 0.1, 0.02, 11};
    std::string weights;  // optional pre-trained weights path
    int landweber_steps = 10;
    double landweber_step = 0.0;  // 0 = automatic
    int train_count = 16;         // synthetic training images for bench/train
    uint64_t train_seed = 900;
};

struct EvalConfig {
    std::vector<std::string> phantoms = {"disc", "shepp", "vessel:3"};
    std::string csv = "bench.csv";
    bool deterministic_timing = false;
};

struct ExperimentConfig {
    std::string preset = "paper-desk";
    GeometryConfig geometry;
    MeasurementConfig measurement;
    JointParams joint;
    TwoStageConfig two_stage;
    NetworkConfig network;
    EvalConfig evaluation;

    ImageGrid grid() const;
    SensorArray sensor_array() const;
    TimeAxis time_axis() const;
    WaveOperator wave() const;
    MeasMatrix matrix() const;
};

// Named presets: "paper-desk" (unit-spaced 64^2 pixel-scale setup) and
// "paper-2d" (the published 256^2 microscopy geometry in SI units).
ExperimentConfig preset_config(const std::string& name);

// JSON text -> config. A "preset" key selects the baseline; remaining keys
// override it. Unknown keys and malformed values raise ConfigError carrying
// the dotted field path.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

}  // namespace cspat
