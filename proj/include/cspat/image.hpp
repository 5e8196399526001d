#pragma once

#include <vector>

#include "cspat/geometry.hpp"

namespace cspat {

// Discrete source on a pixel grid, row-major (iy*nx + ix).
struct Image {
    ImageGrid grid;
    std::vector<double> values;

    Image() = default;
    explicit Image(const ImageGrid& g) : grid(g), values(size_t(g.size()), 0.0) {}
    Image(const ImageGrid& g, std::vector<double> v) : grid(g), values(std::move(v)) {}

    double& at(int ix, int iy) { return values[size_t(iy) * grid.nx + ix]; }
    double at(int ix, int iy) const { return values[size_t(iy) * grid.nx + ix]; }
};

// Pressure traces, one row of `time.samples` values per sensor.
struct SensorData {
    SensorArray sensors;
    TimeAxis time;
    std::vector<double> values;  // [k*Q + l]

    SensorData() = default;
    SensorData(const SensorArray& s, const TimeAxis& t)
        : sensors(s), time(t), values(size_t(s.count()) * t.samples, 0.0) {}

    double& at(int k, int l) { return values[size_t(k) * time.samples + l]; }
    double at(int k, int l) const { return values[size_t(k) * time.samples + l]; }
};

// Compressed measurements: rows = measurement channels, columns = time samples.
struct CSData {
    int rows = 0;
    TimeAxis time;
    std::vector<double> values;  // [j*Q + l]

    CSData() = default;
    CSData(int m, const TimeAxis& t) : rows(m), time(t), values(size_t(m) * t.samples, 0.0) {}

    double& at(int j, int l) { return values[size_t(j) * time.samples + l]; }
    double at(int j, int l) const { return values[size_t(j) * time.samples + l]; }
};

void check_image_shape(const Image& f, const char* where);
void check_sensor_shape(const SensorData& d, const char* where);
void check_cs_shape(const CSData& g, const char* where);

double dot(const std::vector<double>& a, const std::vector<double>& b);
double norm2(const std::vector<double>& a);

}  // namespace cspat
