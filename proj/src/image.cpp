#include "cspat/image.hpp"

#include <cmath>
#include <string>

#include "cspat/errors.hpp"

namespace cspat {

void check_image_shape(const Image& f, const char* where) {
    if (f.grid.nx < 1 || f.grid.ny < 1)
        throw ShapeError(std::string(where) + ": empty grid");
    if (f.values.size() != size_t(f.grid.size()))
        throw ShapeError(std::string(where) + ": image has " + std::to_string(f.values.size()) +
                         " values for a " + std::to_string(f.grid.nx) + "x" +
                         std::to_string(f.grid.ny) + " grid");
}

void check_sensor_shape(const SensorData& d, const char* where) {
    if (d.sensors.count() < 1 || d.time.samples < 2)
        throw ShapeError(std::string(where) + ": empty sensor data");
    if (d.values.size() != size_t(d.sensors.count()) * d.time.samples)
        throw ShapeError(std::string(where) + ": trace buffer size mismatch");
}

void check_cs_shape(const CSData& g, const char* where) {
    if (g.rows < 1 || g.time.samples < 2)
        throw ShapeError(std::string(where) + ": empty measurement data");
    if (g.values.size() != size_t(g.rows) * g.time.samples)
        throw ShapeError(std::string(where) + ": measurement buffer size mismatch");
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

}  // namespace cspat
