#include "cspat/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace cspat {

double ImageGrid::max_radius() const {
    double r2 = 0.0;
    for (int iy : {0, ny - 1}) {
        for (int ix : {0, nx - 1}) {
            double px = x(ix), py = y(iy);
            r2 = std::max(r2, px * px + py * py);
        }
    }
    return std::sqrt(r2);
}

bool ImageGrid::square_pixels(double rel_tol) const {
    return std::abs(dx - dy) <= rel_tol * std::max(std::abs(dx), std::abs(dy));
}

SensorArray make_sensors(int count, double radius, double angle_start, double angle_end) {
    if (count < 1) throw std::invalid_argument("make_sensors: count must be >= 1");
    if (radius <= 0.0) throw std::invalid_argument("make_sensors: radius must be > 0");
    double span = angle_end - angle_start;
    if (span <= 0.0) throw std::invalid_argument("make_sensors: angle_end must exceed angle_start");
    if (span > 2.0 * M_PI + 1e-12) throw std::invalid_argument("make_sensors: arc longer than full circle");

    bool full_circle = std::abs(span - 2.0 * M_PI) <= 1e-12 * 2.0 * M_PI;
    double step;
    if (full_circle) {
        step = span / double(count);
    } else {
        if (count < 2) throw std::invalid_argument("make_sensors: partial arc needs count >= 2");
        step = span / double(count - 1);
    }

    SensorArray arr;
    arr.radius = radius;
    arr.angles.resize(count);
    arr.positions.resize(count);
    for (int k = 0; k < count; ++k) {
        double a = angle_start + step * k;
        arr.angles[k] = a;
        arr.positions[k] = {radius * std::cos(a), radius * std::sin(a)};
    }
    return arr;
}

SensorArray make_sensors(int count, double radius) {
    return make_sensors(count, radius, 0.0, 2.0 * M_PI);
}

TimeAxis make_time_axis(int samples, double t_final) {
    if (samples < 2) throw std::invalid_argument("make_time_axis: samples must be >= 2");
    if (t_final <= 0.0) throw std::invalid_argument("make_time_axis: t_final must be > 0");
    return TimeAxis{samples, t_final};
}

bool check_sampling(int sensor_count, double support_radius, double wavelength_density) {
    if (support_radius < 0.0 || wavelength_density < 0.0)
        throw std::invalid_argument("check_sampling: radius and density must be nonnegative");
    return double(sensor_count) >= 2.0 * support_radius * wavelength_density;
}

}  // namespace cspat
