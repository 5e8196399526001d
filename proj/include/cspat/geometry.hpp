#pragma once

#include <array>
#include <vector>

namespace cspat {

// Cartesian pixel grid.  (x0, y0) is the coordinate of the first sample,
// samples are at x0 + ix*dx, y0 + iy*dy; storage everywhere is row-major
// with index iy*nx + ix.
struct ImageGrid {
    int nx = 0;
    int ny = 0;
    double x0 = 0.0;
    double y0 = 0.0;
    double dx = 1.0;
    double dy = 1.0;

    int size() const { return nx * ny; }
    double x(int ix) const { return x0 + ix * dx; }
    double y(int iy) const { return y0 + iy * dy; }
    // Largest distance from the origin to any sample point.
    double max_radius() const;
    bool square_pixels(double rel_tol = 1e-12) const;
};

// Point detectors on a circle centred at the origin.
struct SensorArray {
    double radius = 0.0;
    std::vector<double> angles;                       // radians
    std::vector<std::array<double, 2>> positions;     // radius * (cos, sin)

    int count() const { return int(angles.size()); }
};

// Uniform time samples t_l = (l-1) * dt for l = 1..samples, dt = t_final/(samples-1).
struct TimeAxis {
    int samples = 0;
    double t_final = 0.0;

    double dt() const { return t_final / double(samples - 1); }
    double t(int l) const { return t_final * double(l) / double(samples - 1); }
};

struct Medium {
    double sound_speed = 1.0;
};

// count equidistant sensors on the circle of the given radius spanning
// [angle_start, angle_end].  A full 2*pi span is laid out endpoint-exclusive
// (spacing span/count); a partial arc includes both endpoints (spacing
// span/(count-1)).
SensorArray make_sensors(int count, double radius, double angle_start, double angle_end);
SensorArray make_sensors(int count, double radius);  // full circle

TimeAxis make_time_axis(int samples, double t_final);

// Sampling condition for a source supported in the disc of radius
// support_radius whose essential wavelength density is wavelength_density
// (wavelength count per unit length): the sensor count must satisfy
// count >= 2 * support_radius * wavelength_density (inclusive).
bool check_sampling(int sensor_count, double support_radius, double wavelength_density);

}  // namespace cspat
