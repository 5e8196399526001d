#include "cspat/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cspat/rng.hpp"

namespace cspat {

namespace {

double smoothstep01(double t) {
    t = std::clamp(t, 0.0, 1.0);
    return t * t * (3.0 - 2.0 * t);
}

}  // namespace

Image disc_phantom(const ImageGrid& grid, double cx, double cy, double radius,
                   double value, double edge_pixels) {
    if (radius < 0.0) throw std::invalid_argument("disc_phantom: radius must be >= 0");
    Image f(grid);
    if (radius == 0.0 || value == 0.0) return f;
    double w = edge_pixels * std::min(grid.dx, grid.dy);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            double d = std::hypot(grid.x(ix) - cx, grid.y(iy) - cy);
            f.at(ix, iy) = value * smoothstep01((radius - d) / w + 0.5);
        }
    }
    return f;
}

Image gaussian_blob(const ImageGrid& grid, double cx, double cy, double sigma, double value) {
    Image f(grid);
    double is2 = 1.0 / (2.0 * sigma * sigma);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            double ddx = grid.x(ix) - cx, ddy = grid.y(iy) - cy;
            f.at(ix, iy) = value * std::exp(-(ddx * ddx + ddy * ddy) * is2);
        }
    }
    return f;
}

Image vessel_phantom(const ImageGrid& grid, uint64_t seed) {
    Image f(grid);
    SplitMix64 rng(seed);
    const double sx = (grid.nx - 1) * grid.dx, sy = (grid.ny - 1) * grid.dy;
    const double diam = std::hypot(sx, sy);
    const double px = std::min(grid.dx, grid.dy);
    const int tubes = 3 + int(rng.next_below(3));

    // Each tube is a random walk of short capsule segments with a slowly
    // varying half-width; profiles are compactly supported so the background
    // stays exactly zero.
    for (int t = 0; t < tubes; ++t) {
        double x = grid.x0 + (0.15 + 0.7 * rng.next_double()) * sx;
        double y = grid.y0 + (0.15 + 0.7 * rng.next_double()) * sy;
        double heading = 2.0 * M_PI * rng.next_double();
        double halfw = (0.8 + 1.2 * rng.next_double()) * px;
        double amp = 0.55 + 0.45 * rng.next_double();
        int steps = 24 + int(rng.next_below(17));
        double step_len = diam / 40.0;

        for (int s = 0; s < steps; ++s) {
            double nx_ = x + step_len * std::cos(heading);
            double ny_ = y + step_len * std::sin(heading);

            // Rasterize the capsule around segment (x,y)-(nx_,ny_).
            double r_out = halfw + 1.5 * px;
            int ix0 = std::max(0, int(std::floor((std::min(x, nx_) - r_out - grid.x0) / grid.dx)));
            int ix1 = std::min(grid.nx - 1, int(std::ceil((std::max(x, nx_) + r_out - grid.x0) / grid.dx)));
            int iy0 = std::max(0, int(std::floor((std::min(y, ny_) - r_out - grid.y0) / grid.dy)));
            int iy1 = std::min(grid.ny - 1, int(std::ceil((std::max(y, ny_) + r_out - grid.y0) / grid.dy)));
            double ex = nx_ - x, ey = ny_ - y;
            double ee = ex * ex + ey * ey;
            for (int iy = iy0; iy <= iy1; ++iy) {
                for (int ix = ix0; ix <= ix1; ++ix) {
                    double qx = grid.x(ix) - x, qy = grid.y(iy) - y;
                    double u = ee > 0.0 ? std::clamp((qx * ex + qy * ey) / ee, 0.0, 1.0) : 0.0;
                    double d = std::hypot(qx - u * ex, qy - u * ey);
                    // Smooth bump: 1 inside the core, eased to 0 over 1.5 px.
                    double v = amp * smoothstep01((halfw + 1.5 * px - d) / (1.5 * px));
                    double& cell = f.at(ix, iy);
                    cell = std::max(cell, v);
                }
            }

            x = nx_;
            y = ny_;
            heading += 0.55 * (rng.next_double() - 0.5);
            halfw = std::clamp(halfw + 0.25 * px * (rng.next_double() - 0.5), 0.7 * px, 2.2 * px);
        }
    }

    double peak = *std::max_element(f.values.begin(), f.values.end());
    if (peak > 0.0)
        for (double& v : f.values) v /= peak;
    return f;
}

Image shepp_logan(const ImageGrid& grid) {
    // Classic ten-ellipse table: centre, semi-axes, rotation, additive value,
    // in the [-1, 1]^2 frame.
    struct Ellipse {
        double cx, cy, a, b, phi_deg, v;
    };
    static const Ellipse table[10] = {
        {0.0, 0.0, 0.69, 0.92, 0.0, 2.0},
        {0.0, -0.0184, 0.6624, 0.874, 0.0, -0.98},
        {0.22, 0.0, 0.11, 0.31, -18.0, -0.02},
        {-0.22, 0.0, 0.16, 0.41, 18.0, -0.02},
        {0.0, 0.35, 0.21, 0.25, 0.0, 0.01},
        {0.0, 0.1, 0.046, 0.046, 0.0, 0.01},
        {0.0, -0.1, 0.046, 0.046, 0.0, 0.01},
        {-0.08, -0.605, 0.046, 0.023, 0.0, 0.01},
        {0.0, -0.606, 0.023, 0.023, 0.0, 0.01},
        {0.06, -0.605, 0.023, 0.046, 0.0, 0.01},
    };

    Image f(grid);
    const double sx = (grid.nx - 1) * grid.dx, sy = (grid.ny - 1) * grid.dy;
    const double cx = grid.x0 + 0.5 * sx, cy = grid.y0 + 0.5 * sy;
    const double half = 0.5 * std::max(sx, sy);
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            double u = (grid.x(ix) - cx) / half;
            double v = (grid.y(iy) - cy) / half;
            double val = 0.0;
            for (const Ellipse& e : table) {
                double c = std::cos(e.phi_deg * M_PI / 180.0);
                double s = std::sin(e.phi_deg * M_PI / 180.0);
                double xr = c * (u - e.cx) + s * (v - e.cy);
                double yr = -s * (u - e.cx) + c * (v - e.cy);
                if ((xr * xr) / (e.a * e.a) + (yr * yr) / (e.b * e.b) <= 1.0) val += e.v;
            }
            f.at(ix, iy) = std::max(val, 0.0);
        }
    }
    double peak = *std::max_element(f.values.begin(), f.values.end());
    if (peak > 0.0)
        for (double& w : f.values) w /= peak;
    return f;
}

}  // namespace cspat
