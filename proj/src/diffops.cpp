#include "cspat/diffops.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cspat/errors.hpp"

namespace cspat {

Image laplacian(const Image& f) {
    check_image_shape(f, "laplacian");
    if (!f.grid.square_pixels())
        throw std::invalid_argument("laplacian: grid must have dx == dy");
    const int nx = f.grid.nx, ny = f.grid.ny;
    const double ih2 = 1.0 / (f.grid.dx * f.grid.dx);
    Image out(f.grid);
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double c = f.at(ix, iy);
            double s = -4.0 * c;
            if (ix > 0) s += f.at(ix - 1, iy);
            if (ix < nx - 1) s += f.at(ix + 1, iy);
            if (iy > 0) s += f.at(ix, iy - 1);
            if (iy < ny - 1) s += f.at(ix, iy + 1);
            out.at(ix, iy) = s * ih2;
        }
    }
    return out;
}

namespace {

// Rows of traces share the stencil logic; n >= 3 samples required.
void dtt_rows(const double* in, double* out, int rows, int n, double dt) {
    const double idt2 = 1.0 / (dt * dt);
    for (int r = 0; r < rows; ++r) {
        const double* p = in + size_t(r) * n;
        double* q = out + size_t(r) * n;
        if (n == 3) {
            double v = (p[0] - 2.0 * p[1] + p[2]) * idt2;
            q[0] = q[1] = q[2] = v;
            continue;
        }
        q[0] = (2.0 * p[0] - 5.0 * p[1] + 4.0 * p[2] - p[3]) * idt2;
        for (int l = 1; l < n - 1; ++l) q[l] = (p[l - 1] - 2.0 * p[l] + p[l + 1]) * idt2;
        q[n - 1] = (2.0 * p[n - 1] - 5.0 * p[n - 2] + 4.0 * p[n - 3] - p[n - 4]) * idt2;
    }
}

}  // namespace

SensorData dtt(const SensorData& d) {
    check_sensor_shape(d, "dtt");
    if (d.time.samples < 3) throw std::invalid_argument("dtt: needs at least 3 time samples");
    SensorData out(d.sensors, d.time);
    dtt_rows(d.values.data(), out.values.data(), d.sensors.count(), d.time.samples, d.time.dt());
    return out;
}

CSData dtt(const CSData& g) {
    check_cs_shape(g, "dtt");
    if (g.time.samples < 3) throw std::invalid_argument("dtt: needs at least 3 time samples");
    CSData out(g.rows, g.time);
    dtt_rows(g.values.data(), out.values.data(), g.rows, g.time.samples, g.time.dt());
    return out;
}

Image solve_poisson(const Image& h, double tol, int max_iter_factor) {
    check_image_shape(h, "solve_poisson");
    if (!h.grid.square_pixels())
        throw std::invalid_argument("solve_poisson: grid must have dx == dy");
    const int nx = h.grid.nx, ny = h.grid.ny;
    Image f(h.grid);
    if (nx < 3 || ny < 3) return f;  // no interior

    const int mx = nx - 2, my = ny - 2, n = mx * my;
    const double ih2 = 1.0 / (h.grid.dx * h.grid.dx);
    auto idx = [mx](int jx, int jy) { return size_t(jy) * mx + jx; };

    // Interior operator: v -> -laplacian(v) restricted to the interior with
    // zero ring values, which is symmetric positive definite.
    auto apply = [&](const std::vector<double>& v, std::vector<double>& out) {
        for (int jy = 0; jy < my; ++jy) {
            for (int jx = 0; jx < mx; ++jx) {
                double s = 4.0 * v[idx(jx, jy)];
                if (jx > 0) s -= v[idx(jx - 1, jy)];
                if (jx < mx - 1) s -= v[idx(jx + 1, jy)];
                if (jy > 0) s -= v[idx(jx, jy - 1)];
                if (jy < my - 1) s -= v[idx(jx, jy + 1)];
                out[idx(jx, jy)] = s * ih2;
            }
        }
    };

    std::vector<double> b(n);
    for (int jy = 0; jy < my; ++jy)
        for (int jx = 0; jx < mx; ++jx) b[idx(jx, jy)] = -h.at(jx + 1, jy + 1);

    double bnorm = norm2(b);
    if (bnorm == 0.0) return f;

    std::vector<double> x(n, 0.0), r = b, p = b, ap(n);
    double rs = dot(r, r);
    const long max_iter = long(max_iter_factor) * n;
    double rel = std::sqrt(rs) / bnorm;
    for (long it = 0; it < max_iter && rel > tol; ++it) {
        apply(p, ap);
        double alpha = rs / dot(p, ap);
        for (int i = 0; i < n; ++i) x[i] += alpha * p[i];
        for (int i = 0; i < n; ++i) r[i] -= alpha * ap[i];
        double rs_new = dot(r, r);
        double beta = rs_new / rs;
        for (int i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        rs = rs_new;
        rel = std::sqrt(rs) / bnorm;
    }
    if (rel > tol)
        throw ConvergenceError("solve_poisson: CG stalled at relative residual " +
                                   std::to_string(rel),
                               rel);

    for (int jy = 0; jy < my; ++jy)
        for (int jx = 0; jx < mx; ++jx) f.at(jx + 1, jy + 1) = x[idx(jx, jy)];
    return f;
}

}  // namespace cspat
