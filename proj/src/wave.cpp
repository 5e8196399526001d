#include "cspat/wave.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "cspat/diffops.hpp"
#include "cspat/errors.hpp"

namespace cspat {

namespace {

// d/dtau by second-order differences on a uniform grid, one-sided at the ends.
void dtau_rows(const std::vector<double>& in, std::vector<double>& out, int n, double dtau) {
    const double i2 = 1.0 / (2.0 * dtau);
    out[0] = (-3.0 * in[0] + 4.0 * in[1] - in[2]) * i2;
    for (int l = 1; l < n - 1; ++l) out[l] = (in[l + 1] - in[l - 1]) * i2;
    out[n - 1] = (3.0 * in[n - 1] - 4.0 * in[n - 2] + in[n - 3]) * i2;
}

// Exact transpose of dtau_rows.
void dtau_transpose_rows(const std::vector<double>& in, std::vector<double>& out, int n,
                         double dtau) {
    const double i2 = 1.0 / (2.0 * dtau);
    std::fill(out.begin(), out.begin() + n, 0.0);
    out[0] += -3.0 * i2 * in[0];
    out[1] += 4.0 * i2 * in[0];
    out[2] += -i2 * in[0];
    for (int l = 1; l < n - 1; ++l) {
        out[l + 1] += i2 * in[l];
        out[l - 1] += -i2 * in[l];
    }
    out[n - 1] += 3.0 * i2 * in[n - 1];
    out[n - 2] += -4.0 * i2 * in[n - 1];
    out[n - 3] += i2 * in[n - 1];
}

double farthest_corner(const ImageGrid& g, double sx, double sy) {
    double d = 0.0;
    for (int iy : {0, g.ny - 1})
        for (int ix : {0, g.nx - 1}) d = std::max(d, std::hypot(g.x(ix) - sx, g.y(iy) - sy));
    return d;
}

double wrap_2pi(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    return a < 0.0 ? a + 2.0 * M_PI : a;
}

}  // namespace

WaveOperator::WaveOperator(const ImageGrid& grid, const SensorArray& sensors,
                           const TimeAxis& time, const Medium& medium,
                           const WaveQuadrature& quad)
    : grid_(grid), sensors_(sensors), time_(time), medium_(medium), quad_(quad) {
    if (grid_.nx < 2 || grid_.ny < 2) throw std::invalid_argument("WaveOperator: grid too small");
    if (time_.samples < 3) throw std::invalid_argument("WaveOperator: need at least 3 time samples");
    if (medium_.sound_speed <= 0.0) throw std::invalid_argument("WaveOperator: sound speed must be > 0");
    if (quad_.radial_oversample < 1.0 || quad_.angular_oversample < 1.0)
        throw std::invalid_argument("WaveOperator: oversampling factors must be >= 1");

    const double px = std::min(grid_.dx, grid_.dy);
    drho_ = px / quad_.radial_oversample;
    dtau_ = medium_.sound_speed * time_.dt();

    const int M = sensors_.count();
    maxdist_.resize(M);
    mindist_.resize(M);
    win_lo_.resize(M);
    win_width_.resize(M);
    full_circle_.resize(M);
    const double xmax = grid_.x(grid_.nx - 1), ymax = grid_.y(grid_.ny - 1);
    double global_max = 0.0;
    for (int k = 0; k < M; ++k) {
        const double sx = sensors_.positions[k][0], sy = sensors_.positions[k][1];
        maxdist_[k] = farthest_corner(grid_, sx, sy);
        global_max = std::max(global_max, maxdist_[k]);
        const double ox = std::max({grid_.x0 - sx, 0.0, sx - xmax});
        const double oy = std::max({grid_.y0 - sy, 0.0, sy - ymax});
        mindist_[k] = std::hypot(ox, oy);

        // Angular window through which the sensor sees the grid's bounding
        // box; sensors inside (or on) the box fall back to the full circle.
        const double margin = std::max(grid_.dx, grid_.dy) + drho_;
        if (sx >= grid_.x0 - margin && sx <= xmax + margin && sy >= grid_.y0 - margin &&
            sy <= ymax + margin) {
            full_circle_[k] = 1;
            continue;
        }
        full_circle_[k] = 0;
        const double cx = 0.5 * (grid_.x0 + xmax), cy = 0.5 * (grid_.y0 + ymax);
        const double center_dir = std::atan2(cy - sy, cx - sx);
        double lo = 0.0, hi = 0.0;
        for (int iy : {0, grid_.ny - 1})
            for (int ix : {0, grid_.nx - 1}) {
                double d = std::atan2(grid_.y(iy) - sy, grid_.x(ix) - sx) - center_dir;
                d = std::remainder(d, 2.0 * M_PI);
                lo = std::min(lo, d);
                hi = std::max(hi, d);
            }
        // Pad: bilinear footprints and the corner sampling are not exact.
        const double pad = 2.0 * std::asin(std::min(1.0, margin / std::max(mindist_[k], margin)));
        win_lo_[k] = center_dir + lo - pad;
        win_width_[k] = (hi - lo) + 2.0 * pad;
        if (win_width_[k] >= 2.0 * M_PI) full_circle_[k] = 1;
    }
    const double tau_end = medium_.sound_speed * time_.t_final;
    const double rho_max = std::min(tau_end, global_max + drho_);
    nrad_ = int(std::floor(rho_max / drho_)) + 2;

    nphi_.resize(nrad_);
    nphi_[0] = 1;
    const double arc = px / quad_.angular_oversample;
    for (int j = 1; j < nrad_; ++j)
        nphi_[j] = std::max(8, int(std::ceil(2.0 * M_PI * (j * drho_) / arc)));
    rot_c_.resize(nrad_);
    rot_s_.resize(nrad_);
    for (int j = 0; j < nrad_; ++j) {
        const double dphi = 2.0 * M_PI / nphi_[j];
        rot_c_[j] = std::cos(dphi);
        rot_s_[j] = std::sin(dphi);
    }

    // Abel rows: G(tau_l) = int_0^tau_l m(rho) rho / sqrt(tau_l^2 - rho^2) drho
    // for a piecewise-linear m on the radial nodes (m = 0 beyond the last node).
    const int q = time_.samples;
    abel_off_.resize(q);
    abel_len_.resize(q);
    abel_.clear();
    for (int l = 0; l < q; ++l) {
        abel_off_[l] = abel_.size();
        const double tau = l * dtau_;
        int jend = std::min(nrad_ - 1, int(std::floor(tau / drho_)) + 1);
        if (l == 0 || tau <= 0.0) {
            abel_len_[l] = 0;
            continue;
        }
        abel_len_[l] = jend + 1;
        size_t base = abel_.size();
        abel_.resize(base + size_t(jend) + 1, 0.0);
        double* row = abel_.data() + base;
        for (int j = 0; j < jend; ++j) {
            double a = j * drho_;
            double b = std::min((j + 1) * drho_, tau);
            if (b <= a) break;
            // A = int rho/sqrt(tau^2-rho^2), B = int rho^2/sqrt(tau^2-rho^2)
            double sa = std::sqrt(std::max(0.0, tau * tau - a * a));
            double sb = std::sqrt(std::max(0.0, tau * tau - b * b));
            double A = sa - sb;
            double asin_a = std::asin(std::min(1.0, a / tau));
            double asin_b = std::asin(std::min(1.0, b / tau));
            double B = 0.5 * tau * tau * (asin_b - asin_a) - 0.5 * (b * sb - a * sa);
            // m(rho) = m_j (1-u) + m_{j+1} u with u = (rho - rho_j)/drho
            double wj1 = (B - a * A) / drho_;
            row[j] += A - wj1;
            row[j + 1] += wj1;
        }
    }
}

// Start index and sample count of the angular window on ring j, plus the
// window's first angle.  The angular phase is tied to the sensor's own angle
// so the sample constellation rotates rigidly with the sensor; samples are
// phi_a = theta + (a + 0.5) dphi and only those aimed at the grid's bounding
// box are visited (all others contribute exactly zero).
void WaveOperator::ring_window(int k, int j, int& a0, int& count, double& phi0) const {
    const int nphi = nphi_[j];
    const double dphi = 2.0 * M_PI / nphi;
    const double start = sensors_.angles[k] + 0.5 * dphi;
    if (full_circle_[k]) {
        a0 = 0;
        count = nphi;
        phi0 = start;
        return;
    }
    const double rel = wrap_2pi(win_lo_[k] - start);
    a0 = int(std::ceil(rel / dphi)) - 1;
    count = std::min(nphi, int(std::floor(win_width_[k] / dphi)) + 3);
    phi0 = start + a0 * dphi;
}

void WaveOperator::circular_means(const std::vector<double>& f, int k,
                                  std::vector<double>& m) const {
    const double sx = sensors_.positions[k][0], sy = sensors_.positions[k][1];
    const int nx = grid_.nx, ny = grid_.ny;
    const double inv_dx = 1.0 / grid_.dx, inv_dy = 1.0 / grid_.dy;
    const double limit = maxdist_[k] + drho_;
    const double skip_below = mindist_[k] - std::max(grid_.dx, grid_.dy) - drho_;

    std::fill(m.begin(), m.end(), 0.0);
    for (int j = 0; j < nrad_; ++j) {
        const double rho = j * drho_;
        if (rho > limit) break;
        if (rho < skip_below) continue;
        int a0, count;
        double phi0;
        ring_window(k, j, a0, count, phi0);
        double c = std::cos(phi0), s = std::sin(phi0);
        const double rc = rot_c_[j], rs = rot_s_[j];
        double acc = 0.0;
        for (int i = 0; i < count; ++i) {
            const double gx = (sx + rho * c - grid_.x0) * inv_dx;
            const double gy = (sy + rho * s - grid_.y0) * inv_dy;
            const double cn = c * rc - s * rs;
            s = s * rc + c * rs;
            c = cn;
            const double fx = std::floor(gx), fy = std::floor(gy);
            const int ix = int(fx), iy = int(fy);
            const double wx = gx - fx, wy = gy - fy;
            if (unsigned(ix) < unsigned(nx - 1) && unsigned(iy) < unsigned(ny - 1)) {
                const double* p0 = f.data() + size_t(iy) * nx + ix;
                acc += (1.0 - wy) * ((1.0 - wx) * p0[0] + wx * p0[1]) +
                       wy * ((1.0 - wx) * p0[nx] + wx * p0[nx + 1]);
                continue;
            }
            if (ix < -1 || ix > nx - 1 || iy < -1 || iy > ny - 1) continue;
            double v = 0.0;
            if (ix >= 0 && iy >= 0) v += (1.0 - wx) * (1.0 - wy) * f[size_t(iy) * nx + ix];
            if (ix + 1 < nx && iy >= 0) v += wx * (1.0 - wy) * f[size_t(iy) * nx + ix + 1];
            if (ix >= 0 && iy + 1 < ny) v += (1.0 - wx) * wy * f[size_t(iy + 1) * nx + ix];
            if (ix + 1 < nx && iy + 1 < ny) v += wx * wy * f[size_t(iy + 1) * nx + ix + 1];
            acc += v;
        }
        m[j] = acc / nphi_[j];
    }
}

void WaveOperator::scatter_means(const std::vector<double>& m, int k,
                                 std::vector<double>& f) const {
    const double sx = sensors_.positions[k][0], sy = sensors_.positions[k][1];
    const int nx = grid_.nx, ny = grid_.ny;
    const double inv_dx = 1.0 / grid_.dx, inv_dy = 1.0 / grid_.dy;
    const double limit = maxdist_[k] + drho_;
    const double skip_below = mindist_[k] - std::max(grid_.dx, grid_.dy) - drho_;

    for (int j = 0; j < nrad_; ++j) {
        const double rho = j * drho_;
        if (rho > limit) break;
        if (rho < skip_below) continue;
        if (m[j] == 0.0) continue;
        int a0, count;
        double phi0;
        ring_window(k, j, a0, count, phi0);
        double c = std::cos(phi0), s = std::sin(phi0);
        const double rc = rot_c_[j], rs = rot_s_[j];
        const double w0 = m[j] / nphi_[j];
        for (int i = 0; i < count; ++i) {
            const double gx = (sx + rho * c - grid_.x0) * inv_dx;
            const double gy = (sy + rho * s - grid_.y0) * inv_dy;
            const double cn = c * rc - s * rs;
            s = s * rc + c * rs;
            c = cn;
            const double fx = std::floor(gx), fy = std::floor(gy);
            const int ix = int(fx), iy = int(fy);
            const double wx = gx - fx, wy = gy - fy;
            if (unsigned(ix) < unsigned(nx - 1) && unsigned(iy) < unsigned(ny - 1)) {
                double* p0 = f.data() + size_t(iy) * nx + ix;
                p0[0] += w0 * (1.0 - wx) * (1.0 - wy);
                p0[1] += w0 * wx * (1.0 - wy);
                p0[nx] += w0 * (1.0 - wx) * wy;
                p0[nx + 1] += w0 * wx * wy;
                continue;
            }
            if (ix < -1 || ix > nx - 1 || iy < -1 || iy > ny - 1) continue;
            if (ix >= 0 && iy >= 0) f[size_t(iy) * nx + ix] += w0 * (1.0 - wx) * (1.0 - wy);
            if (ix + 1 < nx && iy >= 0) f[size_t(iy) * nx + ix + 1] += w0 * wx * (1.0 - wy);
            if (ix >= 0 && iy + 1 < ny) f[size_t(iy + 1) * nx + ix] += w0 * (1.0 - wx) * wy;
            if (ix + 1 < nx && iy + 1 < ny) f[size_t(iy + 1) * nx + ix + 1] += w0 * wx * wy;
        }
    }
}

SensorData WaveOperator::forward(const Image& f) const {
    check_image_shape(f, "wave_forward");
    if (f.grid.nx != grid_.nx || f.grid.ny != grid_.ny)
        throw ShapeError("wave_forward: image grid does not match operator grid");

    if (!support_warned_) {
        for (int iy = 0; iy < grid_.ny && !support_warned_; ++iy)
            for (int ix = 0; ix < grid_.nx; ++ix)
                if (f.at(ix, iy) != 0.0 &&
                    std::hypot(grid_.x(ix), grid_.y(iy)) > sensors_.radius) {
                    std::fprintf(stderr,
                                 "wave_forward: warning: source support extends outside the "
                                 "sensor circle (radius %g)\n",
                                 sensors_.radius);
                    support_warned_ = true;
                    break;
                }
    }

    SensorData d(sensors_, time_);
    const int q = time_.samples;
    const int M = sensors_.count();
#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<double> m(nrad_), g(q), p(q);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int k = 0; k < M; ++k) {
            circular_means(f.values, k, m);
            for (int l = 0; l < q; ++l) {
                const double* row = abel_.data() + abel_off_[l];
                double acc = 0.0;
                for (int j = 0; j < abel_len_[l]; ++j) acc += row[j] * m[j];
                g[l] = acc;
            }
            dtau_rows(g, p, q, dtau_);
            std::copy(p.begin(), p.end(), d.values.begin() + size_t(k) * q);
        }
    }
    return d;
}

Image WaveOperator::transpose(const SensorData& d) const {
    check_sensor_shape(d, "wave_transpose");
    if (d.sensors.count() != sensors_.count() || d.time.samples != time_.samples)
        throw ShapeError("wave_transpose: data shape does not match operator");

    const int q = time_.samples;
    const int M = sensors_.count();
    const size_t n = size_t(grid_.size());

    int nthreads = 1;
#ifdef _OPENMP
    nthreads = omp_get_max_threads();
#endif
    std::vector<std::vector<double>> partial(nthreads, std::vector<double>(n, 0.0));

#ifdef _OPENMP
#pragma omp parallel num_threads(nthreads)
#endif
    {
        int tid = 0;
#ifdef _OPENMP
        tid = omp_get_thread_num();
#endif
        std::vector<double> pk(q), g(q), m(nrad_);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int k = 0; k < M; ++k) {
            std::copy(d.values.begin() + size_t(k) * q, d.values.begin() + size_t(k + 1) * q,
                      pk.begin());
            dtau_transpose_rows(pk, g, q, dtau_);
            std::fill(m.begin(), m.end(), 0.0);
            for (int l = 0; l < q; ++l) {
                if (g[l] == 0.0) continue;
                const double* row = abel_.data() + abel_off_[l];
                for (int j = 0; j < abel_len_[l]; ++j) m[j] += row[j] * g[l];
            }
            scatter_means(m, k, partial[tid]);
        }
    }

    Image out(grid_);
    for (int t = 0; t < nthreads; ++t)
        for (size_t i = 0; i < n; ++i) out.values[i] += partial[t][i];
    return out;
}

SensorData wave_forward(const Image& f, const SensorArray& sensors, const TimeAxis& time,
                        const Medium& medium, const WaveQuadrature& quad) {
    return WaveOperator(f.grid, sensors, time, medium, quad).forward(f);
}

Image wave_transpose(const SensorData& d, const ImageGrid& grid, const Medium& medium,
                     const WaveQuadrature& quad) {
    return WaveOperator(grid, d.sensors, d.time, medium, quad).transpose(d);
}

Image fbp(const SensorData& d, const ImageGrid& grid, const Medium& medium) {
    check_sensor_shape(d, "fbp");
    if (grid.nx < 2 || grid.ny < 2) throw std::invalid_argument("fbp: grid too small");
    const int M = d.sensors.count();
    const int q = d.time.samples;
    if (q < 3) throw std::invalid_argument("fbp: need at least 3 time samples");
    const double R = d.sensors.radius;
    const double c = medium.sound_speed;
    const double dtau = c * d.time.dt();
    const double tau_end = c * d.time.t_final;

    double global_max = 0.0;
    for (int k = 0; k < M; ++k)
        global_max = std::max(
            global_max, farthest_corner(grid, d.sensors.positions[k][0], d.sensors.positions[k][1]));
    if (tau_end < global_max)
        std::fprintf(stderr,
                     "fbp: warning: time axis truncates the data (c*T = %g < max sensor-pixel "
                     "distance %g)\n",
                     tau_end, global_max);

    // Arc-length weights: uniform for an endpoint-exclusive full circle,
    // trapezoidal for a partial arc.
    std::vector<double> w(M, 0.0);
    if (M == 1) {
        w[0] = 2.0 * M_PI * R;
    } else {
        double step = d.sensors.angles[1] - d.sensors.angles[0];
        double span = d.sensors.angles[M - 1] - d.sensors.angles[0];
        bool full = std::abs(span + step - 2.0 * M_PI) < 1e-9;
        if (full) {
            std::fill(w.begin(), w.end(), R * step);
        } else {
            std::fill(w.begin(), w.end(), R * step);
            w[0] = w[M - 1] = 0.5 * R * step;
        }
    }

    // q_k = d/dtau (tau * p); radial tables of the singular inner integral.
    const double drho = 0.5 * std::min(grid.dx, grid.dy);
    const int nrho = int(std::ceil(global_max / drho)) + 2;
    std::vector<double> table(size_t(M) * nrho, 0.0);

#ifdef _OPENMP
#pragma omp parallel
#endif
    {
        std::vector<double> v(q), qk(q);
#ifdef _OPENMP
#pragma omp for schedule(static)
#endif
        for (int k = 0; k < M; ++k) {
            for (int l = 0; l < q; ++l) v[l] = (l * dtau) * d.at(k, l);
            dtau_rows(v, qk, q, dtau);
            double* tk = table.data() + size_t(k) * nrho;
            for (int i = 1; i < nrho; ++i) {
                const double rho = i * drho;
                if (rho >= tau_end) {
                    tk[i] = 0.0;
                    continue;
                }
                // sum over time cells [tau_l, tau_{l+1}] intersected with [rho, tau_end]
                int l0 = std::max(0, int(std::floor(rho / dtau)));
                double acc = 0.0;
                for (int l = l0; l < q - 1; ++l) {
                    double a = std::max(l * dtau, rho);
                    double b = (l + 1) * dtau;
                    if (b <= a) continue;
                    double ja = std::sqrt(std::max(0.0, a * a - rho * rho));
                    double jb = std::sqrt(std::max(0.0, b * b - rho * rho));
                    double J0 = std::log((b + jb) / (a + ja));
                    double J1 = jb - ja;
                    double slope = (qk[l + 1] - qk[l]) / dtau;
                    acc += (qk[l] - slope * (l * dtau)) * J0 + slope * J1;
                }
                tk[i] = acc;
            }
            tk[0] = tk[1];
        }
    }

    Image out(grid);
    const double scale = -1.0 / (M_PI * R);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int iy = 0; iy < grid.ny; ++iy) {
        for (int ix = 0; ix < grid.nx; ++ix) {
            const double px = grid.x(ix), py = grid.y(iy);
            double acc = 0.0;
            for (int k = 0; k < M; ++k) {
                double rho = std::hypot(px - d.sensors.positions[k][0],
                                        py - d.sensors.positions[k][1]);
                double u = rho / drho;
                int i = std::min(int(u), nrho - 2);
                double frac = u - i;
                const double* tk = table.data() + size_t(k) * nrho;
                acc += w[k] * ((1.0 - frac) * tk[i] + frac * tk[i + 1]);
            }
            out.at(ix, iy) = scale * acc;
        }
    }
    return out;
}

double commutation_defect(const Image& f, const SensorArray& sensors, const TimeAxis& time,
                          const Medium& medium, const WaveQuadrature& quad) {
    WaveOperator op(f.grid, sensors, time, medium, quad);
    const double c2 = medium.sound_speed * medium.sound_speed;
    SensorData lhs = dtt(op.forward(f));
    Image lf = laplacian(f);
    for (double& v : lf.values) v *= c2;
    SensorData rhs = op.forward(lf);
    double num = 0.0, den = 0.0;
    for (size_t i = 0; i < lhs.values.size(); ++i) {
        double e = lhs.values[i] - rhs.values[i];
        num += e * e;
        den += rhs.values[i] * rhs.values[i];
    }
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return std::sqrt(num / den);
}

}  // namespace cspat
