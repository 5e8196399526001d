#include "cspat/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "cspat/errors.hpp"

namespace cspat {

namespace {

void check_pair(const Image& a, const Image& b, const char* where) {
    check_image_shape(a, where);
    check_image_shape(b, where);
    if (a.grid.nx != b.grid.nx || a.grid.ny != b.grid.ny)
        throw ShapeError(std::string(where) + ": image sizes differ");
}

}  // namespace

double mse(const Image& a, const Image& b) {
    check_pair(a, b, "mse");
    double s = 0.0;
    for (size_t i = 0; i < a.values.size(); ++i) {
        double d = a.values[i] - b.values[i];
        s += d * d;
    }
    return s / double(a.values.size());
}

double psnr(const Image& a, const Image& b, double peak) {
    double m = mse(a, b);
    if (m == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / m);
}

double ssim(const Image& a, const Image& b, double peak) {
    check_pair(a, b, "ssim");
    const int half = 5;  // 11x11 window
    const double sigma = 1.5;
    double w[2 * half + 1];
    for (int i = -half; i <= half; ++i) w[i + half] = std::exp(-0.5 * i * i / (sigma * sigma));

    const double c1 = (0.01 * peak) * (0.01 * peak);
    const double c2 = (0.03 * peak) * (0.03 * peak);
    const int nx = a.grid.nx, ny = a.grid.ny;

    double total = 0.0;
    for (int iy = 0; iy < ny; ++iy) {
        for (int ix = 0; ix < nx; ++ix) {
            double sw = 0.0, sa = 0.0, sb = 0.0, saa = 0.0, sbb = 0.0, sab = 0.0;
            for (int jy = std::max(0, iy - half); jy <= std::min(ny - 1, iy + half); ++jy) {
                for (int jx = std::max(0, ix - half); jx <= std::min(nx - 1, ix + half); ++jx) {
                    double ww = w[jx - ix + half] * w[jy - iy + half];
                    double va = a.at(jx, jy), vb = b.at(jx, jy);
                    sw += ww;
                    sa += ww * va;
                    sb += ww * vb;
                    saa += ww * va * va;
                    sbb += ww * vb * vb;
                    sab += ww * va * vb;
                }
            }
            double ma = sa / sw, mb = sb / sw;
            double va = saa / sw - ma * ma;
            double vb = sbb / sw - mb * mb;
            double cab = sab / sw - ma * mb;
            total += ((2.0 * ma * mb + c1) * (2.0 * cab + c2)) /
                     ((ma * ma + mb * mb + c1) * (va + vb + c2));
        }
    }
    return total / double(nx * ny);
}

MetricReport evaluate(const Image& truth, const Image& recon, double peak) {
    MetricReport r;
    r.mse = mse(truth, recon);
    r.psnr = psnr(truth, recon, peak);
    r.ssim = ssim(truth, recon, peak);
    return r;
}

}  // namespace cspat
