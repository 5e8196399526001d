#pragma once

#include "cspat/image.hpp"

namespace cspat {

struct MetricReport {
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
};

double mse(const Image& a, const Image& b);

// 10 log10(peak^2 / mse); +infinity when the images coincide.
double psnr(const Image& a, const Image& b, double peak = 1.0);

// Structural similarity with an 11x11 Gaussian window (sigma 1.5),
// K1 = 0.01, K2 = 0.03, dynamic range = peak.  Windows are truncated and
// renormalized at the image border.
double ssim(const Image& a, const Image& b, double peak = 1.0);

MetricReport evaluate(const Image& truth, const Image& recon, double peak = 1.0);

}  // namespace cspat
