#pragma once

#include <cstdint>

#include "cspat/image.hpp"

namespace cspat {

// Disc indicator of the given radius with an edge smoothed over roughly two
// pixels; values lie in [0, value].
Image disc_phantom(const ImageGrid& grid, double cx, double cy, double radius,
                   double value = 1.0, double edge_pixels = 2.0);

// Isotropic Gaussian bump exp(-r^2 / (2 sigma^2)) scaled to `value`.
Image gaussian_blob(const ImageGrid& grid, double cx, double cy, double sigma,
                    double value = 1.0);

// Random smooth tubular structures on a zero background, maximal intensity
// exactly 1.  Identical (grid, seed) pairs reproduce identical images.
Image vessel_phantom(const ImageGrid& grid, uint64_t seed);

// Classic ten-ellipse head phantom mapped onto the grid's bounding square,
// clipped to nonnegative values and normalized to maximal intensity 1.
Image shepp_logan(const ImageGrid& grid);

}  // namespace cspat
