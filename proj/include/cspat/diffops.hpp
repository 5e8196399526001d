#pragma once

#include "cspat/image.hpp"

namespace cspat {

// Five-point Laplacian with zero Dirichlet extension (neighbours outside the
// grid read as zero).  Requires dx == dy; the common spacing is h.
Image laplacian(const Image& f);

// Second time derivative per trace: central differences inside, one-sided
// second-order stencils at both ends (for samples == 3 the parabola through
// the three points is used everywhere).
SensorData dtt(const SensorData& d);
CSData dtt(const CSData& g);

// Solve laplacian(f) = h on interior pixels with f = 0 on the boundary ring,
// by conjugate gradients (matrix-free, relative residual tol, at most
// max_iter_factor * n iterations).  Throws ConvergenceError on failure.
Image solve_poisson(const Image& h, double tol = 1e-8, int max_iter_factor = 10);

}  // namespace cspat
