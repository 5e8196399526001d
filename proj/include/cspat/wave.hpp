#pragma once

#include <vector>

#include "cspat/image.hpp"

namespace cspat {

// Quadrature densities relative to the pixel spacing: the radial step of the
// circular-mean grid is min(dx,dy)/radial_oversample and the arc length
// between angular samples is min(dx,dy)/angular_oversample.
struct WaveQuadrature {
    double radial_oversample = 2.0;
    double angular_oversample = 2.0;
};

// Discrete acoustic forward map and its exact algebraic transpose.
//
// The continuous model is the causal solution of the 2-D wave equation with
// initial pressure f and zero initial velocity, evaluated at the sensors:
//   p(s, t) = d/dtau  integral_0^tau  m(s, rho) rho / sqrt(tau^2 - rho^2) drho,
// with tau = c t and m(s, rho) the mean of f over the circle of radius rho
// centred at s.  The discretization samples circular means by the midpoint
// rule with bilinear interpolation, integrates the Abel weight exactly over
// each radial cell against a piecewise-linear mean profile, and applies a
// second-order difference in time (one-sided at the ends).  The transpose
// runs the same three linear stages in reverse, so forward/transpose form an
// exact adjoint pair by construction.
class WaveOperator {
  public:
    WaveOperator(const ImageGrid& grid, const SensorArray& sensors, const TimeAxis& time,
                 const Medium& medium, const WaveQuadrature& quad = {});

    SensorData forward(const Image& f) const;
    Image transpose(const SensorData& d) const;

    const ImageGrid& grid() const { return grid_; }
    const SensorArray& sensors() const { return sensors_; }
    const TimeAxis& time_axis() const { return time_; }
    const Medium& medium() const { return medium_; }

  private:
    void ring_window(int k, int j, int& a0, int& count, double& phi0) const;
    void circular_means(const std::vector<double>& f, int k, std::vector<double>& m) const;
    void scatter_means(const std::vector<double>& m, int k, std::vector<double>& f) const;

    ImageGrid grid_;
    SensorArray sensors_;
    TimeAxis time_;
    Medium medium_;
    WaveQuadrature quad_;

    double drho_ = 0.0;      // radial step of the mean profile
    double dtau_ = 0.0;      // c * dt
    int nrad_ = 0;           // radial nodes per sensor
    std::vector<int> nphi_;          // angular samples per radial node
    std::vector<double> rot_c_, rot_s_;  // per radial node: cos/sin of its angular step
    std::vector<double> maxdist_;    // per sensor: farthest grid corner
    std::vector<double> mindist_;    // per sensor: nearest bounding-box point
    std::vector<double> win_lo_, win_width_;  // per sensor: angular window seeing the grid
    std::vector<char> full_circle_;  // per sensor: window degenerate (sensor inside box)
    // Abel weights, one row per time node: G[l] = sum_j abel_[off_[l] + j] * m[j].
    std::vector<double> abel_;
    std::vector<size_t> abel_off_;
    std::vector<int> abel_len_;
    mutable bool support_warned_ = false;
};

SensorData wave_forward(const Image& f, const SensorArray& sensors, const TimeAxis& time,
                        const Medium& medium, const WaveQuadrature& quad = {});
Image wave_transpose(const SensorData& d, const ImageGrid& grid, const Medium& medium,
                     const WaveQuadrature& quad = {});

// Filtered backprojection (the unmatched adjoint-type inversion):
//   f(r) = -(1/(pi R)) sum_k w_k  integral_{|r-s_k|}  q(s_k, tau) / sqrt(tau^2 - |r-s_k|^2) dtau,
// with q = d/dtau (tau p) and trapezoidal arc weights w_k.  The singular
// integral is evaluated exactly per time cell against piecewise-linear q and
// tabulated in the radius before the pixel sweep.
Image fbp(const SensorData& d, const ImageGrid& grid, const Medium& medium);

// Relative defect of the commutation identity  dtt(W f) = W (c^2 laplacian f).
double commutation_defect(const Image& f, const SensorArray& sensors, const TimeAxis& time,
                          const Medium& medium, const WaveQuadrature& quad = {});

}  // namespace cspat
