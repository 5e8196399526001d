#pragma once

#include <utility>
#include <vector>

#include "cspat/image.hpp"
#include "cspat/linop.hpp"
#include "cspat/measure.hpp"

namespace cspat {

// Soft thresholding, the proximal map of tau * ||.||_1.
std::vector<double> prox_l1(const std::vector<double>& h, double tau);
Image prox_l1(const Image& h, double tau);

// Projection onto the nonnegative orthant, the proximal map of its indicator.
std::vector<double> prox_nonneg(const std::vector<double>& f);
Image prox_nonneg(const Image& f);

struct JointParams {
    double alpha = 1e-3;
    double beta = 5e-3;
    double mu = 0.0;  // 0 selects 0.9 / Lipschitz-estimate automatically
    int iters = 70;
};

// Smooth part of the relaxed joint functional
//   Phi(f,h) = 1/2 ||A f - g||^2 + 1/2 ||A h - dtt g||^2
//            + alpha/2 ||laplacian f - h / c^2||^2
// and its exact gradient pair
//   grad_f = A^T (A f - g) + alpha * laplacian(laplacian f - h / c^2)
//   grad_h = A^T (A h - dtt g) - alpha / c^2 * (laplacian f - h / c^2).
std::pair<Image, Image> grad_smooth(const Image& f, const Image& h, const CSData& g,
                                    const CSOperator& A, double alpha);
double joint_objective(const Image& f, const Image& h, const CSData& g, const CSOperator& A,
                       double alpha, double beta);

// Upper bound on the Lipschitz constant of grad Phi.
double lip_estimate(const CSOperator& A, double alpha);

struct JointResult {
    Image f;
    Image h;
    std::vector<double> objective;       // full objective per iteration (incl. start)
    std::vector<double> data_residual_f; // ||A f - g||
    std::vector<double> data_residual_h; // ||A h - dtt g||
    std::vector<double> coupling;        // ||laplacian f - h / c^2||
    double mu = 0.0;                     // step actually used
};

// Proximal gradient iteration on the relaxed joint functional from
// f = h = 0 with simultaneous gradient evaluation:
//   f <- max(f - mu grad_f, 0),  h <- soft(h - mu grad_h, mu beta).
// Throws DivergenceError when the objective exceeds ten times its initial
// value.
JointResult joint_solve(const CSData& g, const CSOperator& A, const JointParams& params);

struct IstaResult {
    std::vector<double> z;
    std::vector<double> objective;
};

// Plain iterative soft thresholding for 1/2 ||A z - b||^2 + beta ||z||_1
// from z = 0; mu <= 1/||A||^2 keeps the objective non-increasing.
IstaResult ista_tikhonov(const std::vector<double>& b, const LinearOp& A, double beta, double mu,
                         int iters);

// Two-stage sparsification pipeline: ISTA on the second time derivative of
// the data recovers h ~ c^2 laplacian f, then a zero-boundary Poisson solve
// and nonnegativity projection recover f.
Image two_stage(const CSData& g, const CSOperator& A, double beta, double mu, int iters);

// Landweber iteration x <- x - s A^T (A x - b) from x0; step must satisfy
// 0 < s < 1 / ||A||^2 (validated against the estimate provided).
std::vector<double> landweber(const LinearOp& A, const std::vector<double>& b,
                              const std::vector<double>& x0, int steps, double s,
                              double norm_estimate);

}  // namespace cspat
