#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cspat/image.hpp"
#include "cspat/measure.hpp"

namespace cspat {

// Small U-shaped convolutional network: `levels` encoder stages with channel
// counts base_channels * 2^i, two convolutions per stage, 2x average-pool
// downsampling, nearest-neighbour upsampling followed by a convolution,
// skip concatenation, leaky-linear activations, and a zero-initialized 1x1
// output layer so the untrained network is the identity residual.
struct NetArch {
    int levels = 2;
    int base_channels = 8;
    int kernel = 3;
    double leak = 0.1;
};

struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::vector<double> data;

    size_t count() const {
        size_t n = 1;
        for (int s : shape) n *= size_t(s);
        return n;
    }
};

struct NetParams {
    NetArch arch;
    std::vector<Tensor> tensors;

    const Tensor& find(const std::string& name) const;
    size_t total_parameters() const;
};

// Fan-in-scaled uniform initialization from SplitMix64(seed); biases start at
// zero and the final layer is zeroed unless zero_final is false.
NetParams init_params(const NetArch& arch, uint64_t seed, bool zero_final = true);

// Network output U_theta(x); input sides must be divisible by 2^levels.
Image unet_forward(const Image& x, const NetParams& params);

struct TrainConfig {
    int epochs = 1;
    int batch = 1;  // only 1 is supported
    double momentum = 0.9;
    double lr_start = 0.005;
    double lr_end = 0.0025;
    uint64_t seed = 0;
};

struct TrainResult {
    NetParams params;
    std::vector<double> loss_trace;  // mean per-sample training loss per epoch
};

// Momentum SGD on the mean-absolute-error of the residual mapping
// x + U_theta(x) against the target, batch size one, per-epoch reshuffling
// and linearly decayed learning rate.  Pairs are (input, target).
TrainResult train(const std::vector<std::pair<Image, Image>>& dataset, const NetArch& arch,
                  const TrainConfig& cfg);

// Residual reconstruction (Id + U_theta) applied to the backprojection.
Image residual_recon(const CSData& g, const CSOperator& A, const NetParams& params);

// Residual reconstruction followed by `steps` Landweber iterations toward
// the data; step <= 0 selects 0.9 / norm_estimate^2.
Image nullspace_recon(const CSData& g, const CSOperator& A, const NetParams& params,
                      int steps = 10, double step = 0.0);

struct GradCheckReport {
    double max_rel_err = 0.0;
    int probes = 0;
    bool pass = false;
};

// Central-difference check of the analytic parameter gradient on a small
// random instance whose residuals are kept away from the MAE kink.
GradCheckReport grad_check(const NetArch& arch, uint64_t seed, int probes = 60,
                           double tol = 1e-4);

// Low-level layer primitives (exposed for testing).
namespace nn {
void conv2d(const std::vector<double>& in, int cin, int h, int w, const std::vector<double>& wt,
            const std::vector<double>& bias, int cout, int k, std::vector<double>& out);
void conv2d_backward(const std::vector<double>& in, int cin, int h, int w,
                     const std::vector<double>& wt, int cout, int k,
                     const std::vector<double>& dout, std::vector<double>& din,
                     std::vector<double>& dwt, std::vector<double>& dbias);
void leaky_relu(std::vector<double>& v, double slope);
void avgpool2(const std::vector<double>& in, int c, int h, int w, std::vector<double>& out);
void upsample_nn(const std::vector<double>& in, int c, int h, int w, std::vector<double>& out);
}  // namespace nn

}  // namespace cspat
