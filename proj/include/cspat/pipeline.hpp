#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "cspat/config.hpp"
#include "cspat/image.hpp"
#include "cspat/measure.hpp"
#include "cspat/net.hpp"

namespace cspat {

// Phantom specs: "disc", "shepp", "vessel:<seed>".  Lists may also use
// "vessel:<seed>x<count>" which expands to count consecutive seeds.
Image make_phantom(const std::string& spec, const ImageGrid& grid);
std::vector<std::pair<std::string, std::string>> expand_phantom_list(
    const std::vector<std::string>& specs);

struct BenchRow {
    std::string phantom;
    std::string matrix;
    std::string method;
    double mse = 0.0;
    double psnr = 0.0;
    double ssim = 0.0;
    double seconds = 0.0;
};

std::string format_csv(const std::vector<BenchRow>& rows);

// Synthetic vessel pairs (backprojection of simulated data, ground truth).
std::vector<std::pair<Image, Image>> make_training_set(const CSOperator& A, int count,
                                                       uint64_t seed_base);
NetParams train_for_operator(const CSOperator& A, const NetworkConfig& ncfg, std::ostream* log);

// Single reconstruction dispatch: fbp | l1-joint | l1-twostage | net-res |
// net-null.  Network methods take their weights from weights_path when
// nonempty, else from cfg.network.weights.
Image run_recon(const std::string& method, const ExperimentConfig& cfg, const CSOperator& A,
                const CSData& g, const std::string& weights_path = "");

// Full comparison pipeline over the configured phantom list, both matrix
// kinds, methods {fbp, l1-joint, net-res, net-null}.  Writes the CSV and one
// reconstruction tensor per cell beside it; returns the rows.
std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, std::ostream& log);

}  // namespace cspat
