#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cspat/image.hpp"
#include "cspat/linop.hpp"
#include "cspat/wave.hpp"

namespace cspat {

enum class MatrixKind { Subsampling, Bernoulli };

// Dense measurement matrix applied per time sample, rows x cols with
// cols = sensor count.
struct MeasMatrix {
    int rows = 0;
    int cols = 0;
    MatrixKind kind = MatrixKind::Subsampling;
    uint64_t seed = 0;
    int stride = 4;
    double weight = 2.0;
    std::vector<double> entries;  // row-major

    double at(int i, int j) const { return entries[size_t(i) * cols + j]; }
};

// Deterministic sensor subsampling: row i selects sensor stride*i (0-based)
// with the given weight; requires cols >= stride*(rows-1)+1.
MeasMatrix subsampling_matrix(int rows, int cols, int stride = 4, double weight = 2.0);

// Entries +-1/sqrt(rows) with equal probability, drawn row-major from
// SplitMix64(seed).
MeasMatrix bernoulli_matrix(int rows, int cols, uint64_t seed);

// Compressed-sensing system A = (S (x) I) o W: acoustic forward followed by
// the measurement matrix applied to each time column.  Exposes the flattened
// LinearOp view used by the solvers (domain = pixels, range = rows*Q).
class CSOperator : public LinearOp {
  public:
    CSOperator(MeasMatrix S, const ImageGrid& grid, const SensorArray& sensors,
               const TimeAxis& time, const Medium& medium, const WaveQuadrature& quad = {});

    CSData forward(const Image& f) const;
    Image transpose(const CSData& g) const;
    // Unmatched adjoint-type inversion: expand with S^T, then filtered
    // backprojection.
    Image backproject(const CSData& g) const;

    int domain_size() const override { return wave_.grid().size(); }
    int range_size() const override { return S_.rows * time_axis().samples; }
    void apply(const std::vector<double>& x, std::vector<double>& y) const override;
    void apply_transpose(const std::vector<double>& y, std::vector<double>& x) const override;

    // Cached spectral estimate (power iteration, fixed seed); computed on
    // first use.
    double norm_estimate(int iterations = 100) const;

    const MeasMatrix& matrix() const { return S_; }
    const ImageGrid& grid() const { return wave_.grid(); }
    const SensorArray& sensors() const { return wave_.sensors(); }
    const TimeAxis& time_axis() const { return wave_.time_axis(); }
    const Medium& medium() const { return wave_.medium(); }

  private:
    MeasMatrix S_;
    WaveOperator wave_;
    mutable std::optional<double> cached_norm_;
};

// The measurement stage alone: y_i(t) = sum_k S_ik p_k(t).
CSData apply_matrix(const MeasMatrix& S, const SensorData& p);

CSData cs_forward(const Image& f, const CSOperator& A);
Image cs_transpose(const CSData& g, const CSOperator& A);
Image cs_backproject(const CSData& g, const CSOperator& A);

// Additive Gaussian noise with standard deviation sigma * max|g|, drawn from
// SplitMix64(seed) in row-major order.
CSData add_noise(const CSData& g, double sigma, uint64_t seed);

// Exact restricted isometry constant of order s by enumeration of all
// column supports of that size; throws BudgetError when C(cols, s) exceeds
// the budget.
double rip_constant(const MeasMatrix& S, int s, long support_budget = 1000000);
double rip_constant(const Eigen::MatrixXd& A, int s, long support_budget = 1000000);

// Source-condition certificate for l1 recovery of h from A h: a minimum-norm
// dual vector eta with A^T eta matching sign(h) on the support, strictly
// below 1 off the support, plus injectivity of A on the support.
struct SourceConditionReport {
    Eigen::VectorXd eta;
    bool sign_match = false;
    double strict_interior_max = 0.0;
    bool injective_on_support = false;

    bool conclusive() const {
        return sign_match && injective_on_support && strict_interior_max < 1.0;
    }
};

SourceConditionReport check_source_condition(const Eigen::MatrixXd& A, const Eigen::VectorXd& h);

}  // namespace cspat
