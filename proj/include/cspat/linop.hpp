#pragma once

#include <cstdint>
#include <vector>

namespace cspat {

// Minimal matrix-free linear operator interface used by the iterative
// solvers and the spectral estimator.
class LinearOp {
  public:
    virtual ~LinearOp() = default;
    virtual int domain_size() const = 0;
    virtual int range_size() const = 0;
    virtual void apply(const std::vector<double>& x, std::vector<double>& y) const = 0;
    virtual void apply_transpose(const std::vector<double>& y, std::vector<double>& x) const = 0;
};

// Dense row-major matrix as a LinearOp.
class DenseOp : public LinearOp {
  public:
    DenseOp(int rows, int cols, std::vector<double> entries);

    int domain_size() const override { return cols_; }
    int range_size() const override { return rows_; }
    void apply(const std::vector<double>& x, std::vector<double>& y) const override;
    void apply_transpose(const std::vector<double>& y, std::vector<double>& x) const override;

    const std::vector<double>& entries() const { return entries_; }

  private:
    int rows_, cols_;
    std::vector<double> entries_;
};

// Largest-singular-value estimate by power iteration on A^T A from a seeded
// random start.  The returned value is a lower bound on the true norm and the
// internal Rayleigh quotients are nondecreasing; a zero start vector is
// resampled automatically.
double op_norm(const LinearOp& A, int iterations = 50, uint64_t seed = 0);

}  // namespace cspat
