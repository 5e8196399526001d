#include "cspat/linop.hpp"

#include <cmath>
#include <stdexcept>

#include "cspat/rng.hpp"

namespace cspat {

DenseOp::DenseOp(int rows, int cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (entries_.size() != size_t(rows) * cols)
        throw std::invalid_argument("DenseOp: entry count does not match rows*cols");
}

void DenseOp::apply(const std::vector<double>& x, std::vector<double>& y) const {
    y.assign(rows_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double* row = entries_.data() + size_t(i) * cols_;
        double s = 0.0;
        for (int j = 0; j < cols_; ++j) s += row[j] * x[j];
        y[i] = s;
    }
}

void DenseOp::apply_transpose(const std::vector<double>& y, std::vector<double>& x) const {
    x.assign(cols_, 0.0);
    for (int i = 0; i < rows_; ++i) {
        const double* row = entries_.data() + size_t(i) * cols_;
        const double yi = y[i];
        if (yi == 0.0) continue;
        for (int j = 0; j < cols_; ++j) x[j] += row[j] * yi;
    }
}

double op_norm(const LinearOp& A, int iterations, uint64_t seed) {
    const int n = A.domain_size();
    if (n < 1 || A.range_size() < 1) throw std::invalid_argument("op_norm: empty operator");

    SplitMix64 rng(seed);
    std::vector<double> v(n), av(A.range_size()), w(n);
    double nv = 0.0;
    while (nv == 0.0) {
        for (double& x : v) x = rng.next_double() - 0.5;
        double s = 0.0;
        for (double x : v) s += x * x;
        nv = std::sqrt(s);
    }
    for (double& x : v) x /= nv;

    double lambda = 0.0;
    for (int it = 0; it < iterations; ++it) {
        A.apply(v, av);
        double s = 0.0;
        for (double x : av) s += x * x;
        lambda = s;  // Rayleigh quotient of A^T A at the unit vector v
        if (s == 0.0) return 0.0;
        A.apply_transpose(av, w);
        double nw = 0.0;
        for (double x : w) nw += x * x;
        nw = std::sqrt(nw);
        if (nw == 0.0) return std::sqrt(lambda);
        for (int i = 0; i < n; ++i) v[i] = w[i] / nw;
    }
    return std::sqrt(lambda);
}

}  // namespace cspat
