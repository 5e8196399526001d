#include "cspat/measure.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "cspat/errors.hpp"
#include "cspat/rng.hpp"

namespace cspat {

MeasMatrix subsampling_matrix(int rows, int cols, int stride, double weight) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("subsampling_matrix: empty shape");
    if (stride < 1) throw std::invalid_argument("subsampling_matrix: stride must be >= 1");
    if (cols < stride * (rows - 1) + 1)
        throw std::invalid_argument("subsampling_matrix: needs cols >= stride*(rows-1)+1 (got " +
                                    std::to_string(cols) + " columns for " + std::to_string(rows) +
                                    " rows)");
    MeasMatrix S;
    S.rows = rows;
    S.cols = cols;
    S.kind = MatrixKind::Subsampling;
    S.stride = stride;
    S.weight = weight;
    S.entries.assign(size_t(rows) * cols, 0.0);
    for (int i = 0; i < rows; ++i) S.entries[size_t(i) * cols + size_t(i) * stride] = weight;
    return S;
}

MeasMatrix bernoulli_matrix(int rows, int cols, uint64_t seed) {
    if (rows < 1 || cols < 1) throw std::invalid_argument("bernoulli_matrix: empty shape");
    MeasMatrix S;
    S.rows = rows;
    S.cols = cols;
    S.kind = MatrixKind::Bernoulli;
    S.seed = seed;
    S.entries.resize(size_t(rows) * cols);
    SplitMix64 rng(seed);
    const double a = 1.0 / std::sqrt(double(rows));
    for (double& e : S.entries) e = rng.next_sign() * a;
    return S;
}

CSOperator::CSOperator(MeasMatrix S, const ImageGrid& grid, const SensorArray& sensors,
                       const TimeAxis& time, const Medium& medium, const WaveQuadrature& quad)
    : S_(std::move(S)), wave_(grid, sensors, time, medium, quad) {
    if (S_.cols != sensors.count())
        throw ShapeError("CSOperator: matrix has " + std::to_string(S_.cols) +
                         " columns but there are " + std::to_string(sensors.count()) + " sensors");
}

CSData apply_matrix(const MeasMatrix& S, const SensorData& p) {
    check_sensor_shape(p, "apply_matrix");
    if (p.sensors.count() != S.cols)
        throw ShapeError("apply_matrix: matrix columns do not match sensor count");
    const int q = p.time.samples;
    CSData g(S.rows, p.time);
    for (int i = 0; i < S.rows; ++i) {
        const double* row = S.entries.data() + size_t(i) * S.cols;
        for (int k = 0; k < S.cols; ++k) {
            const double s = row[k];
            if (s == 0.0) continue;
            const double* pk = p.values.data() + size_t(k) * q;
            double* gi = g.values.data() + size_t(i) * q;
            for (int l = 0; l < q; ++l) gi[l] += s * pk[l];
        }
    }
    return g;
}

CSData CSOperator::forward(const Image& f) const {
    return apply_matrix(S_, wave_.forward(f));
}

namespace {

SensorData expand_rows(const MeasMatrix& S, const CSData& g, const SensorArray& sensors,
                       const TimeAxis& time) {
    const int q = time.samples;
    SensorData d(sensors, time);
    for (int i = 0; i < S.rows; ++i) {
        const double* row = S.entries.data() + size_t(i) * S.cols;
        const double* gi = g.values.data() + size_t(i) * q;
        for (int k = 0; k < S.cols; ++k) {
            const double s = row[k];
            if (s == 0.0) continue;
            double* dk = d.values.data() + size_t(k) * q;
            for (int l = 0; l < q; ++l) dk[l] += s * gi[l];
        }
    }
    return d;
}

}  // namespace

Image CSOperator::transpose(const CSData& g) const {
    check_cs_shape(g, "cs_transpose");
    if (g.rows != S_.rows || g.time.samples != time_axis().samples)
        throw ShapeError("cs_transpose: data shape does not match operator");
    return wave_.transpose(expand_rows(S_, g, sensors(), time_axis()));
}

Image CSOperator::backproject(const CSData& g) const {
    check_cs_shape(g, "cs_backproject");
    if (g.rows != S_.rows || g.time.samples != time_axis().samples)
        throw ShapeError("cs_backproject: data shape does not match operator");
    return fbp(expand_rows(S_, g, sensors(), time_axis()), grid(), medium());
}

void CSOperator::apply(const std::vector<double>& x, std::vector<double>& y) const {
    Image f(grid());
    if (x.size() != f.values.size()) throw ShapeError("CSOperator::apply: size mismatch");
    f.values = x;
    y = forward(f).values;
}

void CSOperator::apply_transpose(const std::vector<double>& y, std::vector<double>& x) const {
    CSData g(S_.rows, time_axis());
    if (y.size() != g.values.size())
        throw ShapeError("CSOperator::apply_transpose: size mismatch");
    g.values = y;
    x = transpose(g).values;
}

double CSOperator::norm_estimate(int iterations) const {
    if (!cached_norm_) cached_norm_ = op_norm(*this, iterations, /*seed=*/0x5eed);
    return *cached_norm_;
}

CSData cs_forward(const Image& f, const CSOperator& A) { return A.forward(f); }
Image cs_transpose(const CSData& g, const CSOperator& A) { return A.transpose(g); }
Image cs_backproject(const CSData& g, const CSOperator& A) { return A.backproject(g); }

CSData add_noise(const CSData& g, double sigma, uint64_t seed) {
    check_cs_shape(g, "add_noise");
    if (sigma < 0.0) throw std::invalid_argument("add_noise: sigma must be >= 0");
    CSData out = g;
    if (sigma == 0.0) return out;
    double peak = 0.0;
    for (double v : g.values) peak = std::max(peak, std::abs(v));
    const double sd = sigma * peak;
    SplitMix64 rng(seed);
    for (double& v : out.values) v += sd * rng.next_gaussian();
    return out;
}

namespace {

double rip_dense(const Eigen::MatrixXd& A, int s, long support_budget) {
    const int n = int(A.cols());
    if (s < 1 || s > n) throw std::invalid_argument("rip_constant: order out of range");

    // C(n, s) with overflow guard against the budget.
    double combos = 1.0;
    for (int i = 0; i < s; ++i) combos = combos * double(n - i) / double(i + 1);
    if (combos > double(support_budget))
        throw BudgetError("rip_constant: " + std::to_string((long long)combos) +
                          " supports exceed budget " + std::to_string(support_budget));

    const Eigen::MatrixXd G = A.transpose() * A;
    std::vector<int> idx(s);
    for (int i = 0; i < s; ++i) idx[i] = i;
    double delta = 0.0;
    Eigen::MatrixXd sub(s, s);
    while (true) {
        for (int r = 0; r < s; ++r)
            for (int c = 0; c < s; ++c) sub(r, c) = G(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sub, Eigen::EigenvaluesOnly);
        delta = std::max(delta, std::max(es.eigenvalues().maxCoeff() - 1.0,
                                         1.0 - es.eigenvalues().minCoeff()));
        // next support in lexicographic order
        int i = s - 1;
        while (i >= 0 && idx[i] == n - s + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < s; ++j) idx[j] = idx[j - 1] + 1;
    }
    return delta;
}

}  // namespace

double rip_constant(const Eigen::MatrixXd& A, int s, long support_budget) {
    return rip_dense(A, s, support_budget);
}

double rip_constant(const MeasMatrix& S, int s, long support_budget) {
    Eigen::MatrixXd A(S.rows, S.cols);
    for (int i = 0; i < S.rows; ++i)
        for (int j = 0; j < S.cols; ++j) A(i, j) = S.at(i, j);
    return rip_dense(A, s, support_budget);
}

SourceConditionReport check_source_condition(const Eigen::MatrixXd& A, const Eigen::VectorXd& h) {
    if (h.size() != A.cols())
        throw ShapeError("check_source_condition: h length does not match columns");

    std::vector<int> supp;
    for (int i = 0; i < h.size(); ++i)
        if (h[i] != 0.0) supp.push_back(i);

    SourceConditionReport rep;
    rep.eta = Eigen::VectorXd::Zero(A.rows());
    if (supp.empty()) {
        // Trivial certificate: eta = 0 matches the empty sign pattern.
        rep.sign_match = true;
        rep.injective_on_support = true;
        rep.strict_interior_max = 0.0;
        return rep;
    }

    const int s = int(supp.size());
    Eigen::MatrixXd B(A.rows(), s);
    Eigen::VectorXd sgn(s);
    for (int j = 0; j < s; ++j) {
        B.col(j) = A.col(supp[j]);
        sgn[j] = h[supp[j]] > 0.0 ? 1.0 : -1.0;
    }

    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(B);
    rep.injective_on_support = (cod.rank() == s);

    // Minimum-norm eta with B^T eta = sgn: eta = B (B^T B)^+ sgn.
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> codt(B.transpose());
    rep.eta = codt.solve(sgn);
    Eigen::VectorXd fit = B.transpose() * rep.eta;
    rep.sign_match = (fit - sgn).lpNorm<Eigen::Infinity>() <= 1e-8;

    Eigen::VectorXd corr = A.transpose() * rep.eta;
    double off = 0.0;
    int si = 0;
    for (int i = 0; i < h.size(); ++i) {
        if (si < s && supp[si] == i) {
            ++si;
            continue;
        }
        off = std::max(off, std::abs(corr[i]));
    }
    rep.strict_interior_max = off;
    return rep;
}

}  // namespace cspat
