#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "cspat/errors.hpp"
#include "cspat/linop.hpp"
#include "cspat/measure.hpp"
#include "cspat/phantom.hpp"
#include "cspat/rng.hpp"
#include "cspat/solver.hpp"

using namespace cspat;

namespace {

ImageGrid centered_grid(int n) {
    return ImageGrid{n, n, -0.5 * (n - 1), -0.5 * (n - 1), 1.0, 1.0};
}

// Brute-force 1-D proximal point: argmin_z tau|z| + (z-h)^2/2 over a fine grid.
double prox_l1_grid(double h, double tau) {
    double best = 0.0, best_val = tau * 0.0 + 0.5 * h * h;
    for (double z = -5.0; z <= 5.0; z += 1e-5) {
        double val = tau * std::abs(z) + 0.5 * (z - h) * (z - h);
        if (val < best_val) {
            best_val = val;
            best = z;
        }
    }
    return best;
}

}  // namespace

TEST_CASE("soft thresholding closed form") {
    std::vector<double> h = {3.0, -2.5, 0.4, -0.4, 0.0, 1.0};
    std::vector<double> p = prox_l1(h, 1.0);
    CHECK(p[0] == 2.0);
    CHECK(p[1] == -1.5);
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 0.0);
    CHECK(p[4] == 0.0);
    CHECK(p[5] == 0.0);

    // tau = 0 is the identity.
    CHECK(prox_l1(h, 0.0) == h);

    Image img(centered_grid(4));
    img.values[5] = -3.0;
    img.values[10] = 0.2;
    Image pi = prox_l1(img, 0.5);
    CHECK(pi.grid.nx == 4);
    CHECK(pi.values[5] == -2.5);
    CHECK(pi.values[10] == 0.0);
}

TEST_CASE("soft thresholding agrees with a brute-force minimizer") {
    for (double tau : {0.3, 1.0, 2.7}) {
        for (double h : {-3.2, -0.9, -0.1, 0.0, 0.45, 1.7, 4.2}) {
            double expect = prox_l1_grid(h, tau);
            double got = prox_l1(std::vector<double>{h}, tau)[0];
            CHECK(std::abs(got - expect) <= 1e-4);
        }
    }
}

TEST_CASE("nonnegativity projection clamps and preserves") {
    std::vector<double> f = {-2.0, -1e-12, 0.0, 1e-12, 3.5};
    std::vector<double> p = prox_nonneg(f);
    CHECK(p[0] == 0.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 0.0);
    CHECK(p[3] == 1e-12);
    CHECK(p[4] == 3.5);

    // Brute force over the feasible half-line.
    for (double v : {-1.4, 0.3, 2.2}) {
        double best = 0.0, best_val = 0.5 * v * v;
        for (double z = 0.0; z <= 5.0; z += 1e-5) {
            double val = 0.5 * (z - v) * (z - v);
            if (val < best_val) {
                best_val = val;
                best = z;
            }
        }
        CHECK(std::abs(prox_nonneg(std::vector<double>{v})[0] - best) <= 1e-4);
    }
}

TEST_CASE("joint gradient matches directional finite differences") {
    ImageGrid grid = centered_grid(16);
    SensorArray s = make_sensors(8, 12.0);
    TimeAxis t = make_time_axis(32, 24.0);
    CSOperator A(bernoulli_matrix(3, 8, 4), grid, s, t, Medium{1.0});
    const double alpha = 1e-3;

    SplitMix64 rng(31);
    Image f(grid), h(grid);
    for (double& v : f.values) v = rng.next_gaussian();
    for (double& v : h.values) v = rng.next_gaussian();
    CSData g(3, t);
    for (double& v : g.values) v = rng.next_gaussian();

    auto [gf, gh] = grad_smooth(f, h, g, A, alpha);

    for (uint64_t probe = 0; probe < 3; ++probe) {
        SplitMix64 prng(100 + probe);
        Image u(grid), v(grid);
        for (double& w : u.values) w = prng.next_gaussian();
        for (double& w : v.values) w = prng.next_gaussian();

        const double eps = 1e-4;
        Image fp = f, fm = f, hp = h, hm = h;
        for (int i = 0; i < grid.size(); ++i) {
            fp.values[i] += eps * u.values[i];
            fm.values[i] -= eps * u.values[i];
            hp.values[i] += eps * v.values[i];
            hm.values[i] -= eps * v.values[i];
        }
        // beta = 0 keeps the objective smooth (quadratic, so the central
        // difference is exact up to roundoff).
        double op = joint_objective(fp, hp, g, A, alpha, 0.0);
        double om = joint_objective(fm, hm, g, A, alpha, 0.0);
        double fd = (op - om) / (2.0 * eps);
        double an = dot(gf.values, u.values) + dot(gh.values, v.values);
        CHECK(std::abs(fd - an) <= 1e-6 * std::max(std::abs(an), 1.0));
    }
}

TEST_CASE("joint iteration never increases the objective") {
    ImageGrid grid = centered_grid(32);
    SensorArray s = make_sensors(24, 24.0);
    TimeAxis t = make_time_axis(97, 48.0);
    CSOperator A(subsampling_matrix(8, 24, 3, 2.0), grid, s, t, Medium{1.0});

    Image f = vessel_phantom(grid, 300);
    CSData g = A.forward(f);

    JointParams params;
    params.iters = 25;
    JointResult res = joint_solve(g, A, params);
    REQUIRE(res.objective.size() == 26);
    CHECK(res.mu > 0.0);
    for (size_t i = 1; i < res.objective.size(); ++i)
        CHECK(res.objective[i] <= res.objective[i - 1] + 1e-12 * std::abs(res.objective[i - 1]));
    CHECK(res.data_residual_f.size() == 26);
    CHECK(res.data_residual_h.size() == 26);
    CHECK(res.coupling.size() == 26);
    CHECK(res.objective.back() < res.objective.front());

    // The iterate respects the nonnegativity constraint exactly.
    for (double v : res.f.values) CHECK(v >= 0.0);
}

TEST_CASE("a reckless step size raises a divergence error that names it") {
    ImageGrid grid = centered_grid(16);
    SensorArray s = make_sensors(8, 12.0);
    TimeAxis t = make_time_axis(32, 24.0);
    CSOperator A(bernoulli_matrix(3, 8, 4), grid, s, t, Medium{1.0});
    Image f = vessel_phantom(grid, 5);
    CSData g = A.forward(f);

    JointParams params;
    params.mu = 1e6;
    params.iters = 50;
    bool thrown = false;
    try {
        joint_solve(g, A, params);
    } catch (const DivergenceError& e) {
        thrown = true;
        CHECK(e.mu == 1e6);
    }
    CHECK(thrown);
}

TEST_CASE("soft-thresholding iteration hits the orthonormal closed form") {
    const int n = 8;
    std::vector<double> entries(n * n, 0.0);
    for (int i = 0; i < n; ++i) entries[size_t(i) * n + i] = 1.0;
    DenseOp I(n, n, entries);

    std::vector<double> b = {2.0, -0.7, 0.1, -1.3, 0.0, 0.5, -0.2, 3.1};
    const double beta = 0.4;
    IstaResult res = ista_tikhonov(b, I, beta, 1.0, 5);
    for (int i = 0; i < n; ++i) {
        double expect = std::max(std::abs(b[i]) - beta, 0.0) * (b[i] > 0 ? 1.0 : -1.0);
        CHECK(res.z[i] == doctest::Approx(expect).epsilon(1e-14));
    }
    REQUIRE(res.objective.size() == 6);
    for (size_t i = 1; i < res.objective.size(); ++i)
        CHECK(res.objective[i] <= res.objective[i - 1] + 1e-14);
}

TEST_CASE("sparsify-then-integrate pipeline recovers a smooth source") {
    ImageGrid grid = centered_grid(32);
    SensorArray s = make_sensors(24, 24.0);
    TimeAxis t = make_time_axis(97, 48.0);
    CSOperator A(subsampling_matrix(24, 24, 1, 1.0), grid, s, t, Medium{1.0});

    Image f = gaussian_blob(grid, 1.0, -2.0, 3.5);
    CSData g = A.forward(f);

    double nrm = A.norm_estimate();
    Image r = two_stage(g, A, 1e-4, 0.9 / (nrm * nrm), 150);

    double num = 0.0, den = 0.0;
    for (int i = 0; i < grid.size(); ++i) {
        double e = r.values[i] - f.values[i];
        num += e * e;
        den += f.values[i] * f.values[i];
    }
    CHECK(std::sqrt(num / den) <= 0.35);
    for (double v : r.values) CHECK(v >= 0.0);
}

TEST_CASE("landweber converges to the least-squares solution") {
    SplitMix64 rng(55);
    const int m = 10, n = 4;
    std::vector<double> entries(m * n);
    for (double& e : entries) e = rng.next_gaussian();
    DenseOp A(m, n, entries);
    std::vector<double> b(m);
    for (double& v : b) v = rng.next_gaussian();

    double nrm = op_norm(A, 300, 9);
    std::vector<double> x0(n, 0.0);
    std::vector<double> x = landweber(A, b, x0, 4000, 0.9 / (nrm * nrm), nrm);

    Eigen::MatrixXd E(m, n);
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) E(i, j) = entries[size_t(i) * n + j];
    Eigen::VectorXd rhs(m);
    for (int i = 0; i < m; ++i) rhs[i] = b[i];
    Eigen::VectorXd ls = (E.transpose() * E).ldlt().solve(E.transpose() * rhs);
    for (int j = 0; j < n; ++j) CHECK(x[j] == doctest::Approx(ls[j]).epsilon(1e-8));
}

TEST_CASE("landweber validates its step against the norm estimate") {
    DenseOp A(2, 2, {1.0, 0.0, 0.0, 1.0});
    std::vector<double> b = {1.0, 1.0}, x0 = {0.0, 0.0};
    CHECK_THROWS_AS(landweber(A, b, x0, 5, 0.0, 1.0), StepSizeError);
    CHECK_THROWS_AS(landweber(A, b, x0, 5, -0.5, 1.0), StepSizeError);
    CHECK_THROWS_AS(landweber(A, b, x0, 5, 1.5, 1.0), StepSizeError);
    bool thrown = false;
    try {
        landweber(A, b, x0, 5, 2.0, 1.0);
    } catch (const StepSizeError& e) {
        thrown = true;
        CHECK(e.norm_estimate == 1.0);
    }
    CHECK(thrown);
    CHECK_NOTHROW(landweber(A, b, x0, 5, 0.9, 1.0));
}
