#include "cspat/solver.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cspat/diffops.hpp"
#include "cspat/errors.hpp"

namespace cspat {

std::vector<double> prox_l1(const std::vector<double>& h, double tau) {
    if (tau < 0.0) throw std::invalid_argument("prox_l1: threshold must be >= 0");
    std::vector<double> out(h.size());
    for (size_t i = 0; i < h.size(); ++i) {
        double v = h[i];
        double m = std::abs(v) - tau;
        out[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
    }
    return out;
}

Image prox_l1(const Image& h, double tau) { return Image(h.grid, prox_l1(h.values, tau)); }

std::vector<double> prox_nonneg(const std::vector<double>& f) {
    std::vector<double> out(f.size());
    for (size_t i = 0; i < f.size(); ++i) out[i] = f[i] > 0.0 ? f[i] : 0.0;
    return out;
}

Image prox_nonneg(const Image& f) { return Image(f.grid, prox_nonneg(f.values)); }

namespace {

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

struct JointTerms {
    double data_f, data_h, coupling, objective;
};

// Shared evaluation of the joint residuals at (f, h).
JointTerms joint_terms(const Image& f, const Image& h, const CSData& g, const CSData& dg,
                       const CSOperator& A, double alpha, double beta, CSData& af, CSData& ah,
                       Image& coup) {
    const double ic2 = 1.0 / (A.medium().sound_speed * A.medium().sound_speed);
    af = A.forward(f);
    ah = A.forward(h);
    Image lf = laplacian(f);
    coup = lf;
    for (size_t i = 0; i < coup.values.size(); ++i) coup.values[i] -= ic2 * h.values[i];

    double df = 0.0, dh = 0.0, cp = 0.0;
    for (size_t i = 0; i < af.values.size(); ++i) {
        af.values[i] -= g.values[i];
        df += af.values[i] * af.values[i];
        ah.values[i] -= dg.values[i];
        dh += ah.values[i] * ah.values[i];
    }
    for (double v : coup.values) cp += v * v;
    JointTerms t;
    t.data_f = std::sqrt(df);
    t.data_h = std::sqrt(dh);
    t.coupling = std::sqrt(cp);
    t.objective = 0.5 * df + 0.5 * dh + 0.5 * alpha * cp + beta * l1_norm(h.values);
    return t;
}

}  // namespace

std::pair<Image, Image> grad_smooth(const Image& f, const Image& h, const CSData& g,
                                    const CSOperator& A, double alpha) {
    check_image_shape(f, "grad_smooth");
    check_image_shape(h, "grad_smooth");
    const double c = A.medium().sound_speed;
    const double ic2 = 1.0 / (c * c);

    CSData rf = A.forward(f);
    for (size_t i = 0; i < rf.values.size(); ++i) rf.values[i] -= g.values[i];
    Image gf = A.transpose(rf);

    CSData dg = dtt(g);
    CSData rh = A.forward(h);
    for (size_t i = 0; i < rh.values.size(); ++i) rh.values[i] -= dg.values[i];
    Image gh = A.transpose(rh);

    Image coup = laplacian(f);
    for (size_t i = 0; i < coup.values.size(); ++i) coup.values[i] -= ic2 * h.values[i];
    Image lcoup = laplacian(coup);

    for (size_t i = 0; i < gf.values.size(); ++i) {
        gf.values[i] += alpha * lcoup.values[i];
        gh.values[i] -= alpha * ic2 * coup.values[i];
    }
    return {std::move(gf), std::move(gh)};
}

double joint_objective(const Image& f, const Image& h, const CSData& g, const CSOperator& A,
                       double alpha, double beta) {
    CSData dg = dtt(g);
    CSData af, ah;
    Image coup;
    return joint_terms(f, h, g, dg, A, alpha, beta, af, ah, coup).objective;
}

double lip_estimate(const CSOperator& A, double alpha) {
    const double c = A.medium().sound_speed;
    const double h = A.grid().dx;
    const double anorm = A.norm_estimate();
    // Hessian = blkdiag(A^T A, A^T A) + alpha K^T K with K = [laplacian, -1/c^2];
    // ||laplacian|| < 8/h^2.  Small inflation keeps the power-iteration
    // underestimate on the safe side.
    const double l2 = 64.0 / (h * h * h * h);
    return 1.02 * anorm * anorm + alpha * (l2 + 1.0 / (c * c * c * c));
}

JointResult joint_solve(const CSData& g, const CSOperator& A, const JointParams& params) {
    check_cs_shape(g, "joint_solve");
    if (params.iters < 0) throw std::invalid_argument("joint_solve: negative iteration count");
    if (params.alpha < 0.0 || params.beta < 0.0)
        throw std::invalid_argument("joint_solve: alpha and beta must be >= 0");

    const double mu = params.mu > 0.0 ? params.mu : 0.9 / lip_estimate(A, params.alpha);
    const double c = A.medium().sound_speed;
    const double ic2 = 1.0 / (c * c);

    JointResult res;
    res.mu = mu;
    res.f = Image(A.grid());
    res.h = Image(A.grid());

    CSData dg = dtt(g);
    CSData af, ah;
    Image coup;

    JointTerms t = joint_terms(res.f, res.h, g, dg, A, params.alpha, params.beta, af, ah, coup);
    res.objective.push_back(t.objective);
    res.data_residual_f.push_back(t.data_f);
    res.data_residual_h.push_back(t.data_h);
    res.coupling.push_back(t.coupling);
    const double blowup = 10.0 * std::max(t.objective, 1e-300);

    for (int it = 0; it < params.iters; ++it) {
        // af/ah currently hold the residuals at (f, h); reuse them for the
        // gradients so each iteration costs two forward and two transpose
        // applications.
        Image gf = A.transpose(af);
        Image gh = A.transpose(ah);
        Image lcoup = laplacian(coup);
        for (size_t i = 0; i < gf.values.size(); ++i) {
            gf.values[i] += params.alpha * lcoup.values[i];
            gh.values[i] -= params.alpha * ic2 * coup.values[i];
        }

        for (size_t i = 0; i < res.f.values.size(); ++i) {
            double fv = res.f.values[i] - mu * gf.values[i];
            res.f.values[i] = fv > 0.0 ? fv : 0.0;
        }
        const double thr = mu * params.beta;
        for (size_t i = 0; i < res.h.values.size(); ++i) {
            double hv = res.h.values[i] - mu * gh.values[i];
            double m = std::abs(hv) - thr;
            res.h.values[i] = m > 0.0 ? (hv > 0.0 ? m : -m) : 0.0;
        }

        t = joint_terms(res.f, res.h, g, dg, A, params.alpha, params.beta, af, ah, coup);
        res.objective.push_back(t.objective);
        res.data_residual_f.push_back(t.data_f);
        res.data_residual_h.push_back(t.data_h);
        res.coupling.push_back(t.coupling);
        if (!std::isfinite(t.objective) || t.objective > blowup)
            throw DivergenceError("joint_solve: objective exceeded 10x its initial value with "
                                  "step mu = " +
                                      std::to_string(mu),
                                  mu);
    }
    return res;
}

IstaResult ista_tikhonov(const std::vector<double>& b, const LinearOp& A, double beta, double mu,
                         int iters) {
    if (int(b.size()) != A.range_size())
        throw ShapeError("ista_tikhonov: data length does not match operator range");
    if (beta < 0.0 || mu <= 0.0)
        throw std::invalid_argument("ista_tikhonov: beta must be >= 0 and mu > 0");

    const int n = A.domain_size();
    IstaResult res;
    res.z.assign(n, 0.0);
    std::vector<double> az(A.range_size()), grad(n);

    auto objective = [&](const std::vector<double>& z) {
        A.apply(z, az);
        double s = 0.0;
        for (size_t i = 0; i < az.size(); ++i) {
            double r = az[i] - b[i];
            s += r * r;
        }
        return 0.5 * s + beta * l1_norm(z);
    };

    res.objective.push_back(objective(res.z));
    const double blowup = 10.0 * std::max(res.objective.front(), 1e-300);
    for (int it = 0; it < iters; ++it) {
        for (size_t i = 0; i < az.size(); ++i) az[i] -= b[i];
        A.apply_transpose(az, grad);
        const double thr = mu * beta;
        for (int i = 0; i < n; ++i) {
            double v = res.z[i] - mu * grad[i];
            double m = std::abs(v) - thr;
            res.z[i] = m > 0.0 ? (v > 0.0 ? m : -m) : 0.0;
        }
        res.objective.push_back(objective(res.z));
        if (!std::isfinite(res.objective.back()) || res.objective.back() > blowup)
            throw DivergenceError(
                "ista_tikhonov: objective exceeded 10x its initial value with step mu = " +
                    std::to_string(mu),
                mu);
    }
    return res;
}

Image two_stage(const CSData& g, const CSOperator& A, double beta, double mu, int iters) {
    check_cs_shape(g, "two_stage");
    CSData dg = dtt(g);
    double step = mu > 0.0 ? mu : 0.9 / (1.02 * A.norm_estimate() * A.norm_estimate());
    IstaResult stage1 = ista_tikhonov(dg.values, A, beta, step, iters);

    const double c = A.medium().sound_speed;
    Image h(A.grid(), std::move(stage1.z));
    for (double& v : h.values) v /= (c * c);
    Image f = solve_poisson(h);
    return prox_nonneg(f);
}

std::vector<double> landweber(const LinearOp& A, const std::vector<double>& b,
                              const std::vector<double>& x0, int steps, double s,
                              double norm_estimate) {
    if (int(b.size()) != A.range_size() || int(x0.size()) != A.domain_size())
        throw ShapeError("landweber: shape mismatch");
    if (!(s > 0.0) || s >= 1.0 / (norm_estimate * norm_estimate))
        throw StepSizeError("landweber: step must satisfy 0 < s < 1/||A||^2 (estimate " +
                                std::to_string(norm_estimate) + ")",
                            norm_estimate);

    std::vector<double> x = x0, ax(A.range_size()), grad(A.domain_size());
    for (int k = 0; k < steps; ++k) {
        A.apply(x, ax);
        for (size_t i = 0; i < ax.size(); ++i) ax[i] -= b[i];
        A.apply_transpose(ax, grad);
        for (size_t i = 0; i < x.size(); ++i) x[i] -= s * grad[i];
    }
    return x;
}

}  // namespace cspat
