#include "cspat/net.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cspat/errors.hpp"
#include "cspat/rng.hpp"
#include "cspat/solver.hpp"

namespace cspat {

namespace nn {

void conv2d(const std::vector<double>& in, int cin, int h, int w, const std::vector<double>& wt,
            const std::vector<double>& bias, int cout, int k, std::vector<double>& out) {
    const int off = k / 2;
    out.assign(size_t(cout) * h * w, 0.0);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int co = 0; co < cout; ++co) {
        double* oc = out.data() + size_t(co) * h * w;
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                double s = bias[co];
                for (int ci = 0; ci < cin; ++ci) {
                    const double* ic = in.data() + size_t(ci) * h * w;
                    const double* wc = wt.data() + (size_t(co) * cin + ci) * k * k;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = y + ky - off;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = x + kx - off;
                            if (ix < 0 || ix >= w) continue;
                            s += wc[ky * k + kx] * ic[iy * w + ix];
                        }
                    }
                }
                oc[y * w + x] = s;
            }
        }
    }
}

void conv2d_backward(const std::vector<double>& in, int cin, int h, int w,
                     const std::vector<double>& wt, int cout, int k,
                     const std::vector<double>& dout, std::vector<double>& din,
                     std::vector<double>& dwt, std::vector<double>& dbias) {
    const int off = k / 2;
    din.assign(size_t(cin) * h * w, 0.0);
    dwt.assign(size_t(cout) * cin * k * k, 0.0);
    dbias.assign(cout, 0.0);

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int co = 0; co < cout; ++co) {
        const double* dc = dout.data() + size_t(co) * h * w;
        double db = 0.0;
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) db += dc[y * w + x];
        dbias[co] = db;
        for (int ci = 0; ci < cin; ++ci) {
            const double* ic = in.data() + size_t(ci) * h * w;
            double* wg = dwt.data() + (size_t(co) * cin + ci) * k * k;
            for (int ky = 0; ky < k; ++ky) {
                for (int kx = 0; kx < k; ++kx) {
                    double s = 0.0;
                    for (int y = 0; y < h; ++y) {
                        const int iy = y + ky - off;
                        if (iy < 0 || iy >= h) continue;
                        for (int x = 0; x < w; ++x) {
                            const int ix = x + kx - off;
                            if (ix < 0 || ix >= w) continue;
                            s += dc[y * w + x] * ic[iy * w + ix];
                        }
                    }
                    wg[ky * k + kx] = s;
                }
            }
        }
    }

#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (int ci = 0; ci < cin; ++ci) {
        double* dic = din.data() + size_t(ci) * h * w;
        for (int co = 0; co < cout; ++co) {
            const double* dc = dout.data() + size_t(co) * h * w;
            const double* wc = wt.data() + (size_t(co) * cin + ci) * k * k;
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    const double g = dc[y * w + x];
                    if (g == 0.0) continue;
                    for (int ky = 0; ky < k; ++ky) {
                        const int iy = y + ky - off;
                        if (iy < 0 || iy >= h) continue;
                        for (int kx = 0; kx < k; ++kx) {
                            const int ix = x + kx - off;
                            if (ix < 0 || ix >= w) continue;
                            dic[iy * w + ix] += wc[ky * k + kx] * g;
                        }
                    }
                }
            }
        }
    }
}

void leaky_relu(std::vector<double>& v, double slope) {
    for (double& x : v)
        if (x < 0.0) x *= slope;
}

void avgpool2(const std::vector<double>& in, int c, int h, int w, std::vector<double>& out) {
    const int h2 = h / 2, w2 = w / 2;
    out.assign(size_t(c) * h2 * w2, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        const double* ic = in.data() + size_t(ci) * h * w;
        double* oc = out.data() + size_t(ci) * h2 * w2;
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x)
                oc[y * w2 + x] = 0.25 * (ic[(2 * y) * w + 2 * x] + ic[(2 * y) * w + 2 * x + 1] +
                                         ic[(2 * y + 1) * w + 2 * x] +
                                         ic[(2 * y + 1) * w + 2 * x + 1]);
    }
}

void upsample_nn(const std::vector<double>& in, int c, int h, int w, std::vector<double>& out) {
    const int h2 = 2 * h, w2 = 2 * w;
    out.assign(size_t(c) * h2 * w2, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        const double* ic = in.data() + size_t(ci) * h * w;
        double* oc = out.data() + size_t(ci) * h2 * w2;
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x) oc[y * w2 + x] = ic[(y / 2) * w + (x / 2)];
    }
}

namespace {

void avgpool2_backward(const std::vector<double>& dout, int c, int h, int w,
                       std::vector<double>& din) {
    // h, w are the *input* sides.
    const int h2 = h / 2, w2 = w / 2;
    din.assign(size_t(c) * h * w, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        const double* dc = dout.data() + size_t(ci) * h2 * w2;
        double* ic = din.data() + size_t(ci) * h * w;
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x) {
                const double g = 0.25 * dc[y * w2 + x];
                ic[(2 * y) * w + 2 * x] += g;
                ic[(2 * y) * w + 2 * x + 1] += g;
                ic[(2 * y + 1) * w + 2 * x] += g;
                ic[(2 * y + 1) * w + 2 * x + 1] += g;
            }
    }
}

void upsample_nn_backward(const std::vector<double>& dout, int c, int h, int w,
                          std::vector<double>& din) {
    // h, w are the *input* (coarse) sides.
    const int h2 = 2 * h, w2 = 2 * w;
    din.assign(size_t(c) * h * w, 0.0);
    for (int ci = 0; ci < c; ++ci) {
        const double* dc = dout.data() + size_t(ci) * h2 * w2;
        double* ic = din.data() + size_t(ci) * h * w;
        for (int y = 0; y < h2; ++y)
            for (int x = 0; x < w2; ++x) ic[(y / 2) * w + (x / 2)] += dc[y * w2 + x];
    }
}

// Gradient mask of the leaky activation, taken from the activation output
// (sign-preserving for positive slope).
void mask_backward(const std::vector<double>& act, double slope, std::vector<double>& grad) {
    for (size_t i = 0; i < act.size(); ++i)
        if (act[i] <= 0.0) grad[i] *= slope;
}

}  // namespace
}  // namespace nn

const Tensor& NetParams::find(const std::string& name) const {
    for (const Tensor& t : tensors)
        if (t.name == name) return t;
    throw std::invalid_argument("NetParams: no tensor named " + name);
}

size_t NetParams::total_parameters() const {
    size_t n = 0;
    for (const Tensor& t : tensors) n += t.count();
    return n;
}

namespace {

int channels_at(const NetArch& a, int level) { return a.base_channels << level; }

void push_conv(NetParams& p, SplitMix64& rng, const std::string& name, int cout, int cin, int k,
               bool zero) {
    Tensor w;
    w.name = name + ".weight";
    w.shape = {cout, cin, k, k};
    w.data.assign(size_t(cout) * cin * k * k, 0.0);
    if (!zero) {
        const double bound = 1.0 / std::sqrt(double(cin) * k * k);
        for (double& v : w.data) v = bound * (2.0 * rng.next_double() - 1.0);
    }
    Tensor b;
    b.name = name + ".bias";
    b.shape = {cout};
    b.data.assign(cout, 0.0);
    p.tensors.push_back(std::move(w));
    p.tensors.push_back(std::move(b));
}

void validate_arch(const NetArch& a) {
    if (a.levels < 1 || a.levels > 6) throw std::invalid_argument("NetArch: levels out of range");
    if (a.base_channels < 1) throw std::invalid_argument("NetArch: base_channels must be >= 1");
    if (a.kernel < 1 || a.kernel % 2 == 0)
        throw std::invalid_argument("NetArch: kernel must be odd");
    if (!(a.leak > 0.0) || a.leak >= 1.0)
        throw std::invalid_argument("NetArch: leak must be in (0, 1)");
}

}  // namespace

NetParams init_params(const NetArch& arch, uint64_t seed, bool zero_final) {
    validate_arch(arch);
    NetParams p;
    p.arch = arch;
    SplitMix64 rng(seed);
    const int L = arch.levels, K = arch.kernel;
    for (int i = 0; i < L; ++i) {
        const int cin = i == 0 ? 1 : channels_at(arch, i - 1);
        const int c = channels_at(arch, i);
        push_conv(p, rng, "enc" + std::to_string(i) + ".conv1", c, cin, K, false);
        push_conv(p, rng, "enc" + std::to_string(i) + ".conv2", c, c, K, false);
    }
    push_conv(p, rng, "bottom.conv1", channels_at(arch, L), channels_at(arch, L - 1), K, false);
    push_conv(p, rng, "bottom.conv2", channels_at(arch, L), channels_at(arch, L), K, false);
    for (int i = L - 1; i >= 0; --i) {
        const int c = channels_at(arch, i);
        push_conv(p, rng, "dec" + std::to_string(i) + ".up", c, channels_at(arch, i + 1), K, false);
        push_conv(p, rng, "dec" + std::to_string(i) + ".merge", c, 2 * c, K, false);
    }
    push_conv(p, rng, "final", 1, channels_at(arch, 0), 1, zero_final);
    if (!zero_final) {
        // push_conv zeroes biases; randomize the final bias too so gradient
        // probes exercise it.
        p.tensors.back().data[0] = 0.1 * (2.0 * rng.next_double() - 1.0);
    }
    return p;
}

namespace {

struct Cache {
    int h0 = 0, w0 = 0;
    std::vector<std::vector<double>> enc_in, enc_a1, enc_a2, pooled;
    std::vector<double> bot_a1, bot_a2;
    std::vector<std::vector<double>> dec_up_in, dec_up_act, dec_cat, dec_out;
    std::vector<double> out;
};

const Tensor& tw(const NetParams& p, const std::string& n) { return p.find(n + ".weight"); }
const Tensor& tb(const NetParams& p, const std::string& n) { return p.find(n + ".bias"); }

void forward_internal(const std::vector<double>& x, int h, int w, const NetParams& p, Cache& c) {
    const NetArch& a = p.arch;
    const int L = a.levels, K = a.kernel;
    c.h0 = h;
    c.w0 = w;
    c.enc_in.assign(L, {});
    c.enc_a1.assign(L, {});
    c.enc_a2.assign(L, {});
    c.pooled.assign(L, {});
    c.dec_up_in.assign(L, {});
    c.dec_up_act.assign(L, {});
    c.dec_cat.assign(L, {});
    c.dec_out.assign(L, {});

    std::vector<double> cur = x;
    int ch = 1, hh = h, ww = w;
    for (int i = 0; i < L; ++i) {
        c.enc_in[i] = cur;
        const int co = channels_at(a, i);
        std::string n = "enc" + std::to_string(i);
        nn::conv2d(c.enc_in[i], ch, hh, ww, tw(p, n + ".conv1").data, tb(p, n + ".conv1").data,
                   co, K, c.enc_a1[i]);
        nn::leaky_relu(c.enc_a1[i], a.leak);
        nn::conv2d(c.enc_a1[i], co, hh, ww, tw(p, n + ".conv2").data, tb(p, n + ".conv2").data,
                   co, K, c.enc_a2[i]);
        nn::leaky_relu(c.enc_a2[i], a.leak);
        nn::avgpool2(c.enc_a2[i], co, hh, ww, c.pooled[i]);
        cur = c.pooled[i];
        ch = co;
        hh /= 2;
        ww /= 2;
    }

    const int cb = channels_at(a, L);
    std::vector<double> tmp;
    nn::conv2d(cur, ch, hh, ww, tw(p, "bottom.conv1").data, tb(p, "bottom.conv1").data, cb, K,
               c.bot_a1);
    nn::leaky_relu(c.bot_a1, a.leak);
    nn::conv2d(c.bot_a1, cb, hh, ww, tw(p, "bottom.conv2").data, tb(p, "bottom.conv2").data, cb,
               K, c.bot_a2);
    nn::leaky_relu(c.bot_a2, a.leak);

    std::vector<double> deeper = c.bot_a2;
    int dch = cb;
    for (int i = L - 1; i >= 0; --i) {
        const int co = channels_at(a, i);
        std::string n = "dec" + std::to_string(i);
        nn::upsample_nn(deeper, dch, hh, ww, c.dec_up_in[i]);
        hh *= 2;
        ww *= 2;
        nn::conv2d(c.dec_up_in[i], dch, hh, ww, tw(p, n + ".up").data, tb(p, n + ".up").data, co,
                   K, c.dec_up_act[i]);
        nn::leaky_relu(c.dec_up_act[i], a.leak);
        // concat(channel axis): decoder features first, then the skip.
        c.dec_cat[i].resize(size_t(2 * co) * hh * ww);
        std::copy(c.dec_up_act[i].begin(), c.dec_up_act[i].end(), c.dec_cat[i].begin());
        std::copy(c.enc_a2[i].begin(), c.enc_a2[i].end(),
                  c.dec_cat[i].begin() + size_t(co) * hh * ww);
        nn::conv2d(c.dec_cat[i], 2 * co, hh, ww, tw(p, n + ".merge").data, tb(p, n + ".merge").data,
                   co, K, c.dec_out[i]);
        nn::leaky_relu(c.dec_out[i], a.leak);
        deeper = c.dec_out[i];
        dch = co;
    }

    nn::conv2d(deeper, dch, h, w, tw(p, "final").data, tb(p, "final").data, 1, 1, c.out);
}

// Gradients aligned with p.tensors; returns nothing else.
void backward_internal(const NetParams& p, const Cache& c, const std::vector<double>& dout,
                       std::vector<Tensor>& grads) {
    const NetArch& a = p.arch;
    const int L = a.levels, K = a.kernel;

    grads.clear();
    grads.reserve(p.tensors.size());
    for (const Tensor& t : p.tensors) {
        Tensor g;
        g.name = t.name;
        g.shape = t.shape;
        g.data.assign(t.data.size(), 0.0);
        grads.push_back(std::move(g));
    }
    auto grad_of = [&](const std::string& name) -> Tensor& {
        for (Tensor& t : grads)
            if (t.name == name) return t;
        throw std::logic_error("backward: missing gradient slot " + name);
    };

    int hh = c.h0, ww = c.w0;
    // final 1x1
    std::vector<double> d_cur;
    {
        const std::string n = "final";
        nn::conv2d_backward(c.dec_out[0], channels_at(a, 0), hh, ww, tw(p, n).data, 1, 1, dout,
                            d_cur, grad_of(n + ".weight").data, grad_of(n + ".bias").data);
    }

    // decoder stages, shallowest first (reverse of the forward loop)
    std::vector<std::vector<double>> dskip(L);
    std::vector<double> d_deeper;
    for (int i = 0; i < L; ++i) {
        const int co = channels_at(a, i);
        const int dch = channels_at(a, i + 1);
        std::string n = "dec" + std::to_string(i);

        nn::mask_backward(c.dec_out[i], a.leak, d_cur);
        std::vector<double> dcat;
        nn::conv2d_backward(c.dec_cat[i], 2 * co, hh, ww, tw(p, n + ".merge").data, co, K, d_cur,
                            dcat, grad_of(n + ".merge.weight").data,
                            grad_of(n + ".merge.bias").data);
        std::vector<double> dup(dcat.begin(), dcat.begin() + size_t(co) * hh * ww);
        dskip[i].assign(dcat.begin() + size_t(co) * hh * ww, dcat.end());

        nn::mask_backward(c.dec_up_act[i], a.leak, dup);
        std::vector<double> dupin;
        nn::conv2d_backward(c.dec_up_in[i], dch, hh, ww, tw(p, n + ".up").data, co, K, dup, dupin,
                            grad_of(n + ".up.weight").data, grad_of(n + ".up.bias").data);
        hh /= 2;
        ww /= 2;
        nn::upsample_nn_backward(dupin, dch, hh, ww, d_deeper);
        d_cur = d_deeper;
    }

    // bottom (hh, ww are now the coarsest sides)
    {
        const int cb = channels_at(a, L);
        nn::mask_backward(c.bot_a2, a.leak, d_cur);
        std::vector<double> d1;
        nn::conv2d_backward(c.bot_a1, cb, hh, ww, tw(p, "bottom.conv2").data, cb, K, d_cur, d1,
                            grad_of("bottom.conv2.weight").data, grad_of("bottom.conv2.bias").data);
        nn::mask_backward(c.bot_a1, a.leak, d1);
        nn::conv2d_backward(c.pooled[L - 1], channels_at(a, L - 1), hh, ww,
                            tw(p, "bottom.conv1").data, cb, K, d1, d_cur,
                            grad_of("bottom.conv1.weight").data,
                            grad_of("bottom.conv1.bias").data);
    }

    // encoder stages, deepest first; d_cur holds the pooled gradient.
    for (int i = L - 1; i >= 0; --i) {
        const int co = channels_at(a, i);
        const int cin = i == 0 ? 1 : channels_at(a, i - 1);
        std::string n = "enc" + std::to_string(i);

        std::vector<double> da2;
        nn::avgpool2_backward(d_cur, co, hh * 2, ww * 2, da2);
        hh *= 2;
        ww *= 2;
        for (size_t j = 0; j < da2.size(); ++j) da2[j] += dskip[i][j];

        nn::mask_backward(c.enc_a2[i], a.leak, da2);
        std::vector<double> da1;
        nn::conv2d_backward(c.enc_a1[i], co, hh, ww, tw(p, n + ".conv2").data, co, K, da2, da1,
                            grad_of(n + ".conv2.weight").data, grad_of(n + ".conv2.bias").data);
        nn::mask_backward(c.enc_a1[i], a.leak, da1);
        nn::conv2d_backward(c.enc_in[i], cin, hh, ww, tw(p, n + ".conv1").data, co, K, da1, d_cur,
                            grad_of(n + ".conv1.weight").data, grad_of(n + ".conv1.bias").data);
    }
}

void check_net_input(const Image& x, const NetArch& a, const char* where) {
    check_image_shape(x, where);
    const int d = 1 << a.levels;
    if (x.grid.nx % d != 0 || x.grid.ny % d != 0)
        throw ShapeError(std::string(where) + ": image sides must be divisible by " +
                         std::to_string(d));
}

}  // namespace

Image unet_forward(const Image& x, const NetParams& params) {
    check_net_input(x, params.arch, "unet_forward");
    Cache c;
    forward_internal(x.values, x.grid.ny, x.grid.nx, params, c);
    return Image(x.grid, std::move(c.out));
}

TrainResult train(const std::vector<std::pair<Image, Image>>& dataset, const NetArch& arch,
                  const TrainConfig& cfg) {
    if (dataset.empty()) throw std::invalid_argument("train: empty dataset");
    if (cfg.batch != 1) throw std::invalid_argument("train: only batch size 1 is supported");
    if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
    for (const auto& [in, target] : dataset) {
        check_net_input(in, arch, "train");
        if (in.values.size() != target.values.size())
            throw ShapeError("train: input/target size mismatch");
    }

    TrainResult res;
    res.params = init_params(arch, cfg.seed);
    // Separate stream for the epoch shuffles.
    SplitMix64 shuffle_rng(cfg.seed + 1);

    std::vector<Tensor> velocity = res.params.tensors;
    for (Tensor& t : velocity) std::fill(t.data.begin(), t.data.end(), 0.0);

    const int n = int(dataset.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    Cache cache;
    std::vector<Tensor> grads;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = cfg.epochs == 1
                              ? cfg.lr_start
                              : cfg.lr_start + (cfg.lr_end - cfg.lr_start) * double(epoch) /
                                                   double(cfg.epochs - 1);
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[size_t(shuffle_rng.next_below(uint64_t(i + 1)))]);

        double epoch_loss = 0.0;
        for (int idx : order) {
            const Image& x = dataset[idx].first;
            const Image& target = dataset[idx].second;
            forward_internal(x.values, x.grid.ny, x.grid.nx, res.params, cache);

            const size_t npix = x.values.size();
            std::vector<double> dout(npix);
            double loss = 0.0;
            for (size_t j = 0; j < npix; ++j) {
                double r = x.values[j] + cache.out[j] - target.values[j];
                loss += std::abs(r);
                dout[j] = r > 0.0 ? 1.0 : (r < 0.0 ? -1.0 : 0.0);
            }
            loss /= double(npix);
            for (double& v : dout) v /= double(npix);
            epoch_loss += loss;

            backward_internal(res.params, cache, dout, grads);
            for (size_t t = 0; t < res.params.tensors.size(); ++t) {
                double* th = res.params.tensors[t].data.data();
                double* ve = velocity[t].data.data();
                const double* gr = grads[t].data.data();
                const size_t cnt = res.params.tensors[t].data.size();
                for (size_t j = 0; j < cnt; ++j) {
                    ve[j] = cfg.momentum * ve[j] - lr * gr[j];
                    th[j] += ve[j];
                }
            }
        }
        epoch_loss /= double(n);
        if (!std::isfinite(epoch_loss))
            throw DivergenceError("train: non-finite loss at epoch " + std::to_string(epoch), lr);
        res.loss_trace.push_back(epoch_loss);
    }
    return res;
}

Image residual_recon(const CSData& g, const CSOperator& A, const NetParams& params) {
    Image b = A.backproject(g);
    Image u = unet_forward(b, params);
    for (size_t i = 0; i < b.values.size(); ++i) b.values[i] += u.values[i];
    return b;
}

Image nullspace_recon(const CSData& g, const CSOperator& A, const NetParams& params, int steps,
                      double step) {
    Image f0 = residual_recon(g, A, params);
    const double est = A.norm_estimate();
    const double s = step > 0.0 ? step : 0.9 / (est * est);
    std::vector<double> x = landweber(A, g.values, f0.values, steps, s, est);
    return Image(f0.grid, std::move(x));
}

GradCheckReport grad_check(const NetArch& arch, uint64_t seed, int probes, double tol) {
    validate_arch(arch);
    const int side = 4 << arch.levels;  // smallest grid with margin
    ImageGrid grid{side, side, 0.0, 0.0, 1.0, 1.0};
    SplitMix64 rng(seed);

    Image x(grid);
    for (double& v : x.values) v = rng.next_double() - 0.5;
    NetParams p = init_params(arch, seed + 17, /*zero_final=*/false);

    Cache cache;
    forward_internal(x.values, side, side, p, cache);
    // Pick the target so each residual sits at least 0.5 away from the MAE
    // kink: r = out_total - target = c exactly.
    const size_t npix = x.values.size();
    std::vector<double> cshift(npix), target(npix);
    for (size_t i = 0; i < npix; ++i) {
        cshift[i] = rng.next_sign() * (0.5 + 0.5 * rng.next_double());
        target[i] = x.values[i] + cache.out[i] - cshift[i];
    }

    auto loss_at = [&](NetParams& q) {
        Cache cc;
        forward_internal(x.values, side, side, q, cc);
        double s = 0.0;
        for (size_t i = 0; i < npix; ++i)
            s += std::abs(x.values[i] + cc.out[i] - target[i]);
        return s / double(npix);
    };

    std::vector<double> dout(npix);
    for (size_t i = 0; i < npix; ++i)
        dout[i] = (cshift[i] > 0.0 ? 1.0 : -1.0) / double(npix);
    std::vector<Tensor> grads;
    backward_internal(p, cache, dout, grads);

    // With every other parameter frozen the loss is piecewise linear in the
    // probed one (activations are piecewise linear, the residual magnitudes
    // stay off their kinks by construction), so between activation kinks a
    // central difference is exact up to the roundoff of the loss sums.  Each
    // probe descends a step ladder: agreement between e and e/2 certifies
    // that no kink fell inside the stencil, and shrinking the step walks the
    // stencil off any kink that sits near the probed point.  The comparison
    // deducts the explicit roundoff budget (loss evaluations are accurate to
    // a few 1e-15, divided by the step width) and floors the relative scale,
    // since components far below 1e-7 can only be checked in absolute terms.
    const size_t total = p.total_parameters();
    GradCheckReport rep;
    int done = 0;
    for (int attempt = 0; attempt < 4 * probes && done < probes; ++attempt) {
        size_t flat = size_t(rng.next_below(total));
        size_t ti = 0;
        while (flat >= p.tensors[ti].data.size()) {
            flat -= p.tensors[ti].data.size();
            ++ti;
        }
        double saved = p.tensors[ti].data[flat];
        auto fd = [&](double e) {
            p.tensors[ti].data[flat] = saved + e;
            double lp = loss_at(p);
            p.tensors[ti].data[flat] = saved - e;
            double lm = loss_at(p);
            p.tensors[ti].data[flat] = saved;
            return (lp - lm) / (2.0 * e);
        };
        const double ana = grads[ti].data[flat];
        double best_rel = -1.0;
        for (double e = 1e-3; e >= 0.9e-6; e *= 0.1) {
            const double noise = 8.0 * 3e-15 / e;
            double num = fd(e);
            double half = fd(0.5 * e);
            double scale = std::max({std::abs(num), std::abs(ana), 1e-7});
            if (std::abs(num - half) > 1e-5 * scale + 2.0 * noise) continue;  // kink inside
            double rel = std::max(0.0, std::abs(num - ana) - noise) / scale;
            if (best_rel < 0.0 || rel < best_rel) best_rel = rel;
            if (rel <= tol) break;
        }
        if (best_rel < 0.0) continue;  // kinks at every step width: redraw
        ++done;
        rep.max_rel_err = std::max(rep.max_rel_err, best_rel);
    }
    rep.probes = done;
    rep.pass = done == probes && rep.max_rel_err <= tol;
    return rep;
}

}  // namespace cspat
