#include "cspat/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

#include "cspat/errors.hpp"
#include "cspat/io.hpp"
#include "cspat/metrics.hpp"
#include "cspat/phantom.hpp"
#include "cspat/solver.hpp"

namespace cspat {

namespace {

uint64_t parse_seed(const std::string& s, const std::string& what) {
    try {
        size_t used = 0;
        unsigned long long v = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing");
        return uint64_t(v);
    } catch (const std::exception&) {
        throw ConfigError("evaluation.phantoms", "bad " + what + " in phantom spec '" + s + "'");
    }
}

}  // namespace

Image make_phantom(const std::string& spec, const ImageGrid& grid) {
    if (spec == "disc") {
        const double cx = grid.x0 + 0.5 * (grid.nx - 1) * grid.dx;
        const double cy = grid.y0 + 0.5 * (grid.ny - 1) * grid.dy;
        const double half = 0.5 * std::min((grid.nx - 1) * grid.dx, (grid.ny - 1) * grid.dy);
        return disc_phantom(grid, cx, cy, 0.5 * half);
    }
    if (spec == "shepp") return shepp_logan(grid);
    if (spec.rfind("vessel:", 0) == 0)
        return vessel_phantom(grid, parse_seed(spec.substr(7), "seed"));
    throw ConfigError("evaluation.phantoms", "unknown phantom spec '" + spec + "'");
}

std::vector<std::pair<std::string, std::string>> expand_phantom_list(
    const std::vector<std::string>& specs) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const std::string& s : specs) {
        if (s.rfind("vessel:", 0) == 0) {
            const std::string rest = s.substr(7);
            const size_t x = rest.find('x');
            if (x != std::string::npos) {
                uint64_t seed = parse_seed(rest.substr(0, x), "seed");
                uint64_t count = parse_seed(rest.substr(x + 1), "count");
                if (count == 0 || count > 10000)
                    throw ConfigError("evaluation.phantoms", "bad count in '" + s + "'");
                for (uint64_t i = 0; i < count; ++i) {
                    const std::string one = "vessel:" + std::to_string(seed + i);
                    out.emplace_back("vessel-" + std::to_string(seed + i), one);
                }
                continue;
            }
            out.emplace_back("vessel-" + rest, s);
            continue;
        }
        out.emplace_back(s, s);
    }
    return out;
}

std::string format_csv(const std::vector<BenchRow>& rows) {
    std::string out = "phantom,matrix,method,mse,psnr,ssim,seconds\n";
    char buf[160];
    for (const BenchRow& r : rows) {
        if (std::isfinite(r.psnr))
            std::snprintf(buf, sizeof buf, "%.8e,%.4f,%.6f,%.3f", r.mse, r.psnr, r.ssim,
                          r.seconds);
        else
            std::snprintf(buf, sizeof buf, "%.8e,inf,%.6f,%.3f", r.mse, r.ssim, r.seconds);
        out += r.phantom + "," + r.matrix + "," + r.method + "," + buf + "\n";
    }
    return out;
}

std::vector<std::pair<Image, Image>> make_training_set(const CSOperator& A, int count,
                                                       uint64_t seed_base) {
    std::vector<std::pair<Image, Image>> pairs;
    pairs.reserve(count);
    for (int i = 0; i < count; ++i) {
        Image truth = vessel_phantom(A.grid(), seed_base + uint64_t(i));
        CSData g = A.forward(truth);
        pairs.emplace_back(A.backproject(g), std::move(truth));
    }
    return pairs;
}

NetParams train_for_operator(const CSOperator& A, const NetworkConfig& ncfg, std::ostream* log) {
    auto pairs = make_training_set(A, ncfg.train_count, ncfg.train_seed);
    TrainResult r = train(pairs, ncfg.arch, ncfg.train);
    if (log) {
        *log << "trained on " << pairs.size() << " vessel images, " << ncfg.train.epochs
             << " epochs; loss " << r.loss_trace.front() << " -> " << r.loss_trace.back()
             << "\n";
    }
    return std::move(r.params);
}

namespace {

NetParams weights_for(const ExperimentConfig& cfg, const std::string& weights_path) {
    const std::string& path = weights_path.empty() ? cfg.network.weights : weights_path;
    if (path.empty())
        throw ConfigError("network.weights",
                          "network reconstruction needs a trained weights file");
    return load_weights(path);
}

}  // namespace

Image run_recon(const std::string& method, const ExperimentConfig& cfg, const CSOperator& A,
                const CSData& g, const std::string& weights_path) {
    if (method == "fbp") return A.backproject(g);
    if (method == "l1-joint") return joint_solve(g, A, cfg.joint).f;
    if (method == "l1-twostage")
        return two_stage(g, A, cfg.two_stage.beta, cfg.two_stage.step, cfg.two_stage.iters);
    if (method == "net-res") return residual_recon(g, A, weights_for(cfg, weights_path));
    if (method == "net-null")
        return nullspace_recon(g, A, weights_for(cfg, weights_path), cfg.network.landweber_steps,
                               cfg.network.landweber_step);
    throw ConfigError("method", "unknown reconstruction method '" + method + "'");
}

namespace {

std::string dir_of(const std::string& path) {
    const size_t slash = path.find_last_of('/');
    return slash == std::string::npos ? std::string(".") : path.substr(0, slash);
}

}  // namespace

std::vector<BenchRow> run_bench(const ExperimentConfig& cfg, std::ostream& log) {
    const ImageGrid grid = cfg.grid();
    WaveOperator W = cfg.wave();
    const auto phantoms = expand_phantom_list(cfg.evaluation.phantoms);
    const std::vector<std::string> methods = {"fbp", "l1-joint", "net-res", "net-null"};
    const std::string out_dir = dir_of(cfg.evaluation.csv);

    // Truths and their full sensor traces are shared by both matrix kinds.
    std::vector<Image> truths;
    std::vector<SensorData> traces;
    for (const auto& [name, spec] : phantoms) {
        truths.push_back(make_phantom(spec, grid));
        traces.push_back(W.forward(truths.back()));
        log << "phantom " << name << " simulated\n";
    }

    std::vector<BenchRow> rows;
    const std::vector<std::string> kinds = {"sparse", "bernoulli"};
    for (size_t mi = 0; mi < kinds.size(); ++mi) {
        MeasMatrix S = kinds[mi] == "sparse"
                           ? subsampling_matrix(cfg.measurement.rows, cfg.geometry.sensors.count,
                                                cfg.measurement.stride, cfg.measurement.weight)
                           : bernoulli_matrix(cfg.measurement.rows, cfg.geometry.sensors.count,
                                              cfg.measurement.seed);
        CSOperator A(S, grid, cfg.sensor_array(), cfg.time_axis(),
                     Medium{cfg.geometry.sound_speed}, cfg.geometry.quadrature);

        NetParams net;
        if (!cfg.network.weights.empty()) {
            net = load_weights(cfg.network.weights);
            log << kinds[mi] << ": using weights from " << cfg.network.weights << "\n";
        } else {
            log << kinds[mi] << ": training\n";
            net = train_for_operator(A, cfg.network, &log);
        }

        for (size_t pi = 0; pi < phantoms.size(); ++pi) {
            CSData g = apply_matrix(S, traces[pi]);
            if (cfg.measurement.noise.sigma > 0.0)
                g = add_noise(g, cfg.measurement.noise.sigma,
                              cfg.measurement.noise.seed + 131 * mi + pi);

            for (const std::string& method : methods) {
                const auto t0 = std::chrono::steady_clock::now();
                Image recon;
                if (method == "net-res")
                    recon = residual_recon(g, A, net);
                else if (method == "net-null")
                    recon = nullspace_recon(g, A, net, cfg.network.landweber_steps,
                                            cfg.network.landweber_step);
                else
                    recon = run_recon(method, cfg, A, g);
                const auto t1 = std::chrono::steady_clock::now();

                MetricReport m = evaluate(truths[pi], recon);
                BenchRow row;
                row.phantom = phantoms[pi].first;
                row.matrix = kinds[mi];
                row.method = method;
                row.mse = m.mse;
                row.psnr = m.psnr;
                row.ssim = m.ssim;
                row.seconds = cfg.evaluation.deterministic_timing
                                  ? 0.0
                                  : std::chrono::duration<double>(t1 - t0).count();
                rows.push_back(row);

                save_image(out_dir + "/" + row.phantom + "_" + row.matrix + "_" + row.method +
                               ".patt",
                           recon);
                log << row.phantom << " " << row.matrix << " " << row.method << ": mse "
                    << row.mse << " psnr " << row.psnr << "\n";
            }
        }
    }

    write_file(cfg.evaluation.csv, format_csv(rows));
    return rows;
}

}  // namespace cspat
