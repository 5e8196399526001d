#include "cspat/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cspat/config.hpp"
#include "cspat/errors.hpp"
#include "cspat/io.hpp"
#include "cspat/metrics.hpp"
#include "cspat/pipeline.hpp"
#include "cspat/solver.hpp"

namespace cspat {

namespace {

ExperimentConfig config_or_default(const std::string& path) {
    return path.empty() ? ExperimentConfig{} : load_config(path);
}

std::string stem_of(const std::string& path) {
    return std::filesystem::path(path).stem().string();
}

int run(int argc, const char* const* argv) {
    CLI::App app{"compressed-sensing photoacoustic reconstruction toolkit"};
    app.require_subcommand(1);

    std::string config_path, kind = "disc", out_path, in_path, phantom_path, method,
                weights_path, truth_path, csv_path, dataset_dir;
    uint64_t seed = 1;
    std::vector<std::string> recon_paths;

    auto* cmd_phantom = app.add_subcommand("phantom", "write a synthetic source image");
    cmd_phantom->add_option("--kind", kind, "disc | vessel | shepp")->required();
    cmd_phantom->add_option("--out", out_path, "output tensor file")->required();
    cmd_phantom->add_option("--config", config_path, "config JSON (grid geometry)");
    cmd_phantom->add_option("--seed", seed, "vessel seed");

    auto* cmd_sim = app.add_subcommand("simulate", "forward-simulate full sensor traces");
    cmd_sim->add_option("--config", config_path)->required();
    cmd_sim->add_option("--phantom", phantom_path, "source tensor file")->required();
    cmd_sim->add_option("--out", out_path, "output traces tensor")->required();

    auto* cmd_measure = app.add_subcommand("measure", "apply the measurement matrix");
    cmd_measure->add_option("--config", config_path)->required();
    cmd_measure->add_option("--in", in_path, "full traces tensor")->required();
    cmd_measure->add_option("--out", out_path, "compressed data tensor")->required();

    auto* cmd_recon = app.add_subcommand("recon", "reconstruct from compressed data");
    cmd_recon->add_option("--method", method, "fbp | l1-joint | l1-twostage | net-res | net-null")
        ->required();
    cmd_recon->add_option("--config", config_path)->required();
    cmd_recon->add_option("--in", in_path, "compressed data tensor")->required();
    cmd_recon->add_option("--out", out_path, "output image tensor")->required();
    cmd_recon->add_option("--weights", weights_path, "trained network weights");

    auto* cmd_train = app.add_subcommand("train", "train the residual network");
    cmd_train->add_option("--config", config_path)->required();
    cmd_train->add_option("--dataset", dataset_dir,
                          "directory of ground-truth .patt images (optional)");
    cmd_train->add_option("--out", out_path, "output weights file")->required();

    auto* cmd_eval = app.add_subcommand("eval", "score reconstructions against a truth image");
    cmd_eval->add_option("--truth", truth_path)->required();
    cmd_eval->add_option("--recon", recon_paths)->required()->expected(-1);
    cmd_eval->add_option("--csv", csv_path)->required();

    auto* cmd_bench = app.add_subcommand("bench", "full comparison pipeline");
    cmd_bench->add_option("--config", config_path);

    auto* cmd_pgm = app.add_subcommand("export-pgm", "write an 8-bit PGM preview");
    cmd_pgm->add_option("--in", in_path, "image tensor")->required();
    cmd_pgm->add_option("--out", out_path, "output PGM")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    if (cmd_phantom->parsed()) {
        ExperimentConfig cfg = config_or_default(config_path);
        std::string spec = kind == "vessel" ? "vessel:" + std::to_string(seed) : kind;
        save_image(out_path, make_phantom(spec, cfg.grid()));
        return 0;
    }

    if (cmd_sim->parsed()) {
        ExperimentConfig cfg = load_config(config_path);
        Image f = tensor_to_image(load_tensor(phantom_path), cfg.grid());
        SensorData p = cfg.wave().forward(f);
        save_sensor_data(out_path, p);
        return 0;
    }

    if (cmd_measure->parsed()) {
        ExperimentConfig cfg = load_config(config_path);
        TensorData t = load_tensor(in_path);
        SensorArray sensors = cfg.sensor_array();
        if (t.dims.size() != 2 || int(t.dims[0]) != sensors.count() ||
            int(t.dims[1]) != cfg.geometry.time.samples)
            throw ShapeError("measure: traces tensor does not match the configured geometry");
        SensorData p(sensors, cfg.time_axis());
        p.values = t.data;
        CSData g = apply_matrix(cfg.matrix(), p);
        if (cfg.measurement.noise.sigma > 0.0)
            g = add_noise(g, cfg.measurement.noise.sigma, cfg.measurement.noise.seed);
        save_cs_data(out_path, g);
        return 0;
    }

    if (cmd_recon->parsed()) {
        ExperimentConfig cfg = load_config(config_path);
        TensorData t = load_tensor(in_path);
        if (t.dims.size() != 2 || int(t.dims[0]) != cfg.measurement.rows ||
            int(t.dims[1]) != cfg.geometry.time.samples)
            throw ShapeError("recon: data tensor does not match the configured measurement");
        CSData g(cfg.measurement.rows, cfg.time_axis());
        g.values = t.data;
        CSOperator A(cfg.matrix(), cfg.grid(), cfg.sensor_array(), cfg.time_axis(),
                     Medium{cfg.geometry.sound_speed}, cfg.geometry.quadrature);
        save_image(out_path, run_recon(method, cfg, A, g, weights_path));
        return 0;
    }

    if (cmd_train->parsed()) {
        ExperimentConfig cfg = load_config(config_path);
        CSOperator A(cfg.matrix(), cfg.grid(), cfg.sensor_array(), cfg.time_axis(),
                     Medium{cfg.geometry.sound_speed}, cfg.geometry.quadrature);
        NetParams params;
        if (dataset_dir.empty()) {
            params = train_for_operator(A, cfg.network, &std::cerr);
        } else {
            std::vector<std::string> files;
            for (const auto& e : std::filesystem::directory_iterator(dataset_dir))
                if (e.path().extension() == ".patt") files.push_back(e.path().string());
            std::sort(files.begin(), files.end());
            if (files.empty())
                throw ConfigError("dataset", "no .patt images in " + dataset_dir);
            std::vector<std::pair<Image, Image>> pairs;
            for (const std::string& f : files) {
                Image truth = tensor_to_image(load_tensor(f), cfg.grid());
                CSData g = A.forward(truth);
                pairs.emplace_back(A.backproject(g), std::move(truth));
            }
            TrainResult r = train(pairs, cfg.network.arch, cfg.network.train);
            std::cerr << "trained on " << pairs.size() << " images; loss "
                      << r.loss_trace.front() << " -> " << r.loss_trace.back() << "\n";
            params = std::move(r.params);
        }
        save_weights(out_path, params, cfg.network.train.seed);
        return 0;
    }

    if (cmd_eval->parsed()) {
        TensorData tt = load_tensor(truth_path);
        if (tt.dims.size() != 2) throw ShapeError("eval: truth tensor must be rank 2");
        ImageGrid grid{int(tt.dims[1]), int(tt.dims[0]), 0.0, 0.0, 1.0, 1.0};
        Image truth(grid, tt.data);
        std::vector<BenchRow> rows;
        for (const std::string& rp : recon_paths) {
            Image recon = tensor_to_image(load_tensor(rp), grid);
            MetricReport m = evaluate(truth, recon);
            BenchRow row;
            row.phantom = stem_of(truth_path);
            row.matrix = "-";
            row.method = stem_of(rp);
            row.mse = m.mse;
            row.psnr = m.psnr;
            row.ssim = m.ssim;
            rows.push_back(row);
        }
        write_file(csv_path, format_csv(rows));
        return 0;
    }

    if (cmd_bench->parsed()) {
        ExperimentConfig cfg = config_or_default(config_path);
        run_bench(cfg, std::cerr);
        std::cout << cfg.evaluation.csv << "\n";
        return 0;
    }

    if (cmd_pgm->parsed()) {
        TensorData t = load_tensor(in_path);
        if (t.dims.size() != 2) throw ShapeError("export-pgm: tensor must be rank 2");
        ImageGrid grid{int(t.dims[1]), int(t.dims[0]), 0.0, 0.0, 1.0, 1.0};
        export_pgm(out_path, Image(grid, t.data));
        return 0;
    }

    return 1;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
    try {
        return run(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "config error at " << e.what() << "\n";
        return 2;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << " (step " << e.mu << ")\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace cspat
