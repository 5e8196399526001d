#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <initializer_list>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cspat/cli.hpp"
#include "cspat/config.hpp"
#include "cspat/errors.hpp"
#include "cspat/io.hpp"
#include "cspat/measure.hpp"
#include "cspat/metrics.hpp"
#include "cspat/net.hpp"
#include "cspat/phantom.hpp"
#include "cspat/pipeline.hpp"
#include "cspat/wave.hpp"

using namespace cspat;

namespace {

double f32(double v) { return double(float(v)); }

std::string fresh_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d.string();
}

int run_cli(std::initializer_list<std::string> args) {
    std::vector<std::string> owned{"cspat"};
    owned.insert(owned.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    argv.reserve(owned.size());
    for (const std::string& s : owned) argv.push_back(s.c_str());
    return cli_main(int(argv.size()), argv.data());
}

std::string config_field(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.field_path;
    }
    return "";
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("tensor container byte layout") {
    const std::vector<uint32_t> dims{2, 3};
    const std::vector<double> data{1.0, 0.5, -2.0, 0.25, 3.0, -0.75};

    std::string buf;
    append_tensor(buf, dims, data);
    REQUIRE(buf.size() == 4 + 4 + 2 * 4 + 6 * 4);

    std::string expect = "PATT";
    auto u32 = [&](uint32_t v) {
        for (int i = 0; i < 4; ++i) expect.push_back(char((v >> (8 * i)) & 0xff));
    };
    u32(2);
    u32(2);
    u32(3);
    for (double v : data) {
        float f = float(v);
        uint32_t bits;
        static_assert(sizeof bits == sizeof f);
        std::memcpy(&bits, &f, 4);
        u32(bits);
    }
    CHECK(buf == expect);

    size_t pos = 0;
    TensorData t = parse_tensor(buf, pos);
    CHECK(pos == buf.size());
    CHECK(t.dims == dims);
    REQUIRE(t.data.size() == 6);
    for (size_t i = 0; i < 6; ++i) CHECK(t.data[i] == data[i]);  // values chosen f32-exact

    SUBCASE("payload size must match the dims") {
        std::string b;
        CHECK_THROWS_AS(append_tensor(b, {2, 3}, {1.0, 2.0}), ShapeError);
    }
    SUBCASE("magic is checked") {
        std::string bad = buf;
        bad[0] = 'X';
        size_t p = 0;
        CHECK_THROWS_AS(parse_tensor(bad, p), std::runtime_error);
    }
    SUBCASE("truncation is detected") {
        std::string cut = buf.substr(0, buf.size() - 3);
        size_t p = 0;
        CHECK_THROWS_AS(parse_tensor(cut, p), std::runtime_error);
    }
    SUBCASE("absurd rank is rejected") {
        std::string bad = "PATT";
        uint32_t rank = 9;
        for (int i = 0; i < 4; ++i) bad.push_back(char((rank >> (8 * i)) & 0xff));
        size_t p = 0;
        CHECK_THROWS_AS(parse_tensor(bad, p), std::runtime_error);
    }
}

TEST_CASE("tensor files round-trip through disk") {
    const std::string dir = fresh_dir("cspat_test_tensor");
    const std::string path = dir + "/t.patt";
    const std::vector<uint32_t> dims{4};
    const std::vector<double> data{0.125, -8.0, 1e-3, 7.0};

    save_tensor(path, dims, data);
    TensorData t = load_tensor(path);
    CHECK(t.dims == dims);
    for (size_t i = 0; i < data.size(); ++i) CHECK(t.data[i] == f32(data[i]));

    SUBCASE("missing files are reported") {
        CHECK_THROWS_AS(load_tensor(dir + "/absent.patt"), std::runtime_error);
    }
    SUBCASE("trailing bytes are rejected") {
        std::string buf = read_file(path) + "x";
        write_file(path, buf);
        CHECK_THROWS_AS(load_tensor(path), std::runtime_error);
    }
}

TEST_CASE("image and trace containers record their shapes") {
    const std::string dir = fresh_dir("cspat_test_shapes");
    const ImageGrid grid{3, 5, 0.0, 0.0, 1.0, 1.0};  // nx=3, ny=5
    Image img(grid);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) img.at(ix, iy) = 10.0 * iy + ix;

    save_image(dir + "/img.patt", img);
    TensorData t = load_tensor(dir + "/img.patt");
    REQUIRE(t.dims == std::vector<uint32_t>{5, 3});  // rows are y
    CHECK(t.data[0] == 0.0);
    CHECK(t.data[1] == 1.0);   // x varies fastest
    CHECK(t.data[3] == 10.0);  // next row is the next y
    CHECK(t.data[14] == 42.0);

    Image back = tensor_to_image(t, grid);
    for (size_t i = 0; i < img.values.size(); ++i) CHECK(back.values[i] == img.values[i]);

    const ImageGrid other{5, 3, 0.0, 0.0, 1.0, 1.0};
    CHECK_THROWS_AS(tensor_to_image(t, other), ShapeError);

    SensorArray sensors = make_sensors(4, 9.0, 0.0, 2.0 * M_PI);
    TimeAxis time{7, 3.0};
    SensorData p(sensors, time);
    for (size_t i = 0; i < p.values.size(); ++i) p.values[i] = double(i) * 0.5;
    save_sensor_data(dir + "/traces.patt", p);
    TensorData tp = load_tensor(dir + "/traces.patt");
    CHECK(tp.dims == std::vector<uint32_t>{4, 7});
    CHECK(tp.data[8] == 4.0);

    CSData g(2, time);
    for (size_t i = 0; i < g.values.size(); ++i) g.values[i] = -double(i);
    save_cs_data(dir + "/data.patt", g);
    TensorData tg = load_tensor(dir + "/data.patt");
    CHECK(tg.dims == std::vector<uint32_t>{2, 7});
    CHECK(tg.data[13] == -13.0);
}

TEST_CASE("weights containers preserve structure and values") {
    const std::string dir = fresh_dir("cspat_test_weights");
    const std::string path = dir + "/net.patw";
    NetArch arch{2, 4, 3, 0.05};
    NetParams p = init_params(arch, 9, /*zero_final=*/false);

    save_weights(path, p, 42, "{\"epochs\":3}");
    NetParams q = load_weights(path);

    CHECK(q.arch.levels == arch.levels);
    CHECK(q.arch.base_channels == arch.base_channels);
    CHECK(q.arch.kernel == arch.kernel);
    CHECK(q.arch.leak == arch.leak);
    REQUIRE(q.tensors.size() == p.tensors.size());
    for (size_t i = 0; i < p.tensors.size(); ++i) {
        CHECK(q.tensors[i].name == p.tensors[i].name);
        CHECK(q.tensors[i].shape == p.tensors[i].shape);
        REQUIRE(q.tensors[i].data.size() == p.tensors[i].data.size());
        // The payload is float32, so the loaded values must equal the saved
        // ones rounded once to float, bit for bit.
        for (size_t k = 0; k < p.tensors[i].data.size(); ++k)
            CHECK(q.tensors[i].data[k] == f32(p.tensors[i].data[k]));
    }

    SUBCASE("zeroed final stage survives the round trip exactly") {
        NetParams z = init_params(arch, 9, /*zero_final=*/true);
        save_weights(path, z, 1);
        NetParams zq = load_weights(path);
        const Tensor& fw = zq.find("final.weight");
        for (double v : fw.data) CHECK(v == 0.0);
    }
    SUBCASE("duplicate tensor names cannot be written") {
        NetParams d = p;
        d.tensors[1].name = d.tensors[0].name;
        CHECK_THROWS_AS(save_weights(path, d, 0), std::invalid_argument);
    }
    SUBCASE("tensors must match the declared architecture") {
        NetParams wrong = p;
        wrong.arch.base_channels = 8;
        save_weights(path, wrong, 0);
        CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    }
    SUBCASE("bad magic is rejected") {
        std::string buf = read_file(path);
        buf[0] = 'Q';
        write_file(path, buf);
        CHECK_THROWS_AS(load_weights(path), std::runtime_error);
    }
}

TEST_CASE("matrix files regenerate and verify entries") {
    const std::string dir = fresh_dir("cspat_test_matrix");

    SUBCASE("subsampling metadata and entries survive") {
        MeasMatrix m = subsampling_matrix(3, 14, 4, 2.0);
        save_matrix(dir + "/s.patw", m);
        MeasMatrix r = load_matrix(dir + "/s.patw");
        CHECK(r.kind == MatrixKind::Subsampling);
        CHECK(r.rows == 3);
        CHECK(r.cols == 14);
        CHECK(r.stride == 4);
        CHECK(r.weight == 2.0);
        REQUIRE(r.entries.size() == m.entries.size());
        // Entries are regenerated from the manifest, so they are exact
        // doubles, not float32 round trips.
        for (size_t i = 0; i < m.entries.size(); ++i) CHECK(r.entries[i] == m.entries[i]);
    }
    SUBCASE("bernoulli metadata and entries survive") {
        MeasMatrix m = bernoulli_matrix(5, 12, 77);
        save_matrix(dir + "/b.patw", m);
        MeasMatrix r = load_matrix(dir + "/b.patw");
        CHECK(r.kind == MatrixKind::Bernoulli);
        CHECK(r.rows == 5);
        CHECK(r.cols == 12);
        CHECK(r.seed == 77);
        for (size_t i = 0; i < m.entries.size(); ++i) CHECK(r.entries[i] == m.entries[i]);
    }
    SUBCASE("a flipped payload byte is detected") {
        MeasMatrix m = subsampling_matrix(3, 14, 4, 2.0);
        save_matrix(dir + "/t.patw", m);
        std::string buf = read_file(dir + "/t.patw");
        // Container header: "PATW" + u32 count + u16 name length + "entries"
        // + "PATT" + u32 rank + two u32 dims = 33 bytes before the payload.
        const size_t payload = 4 + 4 + 2 + 7 + 4 + 4 + 8;
        REQUIRE(buf.size() > payload + 4);
        buf[payload] ^= 0x01;
        write_file(dir + "/t.patw", buf);
        CHECK_THROWS_AS(load_matrix(dir + "/t.patw"), std::runtime_error);
    }
}

TEST_CASE("config text applies defaults, presets, and overrides") {
    SUBCASE("empty object keeps the desk defaults") {
        ExperimentConfig c = parse_config_text("{}");
        CHECK(c.preset == "paper-desk");
        CHECK(c.geometry.nx == 64);
        CHECK(c.geometry.ny == 64);
        CHECK(c.geometry.x0 == -31.5);
        CHECK(c.geometry.dx == 1.0);
        CHECK(c.geometry.sound_speed == 1.0);
        CHECK(c.geometry.sensors.count == 60);
        CHECK(c.geometry.sensors.radius == 48.0);
        CHECK(c.geometry.sensors.angle_end_deg == 360.0);
        CHECK(c.geometry.time.samples == 193);
        CHECK(c.geometry.time.t_final == 96.0);
        CHECK(c.measurement.kind == "subsampling");
        CHECK(c.measurement.rows == 15);
        CHECK(c.measurement.stride == 4);
        CHECK(c.measurement.weight == 2.0);
        CHECK(c.measurement.noise.sigma == 0.0);
        CHECK(c.joint.alpha == 1e-3);
        CHECK(c.joint.beta == 5e-3);
        CHECK(c.joint.mu == 0.0);
        CHECK(c.joint.iters == 70);
        CHECK(c.two_stage.iters == 150);
        CHECK(c.network.arch.levels == 2);
        CHECK(c.network.arch.base_channels == 8);
        CHECK(c.network.train.epochs == 30);
        CHECK(c.network.train.lr_start == 0.1);
        CHECK(c.network.train.lr_end == 0.02);
        CHECK(c.network.train_count == 16);
        CHECK(c.evaluation.phantoms ==
              std::vector<std::string>{"disc", "shepp", "vessel:3"});
        CHECK(c.evaluation.csv == "bench.csv");
        CHECK(c.evaluation.deterministic_timing == false);
    }
    SUBCASE("published 2-d geometry preset") {
        ExperimentConfig c = parse_config_text("{\"preset\":\"paper-2d\"}");
        CHECK(c.geometry.nx == 256);
        CHECK(c.geometry.ny == 256);
        CHECK(c.geometry.x0 == -5e-6);
        CHECK(c.geometry.y0 == -12.5e-6);
        CHECK(c.geometry.dx == 14e-6 / 255.0);
        CHECK(c.geometry.sensors.count == 240);
        CHECK(c.geometry.sensors.radius == 40e-6);
        CHECK(c.geometry.sensors.angle_start_deg == 35.0);
        CHECK(c.geometry.sensors.angle_end_deg == 324.0);
        CHECK(c.geometry.time.samples == 747);
        CHECK(c.geometry.time.t_final == 4.9749e-8);
        CHECK(c.geometry.sound_speed == 1490.7);
        CHECK(c.measurement.rows == 60);
        CHECK(c.measurement.stride == 4);
        CHECK(c.joint.mu == 0.125);
        CHECK(c.joint.iters == 70);
    }
    SUBCASE("overrides layer on top of the preset") {
        ExperimentConfig c = parse_config_text(
            "{\"preset\":\"paper-2d\",\"geometry\":{\"nx\":128},"
            "\"measurement\":{\"rows\":30},\"joint\":{\"mu\":0.5}}");
        CHECK(c.geometry.nx == 128);
        CHECK(c.geometry.ny == 256);  // untouched preset value
        CHECK(c.geometry.sensors.count == 240);
        CHECK(c.measurement.rows == 30);
        CHECK(c.joint.mu == 0.5);
        CHECK(c.joint.alpha == 1e-3);
    }
    SUBCASE("deep overrides reach nested blocks") {
        ExperimentConfig c = parse_config_text(
            "{\"geometry\":{\"sensors\":{\"count\":8,\"radius\":12.0},"
            "\"time\":{\"samples\":32}},"
            "\"network\":{\"train\":{\"epochs\":2,\"seed\":5}},"
            "\"evaluation\":{\"phantoms\":[\"vessel:4x2\"],"
            "\"deterministic_timing\":true}}");
        CHECK(c.geometry.sensors.count == 8);
        CHECK(c.geometry.sensors.radius == 12.0);
        CHECK(c.geometry.time.samples == 32);
        CHECK(c.geometry.time.t_final == 96.0);
        CHECK(c.network.train.epochs == 2);
        CHECK(c.network.train.seed == 5);
        CHECK(c.network.train.momentum == 0.9);
        CHECK(c.evaluation.phantoms == std::vector<std::string>{"vessel:4x2"});
        CHECK(c.evaluation.deterministic_timing == true);
    }
}

TEST_CASE("config errors carry dotted field paths") {
    CHECK(config_field("{nope") == "<root>");
    CHECK(config_field("[1,2]") == "<root>");
    CHECK(config_field("{\"preset\":17}") == "preset");
    CHECK(config_field("{\"preset\":\"v3\"}") == "preset");
    CHECK(config_field("{\"bogus\":1}") == "bogus");
    CHECK(config_field("{\"geometry\":{\"sensors\":{\"raduis\":1.0}}}") ==
          "geometry.sensors.raduis");
    CHECK(config_field("{\"geometry\":{\"nx\":\"big\"}}") == "geometry.nx");
    CHECK(config_field("{\"geometry\":{\"nx\":1}}") == "geometry.nx");
    CHECK(config_field("{\"geometry\":{\"dx\":0}}") == "geometry.dx");
    CHECK(config_field("{\"geometry\":{\"sound_speed\":-1}}") == "geometry.sound_speed");
    CHECK(config_field("{\"geometry\":{\"time\":{\"samples\":1}}}") ==
          "geometry.time.samples");
    CHECK(config_field("{\"measurement\":{\"kind\":\"fourier\"}}") == "measurement.kind");
    CHECK(config_field("{\"measurement\":{\"rows\":0}}") == "measurement.rows");
    CHECK(config_field("{\"measurement\":{\"noise\":{\"sigma\":-0.5}}}") ==
          "measurement.noise.sigma");
    CHECK(config_field("{\"joint\":{\"mu\":-1}}") == "joint.mu");
    CHECK(config_field("{\"joint\":{\"iters\":0}}") == "joint.iters");
    CHECK(config_field("{\"network\":{\"train\":{\"batch\":2}}}") == "network.train.batch");
    CHECK(config_field("{\"evaluation\":{\"phantoms\":\"disc\"}}") == "evaluation.phantoms");
    CHECK(config_field("{\"evaluation\":{\"phantoms\":[3]}}") == "evaluation.phantoms[0]");

    SUBCASE("valid text parses without error") { CHECK(config_field("{\"joint\":{}}") == ""); }
    SUBCASE("a missing config file names the file field") {
        try {
            load_config("/nonexistent/cspat.json");
            FAIL("expected ConfigError");
        } catch (const ConfigError& e) {
            CHECK(e.field_path == "<file>");
        }
    }
    SUBCASE("load_config parses what it reads") {
        const std::string dir = fresh_dir("cspat_test_cfgfile");
        write_file(dir + "/c.json", "{\"geometry\":{\"nx\":32,\"ny\":32}}");
        ExperimentConfig c = load_config(dir + "/c.json");
        CHECK(c.geometry.nx == 32);
        CHECK(c.geometry.sensors.count == 60);
    }
}

TEST_CASE("csv formatting is stable") {
    BenchRow a{"disc", "sparse", "fbp", 0.00125, 18.0625, 0.875, 1.25};
    BenchRow b{"v", "-", "id", 0.0, std::numeric_limits<double>::infinity(), 1.0, 0.0};
    const std::string text = format_csv({a, b});
    CHECK(text ==
          "phantom,matrix,method,mse,psnr,ssim,seconds\n"
          "disc,sparse,fbp,1.25000000e-03,18.0625,0.875000,1.250\n"
          "v,-,id,0.00000000e+00,inf,1.000000,0.000\n");
    CHECK(format_csv({}) == "phantom,matrix,method,mse,psnr,ssim,seconds\n");
}

TEST_CASE("phantom specs expand and build") {
    const ImageGrid grid{32, 32, -15.5, -15.5, 1.0, 1.0};

    SUBCASE("seed-count specs expand to consecutive seeds") {
        auto out = expand_phantom_list({"vessel:5x3", "disc", "vessel:9", "shepp"});
        REQUIRE(out.size() == 6);
        CHECK(out[0] == std::pair<std::string, std::string>{"vessel-5", "vessel:5"});
        CHECK(out[1] == std::pair<std::string, std::string>{"vessel-6", "vessel:6"});
        CHECK(out[2] == std::pair<std::string, std::string>{"vessel-7", "vessel:7"});
        CHECK(out[3] == std::pair<std::string, std::string>{"disc", "disc"});
        CHECK(out[4] == std::pair<std::string, std::string>{"vessel-9", "vessel:9"});
        CHECK(out[5] == std::pair<std::string, std::string>{"shepp", "shepp"});
    }
    SUBCASE("bad specs point at the phantom list") {
        for (const char* bad : {"vessel:axb", "vessel:3x0", "vessel:3x20000"}) {
            try {
                expand_phantom_list({bad});
                FAIL("expected ConfigError for " << bad);
            } catch (const ConfigError& e) {
                CHECK(e.field_path == "evaluation.phantoms");
            }
        }
        CHECK_THROWS_AS(make_phantom("blob", grid), ConfigError);
    }
    SUBCASE("specs build the matching generators") {
        Image v = make_phantom("vessel:9", grid);
        Image vref = vessel_phantom(grid, 9);
        for (size_t i = 0; i < v.values.size(); ++i) CHECK(v.values[i] == vref.values[i]);

        Image d = make_phantom("disc", grid);
        Image dref = disc_phantom(grid, 0.0, 0.0, 0.25 * 31.0);
        for (size_t i = 0; i < d.values.size(); ++i) CHECK(d.values[i] == dref.values[i]);

        Image s = make_phantom("shepp", grid);
        Image sref = shepp_logan(grid);
        for (size_t i = 0; i < s.values.size(); ++i) CHECK(s.values[i] == sref.values[i]);
    }
}

TEST_CASE("pgm export normalizes and writes rows north-up") {
    const std::string dir = fresh_dir("cspat_test_pgm");
    const ImageGrid grid{4, 3, 0.0, 0.0, 1.0, 1.0};
    Image img(grid);
    for (int iy = 0; iy < grid.ny; ++iy)
        for (int ix = 0; ix < grid.nx; ++ix) img.at(ix, iy) = double(iy);

    export_pgm(dir + "/g.pgm", img);
    std::string buf = read_file(dir + "/g.pgm");
    const std::string header = "P5\n4 3\n255\n";
    REQUIRE(buf.size() == header.size() + 12);
    CHECK(buf.compare(0, header.size(), header) == 0);
    const uint8_t* px = reinterpret_cast<const uint8_t*>(buf.data() + header.size());
    for (int ix = 0; ix < 4; ++ix) {
        CHECK(int(px[ix]) == 255);      // first row is the largest y
        CHECK(int(px[4 + ix]) == 128);  // 0.5 rounds up
        CHECK(int(px[8 + ix]) == 0);
    }

    SUBCASE("constant images map to zero") {
        Image flat(grid);
        for (double& v : flat.values) v = 3.5;
        export_pgm(dir + "/flat.pgm", flat);
        std::string fb = read_file(dir + "/flat.pgm");
        REQUIRE(fb.size() == header.size() + 12);
        for (size_t i = header.size(); i < fb.size(); ++i) CHECK(fb[i] == 0);
    }
}

TEST_CASE("command line pipeline runs end to end") {
    const std::string dir = fresh_dir("cspat_test_cli");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg,
               "{\"geometry\":{\"nx\":16,\"ny\":16,\"x0\":-7.5,\"y0\":-7.5,"
               "\"sensors\":{\"count\":8,\"radius\":12.0},"
               "\"time\":{\"samples\":32,\"t_final\":24.0}},"
               "\"measurement\":{\"kind\":\"subsampling\",\"rows\":3,\"stride\":2},"
               "\"joint\":{\"iters\":8},"
               "\"two_stage\":{\"iters\":15},"
               "\"network\":{\"arch\":{\"levels\":2,\"base_channels\":4},"
               "\"train\":{\"epochs\":2,\"seed\":3},"
               "\"train_count\":2,\"train_seed\":50}}");
    const ExperimentConfig conf = load_config(cfg);
    const ImageGrid grid = conf.grid();

    // Source image.
    REQUIRE(run_cli({"phantom", "--kind", "vessel", "--seed", "3", "--config", cfg, "--out",
                     dir + "/truth.patt"}) == 0);
    TensorData tt = load_tensor(dir + "/truth.patt");
    REQUIRE(tt.dims == std::vector<uint32_t>{16, 16});
    Image vref = vessel_phantom(grid, 3);
    for (size_t i = 0; i < vref.values.size(); ++i) CHECK(tt.data[i] == f32(vref.values[i]));

    SUBCASE("phantom without a config uses the desk grid") {
        REQUIRE(run_cli({"phantom", "--kind", "disc", "--out", dir + "/d64.patt"}) == 0);
        CHECK(load_tensor(dir + "/d64.patt").dims == std::vector<uint32_t>{64, 64});
    }

    // Full traces.
    REQUIRE(run_cli({"simulate", "--config", cfg, "--phantom", dir + "/truth.patt", "--out",
                     dir + "/traces.patt"}) == 0);
    TensorData tr = load_tensor(dir + "/traces.patt");
    REQUIRE(tr.dims == std::vector<uint32_t>{8, 32});
    Image truth32 = tensor_to_image(tt, grid);
    SensorData pref = conf.wave().forward(truth32);
    for (size_t i = 0; i < pref.values.size(); ++i) CHECK(tr.data[i] == f32(pref.values[i]));

    // Compressed data.
    REQUIRE(run_cli({"measure", "--config", cfg, "--in", dir + "/traces.patt", "--out",
                     dir + "/data.patt"}) == 0);
    TensorData td = load_tensor(dir + "/data.patt");
    REQUIRE(td.dims == std::vector<uint32_t>{3, 32});
    SensorData traces32(conf.sensor_array(), conf.time_axis());
    traces32.values = tr.data;
    CSData gref = apply_matrix(conf.matrix(), traces32);
    for (size_t i = 0; i < gref.values.size(); ++i) CHECK(td.data[i] == f32(gref.values[i]));

    // Reconstructions.
    REQUIRE(run_cli({"recon", "--method", "fbp", "--config", cfg, "--in", dir + "/data.patt",
                     "--out", dir + "/r_fbp.patt"}) == 0);
    TensorData tf = load_tensor(dir + "/r_fbp.patt");
    REQUIRE(tf.dims == std::vector<uint32_t>{16, 16});
    CSOperator A(conf.matrix(), grid, conf.sensor_array(), conf.time_axis(),
                 Medium{conf.geometry.sound_speed}, conf.geometry.quadrature);
    CSData g32(3, conf.time_axis());
    g32.values = td.data;
    Image fref = A.backproject(g32);
    for (size_t i = 0; i < fref.values.size(); ++i) CHECK(tf.data[i] == f32(fref.values[i]));

    REQUIRE(run_cli({"recon", "--method", "l1-joint", "--config", cfg, "--in",
                     dir + "/data.patt", "--out", dir + "/r_joint.patt"}) == 0);
    REQUIRE(run_cli({"recon", "--method", "l1-twostage", "--config", cfg, "--in",
                     dir + "/data.patt", "--out", dir + "/r_two.patt"}) == 0);
    for (const char* f : {"/r_joint.patt", "/r_two.patt"}) {
        TensorData t = load_tensor(dir + f);
        CHECK(t.dims == std::vector<uint32_t>{16, 16});
        for (double v : t.data) CHECK(std::isfinite(v));
    }

    // Network methods need weights.
    CHECK(run_cli({"recon", "--method", "net-res", "--config", cfg, "--in", dir + "/data.patt",
                   "--out", dir + "/r_net.patt"}) == 2);
    REQUIRE(run_cli({"train", "--config", cfg, "--out", dir + "/w.patw"}) == 0);
    NetParams w = load_weights(dir + "/w.patw");
    CHECK(w.arch.levels == 2);
    CHECK(w.arch.base_channels == 4);
    REQUIRE(run_cli({"recon", "--method", "net-res", "--config", cfg, "--in", dir + "/data.patt",
                     "--weights", dir + "/w.patw", "--out", dir + "/r_net.patt"}) == 0);
    REQUIRE(run_cli({"recon", "--method", "net-null", "--config", cfg, "--in", dir + "/data.patt",
                     "--weights", dir + "/w.patw", "--out", dir + "/r_null.patt"}) == 0);
    CHECK(load_tensor(dir + "/r_net.patt").dims == std::vector<uint32_t>{16, 16});
    CHECK(load_tensor(dir + "/r_null.patt").dims == std::vector<uint32_t>{16, 16});

    // Scoring.
    REQUIRE(run_cli({"eval", "--truth", dir + "/truth.patt", "--recon", dir + "/r_fbp.patt",
                     dir + "/r_joint.patt", "--csv", dir + "/scores.csv"}) == 0);
    auto lines = split_lines(read_file(dir + "/scores.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "phantom,matrix,method,mse,psnr,ssim,seconds");
    CHECK(lines[1].rfind("truth,-,r_fbp,", 0) == 0);
    CHECK(lines[2].rfind("truth,-,r_joint,", 0) == 0);

    // Preview image.
    REQUIRE(run_cli({"export-pgm", "--in", dir + "/truth.patt", "--out", dir + "/t.pgm"}) == 0);
    std::string pgm = read_file(dir + "/t.pgm");
    const std::string header = "P5\n16 16\n255\n";
    REQUIRE(pgm.size() == header.size() + 256);
    CHECK(pgm.compare(0, header.size(), header) == 0);
}

TEST_CASE("command line reports errors through exit codes") {
    const std::string dir = fresh_dir("cspat_test_cli_err");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg,
               "{\"geometry\":{\"nx\":16,\"ny\":16,\"x0\":-7.5,\"y0\":-7.5,"
               "\"sensors\":{\"count\":8,\"radius\":12.0},"
               "\"time\":{\"samples\":32,\"t_final\":24.0}},"
               "\"measurement\":{\"rows\":3,\"stride\":2}}");
    REQUIRE(run_cli({"phantom", "--kind", "disc", "--config", cfg, "--out",
                     dir + "/truth.patt"}) == 0);
    REQUIRE(run_cli({"simulate", "--config", cfg, "--phantom", dir + "/truth.patt", "--out",
                     dir + "/traces.patt"}) == 0);
    REQUIRE(run_cli({"measure", "--config", cfg, "--in", dir + "/traces.patt", "--out",
                     dir + "/data.patt"}) == 0);

    SUBCASE("bad configs exit 2") {
        write_file(dir + "/bad.json", "{\"geometry\":{\"raduis\":1}}");
        CHECK(run_cli({"phantom", "--kind", "disc", "--config", dir + "/bad.json", "--out",
                       dir + "/x.patt"}) == 2);
        CHECK(run_cli({"recon", "--method", "warp", "--config", cfg, "--in", dir + "/data.patt",
                       "--out", dir + "/x.patt"}) == 2);
    }
    SUBCASE("divergent steps exit 3") {
        write_file(dir + "/div.json",
                   "{\"geometry\":{\"nx\":16,\"ny\":16,\"x0\":-7.5,\"y0\":-7.5,"
                   "\"sensors\":{\"count\":8,\"radius\":12.0},"
                   "\"time\":{\"samples\":32,\"t_final\":24.0}},"
                   "\"measurement\":{\"rows\":3,\"stride\":2},"
                   "\"joint\":{\"mu\":1e9,\"iters\":8}}");
        CHECK(run_cli({"recon", "--method", "l1-joint", "--config", dir + "/div.json", "--in",
                       dir + "/data.patt", "--out", dir + "/x.patt"}) == 3);
    }
    SUBCASE("runtime failures exit 1") {
        CHECK(run_cli({"simulate", "--config", cfg, "--phantom", dir + "/absent.patt", "--out",
                       dir + "/x.patt"}) == 1);
    }
    SUBCASE("mismatched tensors exit 1") {
        CHECK(run_cli({"recon", "--method", "fbp", "--config", cfg, "--in",
                       dir + "/traces.patt", "--out", dir + "/x.patt"}) == 1);
    }
    SUBCASE("argument parsing failures are nonzero") {
        CHECK(run_cli({"recon", "--config", cfg, "--in", dir + "/data.patt", "--out",
                       dir + "/x.patt"}) != 0);
        CHECK(run_cli({"--help"}) == 0);
    }
}

TEST_CASE("bench writes the csv and one tensor per cell") {
    const std::string dir = fresh_dir("cspat_test_bench");
    std::filesystem::create_directories(dir + "/out");
    const std::string cfg = dir + "/cfg.json";
    write_file(cfg,
               "{\"geometry\":{\"nx\":16,\"ny\":16,\"x0\":-7.5,\"y0\":-7.5,"
               "\"sensors\":{\"count\":8,\"radius\":12.0},"
               "\"time\":{\"samples\":32,\"t_final\":24.0}},"
               "\"measurement\":{\"rows\":3,\"stride\":2},"
               "\"joint\":{\"iters\":5},"
               "\"network\":{\"arch\":{\"levels\":2,\"base_channels\":4},"
               "\"train\":{\"epochs\":1,\"seed\":3},"
               "\"train_count\":1,\"train_seed\":50,\"landweber_steps\":3},"
               "\"evaluation\":{\"phantoms\":[\"vessel:5\"],"
               "\"csv\":\"" +
                   dir + "/out/bench.csv\",\"deterministic_timing\":true}}");
    REQUIRE(run_cli({"bench", "--config", cfg}) == 0);

    auto lines = split_lines(read_file(dir + "/out/bench.csv"));
    REQUIRE(lines.size() == 9);  // header + 1 phantom x 2 matrices x 4 methods
    CHECK(lines[0] == "phantom,matrix,method,mse,psnr,ssim,seconds");
    for (size_t i = 1; i < lines.size(); ++i) {
        CHECK(lines[i].rfind("vessel-5,", 0) == 0);
        CHECK(lines[i].substr(lines[i].size() - 6) == ",0.000");  // pinned timing
    }
    CHECK(lines[1].rfind("vessel-5,sparse,fbp,", 0) == 0);
    CHECK(lines[5].rfind("vessel-5,bernoulli,fbp,", 0) == 0);

    for (const char* m : {"sparse", "bernoulli"})
        for (const char* k : {"fbp", "l1-joint", "net-res", "net-null"}) {
            const std::string f =
                dir + "/out/vessel-5_" + m + "_" + k + ".patt";
            CHECK(load_tensor(f).dims == std::vector<uint32_t>{16, 16});
        }
}
