#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cspat/config.hpp"
#include "cspat/io.hpp"
#include "cspat/metrics.hpp"
#include "cspat/phantom.hpp"
#include "cspat/pipeline.hpp"
#include "cspat/solver.hpp"
#include "cspat/wave.hpp"

namespace py = pybind11;
using namespace cspat;

namespace {

py::array_t<double> image_to_array(const Image& img) {
    py::array_t<double> a({img.grid.ny, img.grid.nx});
    std::copy(img.values.begin(), img.values.end(), a.mutable_data());
    return a;
}

Image array_to_image(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                     const ImageGrid& grid) {
    if (a.ndim() != 2 || a.shape(0) != grid.ny || a.shape(1) != grid.nx)
        throw std::invalid_argument("array shape does not match the grid");
    Image img(grid);
    std::copy(a.data(), a.data() + img.values.size(), img.values.begin());
    return img;
}

}  // namespace

PYBIND11_MODULE(_cspat, m) {
    m.doc() = "compressed-sensing photoacoustic reconstruction core";

    py::class_<ImageGrid>(m, "ImageGrid")
        .def(py::init<>())
        .def_readwrite("nx", &ImageGrid::nx)
        .def_readwrite("ny", &ImageGrid::ny)
        .def_readwrite("x0", &ImageGrid::x0)
        .def_readwrite("y0", &ImageGrid::y0)
        .def_readwrite("dx", &ImageGrid::dx)
        .def_readwrite("dy", &ImageGrid::dy);

    py::class_<ExperimentConfig>(m, "ExperimentConfig")
        .def_property_readonly("preset", [](const ExperimentConfig& c) { return c.preset; })
        .def_property_readonly("grid", &ExperimentConfig::grid);

    m.def("preset_config", &preset_config, py::arg("name"));
    m.def("parse_config", &parse_config_text, py::arg("text"));

    m.def(
        "phantom",
        [](const std::string& spec, const ExperimentConfig& cfg) {
            return image_to_array(make_phantom(spec, cfg.grid()));
        },
        py::arg("spec"), py::arg("config"));

    m.def(
        "simulate",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& f,
           const ExperimentConfig& cfg) {
            SensorData d = cfg.wave().forward(array_to_image(f, cfg.grid()));
            py::array_t<double> a({d.sensors.count(), d.time.samples});
            std::copy(d.values.begin(), d.values.end(), a.mutable_data());
            return a;
        },
        py::arg("image"), py::arg("config"));

    m.def(
        "reconstruct",
        [](const std::string& method,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& data,
           const ExperimentConfig& cfg, const std::string& weights) {
            CSOperator A(cfg.matrix(), cfg.grid(), cfg.sensor_array(), cfg.time_axis(),
                         Medium{cfg.geometry.sound_speed}, cfg.geometry.quadrature);
            if (data.ndim() != 2 || data.shape(0) != cfg.measurement.rows ||
                data.shape(1) != cfg.geometry.time.samples)
                throw std::invalid_argument("data shape does not match the configuration");
            CSData g(cfg.measurement.rows, cfg.time_axis());
            std::copy(data.data(), data.data() + g.values.size(), g.values.begin());
            return image_to_array(run_recon(method, cfg, A, g, weights));
        },
        py::arg("method"), py::arg("data"), py::arg("config"), py::arg("weights") = "");

    m.def(
        "measure",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& traces,
           const ExperimentConfig& cfg) {
            SensorArray sensors = cfg.sensor_array();
            if (traces.ndim() != 2 || traces.shape(0) != sensors.count() ||
                traces.shape(1) != cfg.geometry.time.samples)
                throw std::invalid_argument("trace shape does not match the configuration");
            SensorData p(sensors, cfg.time_axis());
            std::copy(traces.data(), traces.data() + p.values.size(), p.values.begin());
            CSData g = apply_matrix(cfg.matrix(), p);
            if (cfg.measurement.noise.sigma > 0.0)
                g = add_noise(g, cfg.measurement.noise.sigma, cfg.measurement.noise.seed);
            py::array_t<double> a({g.rows, g.time.samples});
            std::copy(g.values.begin(), g.values.end(), a.mutable_data());
            return a;
        },
        py::arg("traces"), py::arg("config"));

    m.def(
        "metrics",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& truth,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& recon) {
            if (truth.ndim() != 2 || recon.ndim() != 2 || truth.shape(0) != recon.shape(0) ||
                truth.shape(1) != recon.shape(1))
                throw std::invalid_argument("metric inputs must be equal-shape 2-D arrays");
            ImageGrid grid{int(truth.shape(1)), int(truth.shape(0)), 0.0, 0.0, 1.0, 1.0};
            MetricReport r = evaluate(array_to_image(truth, grid), array_to_image(recon, grid));
            return py::make_tuple(r.mse, r.psnr, r.ssim);
        },
        py::arg("truth"), py::arg("recon"));
}
