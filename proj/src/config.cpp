#include "cspat/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cspat/errors.hpp"

namespace cspat {

ImageGrid ExperimentConfig::grid() const {
    return ImageGrid{geometry.nx, geometry.ny, geometry.x0, geometry.y0, geometry.dx,
                     geometry.dy};
}

SensorArray ExperimentConfig::sensor_array() const {
    const double deg = M_PI / 180.0;
    return make_sensors(geometry.sensors.count, geometry.sensors.radius,
                        geometry.sensors.angle_start_deg * deg,
                        geometry.sensors.angle_end_deg * deg);
}

TimeAxis ExperimentConfig::time_axis() const {
    return TimeAxis{geometry.time.samples, geometry.time.t_final};
}

WaveOperator ExperimentConfig::wave() const {
    return WaveOperator(grid(), sensor_array(), time_axis(), Medium{geometry.sound_speed},
                        geometry.quadrature);
}

MeasMatrix ExperimentConfig::matrix() const {
    if (measurement.kind == "subsampling")
        return subsampling_matrix(measurement.rows, geometry.sensors.count, measurement.stride,
                                  measurement.weight);
    if (measurement.kind == "bernoulli")
        return bernoulli_matrix(measurement.rows, geometry.sensors.count, measurement.seed);
    throw ConfigError("measurement.kind", "unknown kind '" + measurement.kind +
                                              "' (expected subsampling or bernoulli)");
}

ExperimentConfig preset_config(const std::string& name) {
    ExperimentConfig c;  // defaults are the desk preset
    if (name == "paper-desk") {
        c.preset = "paper-desk";
        return c;
    }
    if (name == "paper-2d") {
        c.preset = "paper-2d";
        c.geometry.nx = 256;
        c.geometry.ny = 256;
        c.geometry.x0 = -5e-6;
        c.geometry.y0 = -12.5e-6;
        c.geometry.dx = 14e-6 / 255.0;
        c.geometry.dy = 14e-6 / 255.0;
        c.geometry.sensors.count = 240;
        c.geometry.sensors.radius = 40e-6;
        c.geometry.sensors.angle_start_deg = 35.0;
        c.geometry.sensors.angle_end_deg = 324.0;
        c.geometry.time.samples = 747;
        c.geometry.time.t_final = 4.9749e-8;
        c.geometry.sound_speed = 1490.7;
        c.measurement.rows = 60;
        c.measurement.stride = 4;
        c.joint.alpha = 1e-3;
        c.joint.beta = 5e-3;
        c.joint.mu = 0.125;
        c.joint.iters = 70;
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + name + "'");
}

namespace {

using nlohmann::json;

using Handler = std::function<void(const json&, const std::string&)>;

void walk_object(const json& j, const std::string& path,
                 const std::map<std::string, Handler>& handlers) {
    if (!j.is_object()) throw ConfigError(path, "expected a JSON object");
    for (const auto& [key, value] : j.items()) {
        const std::string sub = path.empty() ? key : path + "." + key;
        auto it = handlers.find(key);
        if (it == handlers.end()) throw ConfigError(sub, "unknown key");
        it->second(value, sub);
    }
}

template <typename T>
T as(const json& j, const std::string& path) {
    try {
        return j.get<T>();
    } catch (const json::exception&) {
        throw ConfigError(path, "wrong value type");
    }
}

Handler num(double& target) {
    return [&target](const json& j, const std::string& p) {
        if (!j.is_number()) throw ConfigError(p, "expected a number");
        target = as<double>(j, p);
    };
}

Handler integer(int& target) {
    return [&target](const json& j, const std::string& p) {
        if (!j.is_number_integer()) throw ConfigError(p, "expected an integer");
        target = as<int>(j, p);
    };
}

Handler seed_of(uint64_t& target) {
    return [&target](const json& j, const std::string& p) {
        if (!j.is_number_unsigned() && !j.is_number_integer())
            throw ConfigError(p, "expected an unsigned integer");
        target = as<uint64_t>(j, p);
    };
}

Handler str(std::string& target) {
    return [&target](const json& j, const std::string& p) {
        if (!j.is_string()) throw ConfigError(p, "expected a string");
        target = as<std::string>(j, p);
    };
}

Handler boolean(bool& target) {
    return [&target](const json& j, const std::string& p) {
        if (!j.is_boolean()) throw ConfigError(p, "expected a boolean");
        target = as<bool>(j, p);
    };
}

void apply_geometry(const json& j, const std::string& path, GeometryConfig& g) {
    walk_object(j, path,
                {{"nx", integer(g.nx)},
                 {"ny", integer(g.ny)},
                 {"x0", num(g.x0)},
                 {"y0", num(g.y0)},
                 {"dx", num(g.dx)},
                 {"dy", num(g.dy)},
                 {"sound_speed", num(g.sound_speed)},
                 {"sensors",
                  [&g](const json& v, const std::string& p) {
                      walk_object(v, p,
                                  {{"count", integer(g.sensors.count)},
                                   {"radius", num(g.sensors.radius)},
                                   {"angle_start_deg", num(g.sensors.angle_start_deg)},
                                   {"angle_end_deg", num(g.sensors.angle_end_deg)}});
                  }},
                 {"time",
                  [&g](const json& v, const std::string& p) {
                      walk_object(v, p,
                                  {{"samples", integer(g.time.samples)},
                                   {"t_final", num(g.time.t_final)}});
                  }},
                 {"quadrature", [&g](const json& v, const std::string& p) {
                      walk_object(v, p,
                                  {{"radial_oversample", num(g.quadrature.radial_oversample)},
                                   {"angular_oversample", num(g.quadrature.angular_oversample)}});
                  }}});
}

void apply_measurement(const json& j, const std::string& path, MeasurementConfig& m) {
    walk_object(j, path,
                {{"kind", str(m.kind)},
                 {"rows", integer(m.rows)},
                 {"seed", seed_of(m.seed)},
                 {"stride", integer(m.stride)},
                 {"weight", num(m.weight)},
                 {"noise", [&m](const json& v, const std::string& p) {
                      walk_object(v, p,
                                  {{"sigma", num(m.noise.sigma)},
                                   {"seed", seed_of(m.noise.seed)}});
                  }}});
}

void apply_network(const json& j, const std::string& path, NetworkConfig& n) {
    walk_object(
        j, path,
        {{"arch",
          [&n](const json& v, const std::string& p) {
              walk_object(v, p,
                          {{"levels", integer(n.arch.levels)},
                           {"base_channels", integer(n.arch.base_channels)},
                           {"kernel", integer(n.arch.kernel)},
                           {"leak", num(n.arch.leak)}});
          }},
         {"train",
          [&n](const json& v, const std::string& p) {
              walk_object(v, p,
                          {{"epochs", integer(n.train.epochs)},
                           {"batch", integer(n.train.batch)},
                           {"momentum", num(n.train.momentum)},
                           {"lr_start", num(n.train.lr_start)},
                           {"lr_end", num(n.train.lr_end)},
                           {"seed", seed_of(n.train.seed)}});
          }},
         {"weights", str(n.weights)},
         {"landweber_steps", integer(n.landweber_steps)},
         {"landweber_step", num(n.landweber_step)},
         {"train_count", integer(n.train_count)},
         {"train_seed", seed_of(n.train_seed)}});
}

void apply_evaluation(const json& j, const std::string& path, EvalConfig& e) {
    walk_object(j, path,
                {{"phantoms",
                  [&e](const json& v, const std::string& p) {
                      if (!v.is_array()) throw ConfigError(p, "expected an array of strings");
                      e.phantoms.clear();
                      for (size_t i = 0; i < v.size(); ++i) {
                          if (!v[i].is_string())
                              throw ConfigError(p + "[" + std::to_string(i) + "]",
                                                "expected a string");
                          e.phantoms.push_back(v[i].get<std::string>());
                      }
                  }},
                 {"csv", str(e.csv)},
                 {"deterministic_timing", boolean(e.deterministic_timing)}});
}

void validate(const ExperimentConfig& c) {
    auto positive = [](double v, const char* p) {
        if (!(v > 0.0)) throw ConfigError(p, "must be positive");
    };
    if (c.geometry.nx < 2 || c.geometry.ny < 2)
        throw ConfigError("geometry.nx", "grid sides must be at least 2");
    positive(c.geometry.dx, "geometry.dx");
    positive(c.geometry.dy, "geometry.dy");
    positive(c.geometry.sound_speed, "geometry.sound_speed");
    positive(c.geometry.sensors.radius, "geometry.sensors.radius");
    if (c.geometry.sensors.count < 1) throw ConfigError("geometry.sensors.count", "must be >= 1");
    if (c.geometry.time.samples < 2) throw ConfigError("geometry.time.samples", "must be >= 2");
    positive(c.geometry.time.t_final, "geometry.time.t_final");
    if (c.measurement.kind != "subsampling" && c.measurement.kind != "bernoulli")
        throw ConfigError("measurement.kind", "expected subsampling or bernoulli");
    if (c.measurement.rows < 1) throw ConfigError("measurement.rows", "must be >= 1");
    if (c.measurement.stride < 1) throw ConfigError("measurement.stride", "must be >= 1");
    if (c.measurement.noise.sigma < 0.0)
        throw ConfigError("measurement.noise.sigma", "must be >= 0");
    if (c.joint.alpha < 0.0) throw ConfigError("joint.alpha", "must be >= 0");
    if (c.joint.beta < 0.0) throw ConfigError("joint.beta", "must be >= 0");
    if (c.joint.mu < 0.0) throw ConfigError("joint.mu", "must be >= 0");
    if (c.joint.iters < 1) throw ConfigError("joint.iters", "must be >= 1");
    if (c.two_stage.beta < 0.0) throw ConfigError("two_stage.beta", "must be >= 0");
    if (c.two_stage.iters < 1) throw ConfigError("two_stage.iters", "must be >= 1");
    if (c.two_stage.step < 0.0) throw ConfigError("two_stage.step", "must be >= 0");
    if (c.network.landweber_steps < 0)
        throw ConfigError("network.landweber_steps", "must be >= 0");
    if (c.network.landweber_step < 0.0)
        throw ConfigError("network.landweber_step", "must be >= 0");
    if (c.network.train_count < 1) throw ConfigError("network.train_count", "must be >= 1");
    if (c.network.train.epochs < 1) throw ConfigError("network.train.epochs", "must be >= 1");
    if (c.network.train.batch != 1) throw ConfigError("network.train.batch", "must be 1");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("<root>", "top level must be a JSON object");

    ExperimentConfig c;
    if (j.contains("preset")) {
        if (!j["preset"].is_string()) throw ConfigError("preset", "expected a string");
        c = preset_config(j["preset"].get<std::string>());
    }

    walk_object(
        j, "",
        {{"preset", [](const json&, const std::string&) { /* consumed above */ }},
         {"geometry",
          [&c](const json& v, const std::string& p) { apply_geometry(v, p, c.geometry); }},
         {"measurement",
          [&c](const json& v, const std::string& p) { apply_measurement(v, p, c.measurement); }},
         {"joint",
          [&c](const json& v, const std::string& p) {
              walk_object(v, p,
                          {{"alpha", num(c.joint.alpha)},
                           {"beta", num(c.joint.beta)},
                           {"mu", num(c.joint.mu)},
                           {"iters", integer(c.joint.iters)}});
          }},
         {"two_stage",
          [&c](const json& v, const std::string& p) {
              walk_object(v, p,
                          {{"beta", num(c.two_stage.beta)},
                           {"iters", integer(c.two_stage.iters)},
                           {"step", num(c.two_stage.step)}});
          }},
         {"network",
          [&c](const json& v, const std::string& p) { apply_network(v, p, c.network); }},
         {"evaluation",
          [&c](const json& v, const std::string& p) { apply_evaluation(v, p, c.evaluation); }}});

    validate(c);
    return c;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("<file>", "cannot open config file " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_config_text(text);
}

}  // namespace cspat
