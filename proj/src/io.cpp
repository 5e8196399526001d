#include "cspat/io.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cspat/errors.hpp"

namespace cspat {

namespace {

void put_u16(std::string& out, uint16_t v) {
    out.push_back(char(v & 0xff));
    out.push_back(char((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(char((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

uint16_t get_u16(const std::string& buf, size_t& pos) {
    if (pos + 2 > buf.size()) throw std::runtime_error("tensor file truncated");
    uint16_t v = uint16_t(uint8_t(buf[pos])) | uint16_t(uint8_t(buf[pos + 1])) << 8;
    pos += 2;
    return v;
}

uint32_t get_u32(const std::string& buf, size_t& pos) {
    if (pos + 4 > buf.size()) throw std::runtime_error("tensor file truncated");
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= uint32_t(uint8_t(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

float get_f32(const std::string& buf, size_t& pos) {
    uint32_t bits = get_u32(buf, pos);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

}  // namespace

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw std::runtime_error("write failed: " + path);
}

void append_tensor(std::string& buf, const std::vector<uint32_t>& dims,
                   const std::vector<double>& data) {
    size_t n = dims.empty() ? 0 : 1;
    for (uint32_t d : dims) n *= d;
    if (n != data.size()) throw ShapeError("append_tensor: dims do not match payload size");
    buf += "PATT";
    put_u32(buf, uint32_t(dims.size()));
    for (uint32_t d : dims) put_u32(buf, d);
    buf.reserve(buf.size() + 4 * data.size());
    for (double v : data) put_f32(buf, float(v));
}

TensorData parse_tensor(const std::string& buf, size_t& pos) {
    if (pos + 4 > buf.size() || buf.compare(pos, 4, "PATT") != 0)
        throw std::runtime_error("bad tensor magic (expected PATT)");
    pos += 4;
    TensorData t;
    uint32_t rank = get_u32(buf, pos);
    if (rank > 8) throw std::runtime_error("tensor rank out of range");
    t.dims.resize(rank);
    for (uint32_t i = 0; i < rank; ++i) t.dims[i] = get_u32(buf, pos);
    size_t n = t.count();
    t.data.resize(n);
    for (size_t i = 0; i < n; ++i) t.data[i] = double(get_f32(buf, pos));
    return t;
}

void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<double>& data) {
    std::string buf;
    append_tensor(buf, dims, data);
    write_file(path, buf);
}

TensorData load_tensor(const std::string& path) {
    std::string buf = read_file(path);
    size_t pos = 0;
    TensorData t = parse_tensor(buf, pos);
    if (pos != buf.size()) throw std::runtime_error("trailing bytes in tensor file " + path);
    return t;
}

void save_image(const std::string& path, const Image& img) {
    check_image_shape(img, "save_image");
    save_tensor(path, {uint32_t(img.grid.ny), uint32_t(img.grid.nx)}, img.values);
}

Image tensor_to_image(const TensorData& t, const ImageGrid& grid) {
    if (t.dims.size() != 2 || t.dims[0] != uint32_t(grid.ny) || t.dims[1] != uint32_t(grid.nx))
        throw ShapeError("tensor_to_image: dims do not match the configured grid");
    return Image(grid, t.data);
}

void save_sensor_data(const std::string& path, const SensorData& d) {
    check_sensor_shape(d, "save_sensor_data");
    save_tensor(path, {uint32_t(d.sensors.count()), uint32_t(d.time.samples)}, d.values);
}

void save_cs_data(const std::string& path, const CSData& d) {
    check_cs_shape(d, "save_cs_data");
    save_tensor(path, {uint32_t(d.rows), uint32_t(d.time.samples)}, d.values);
}

namespace {

std::string weights_container(const std::vector<Tensor>& tensors, const std::string& manifest) {
    std::set<std::string> seen;
    std::string buf = "PATW";
    put_u32(buf, uint32_t(tensors.size()));
    for (const Tensor& t : tensors) {
        if (!seen.insert(t.name).second)
            throw std::invalid_argument("weights container: duplicate tensor name " + t.name);
        if (t.name.size() > 0xffff) throw std::invalid_argument("tensor name too long");
        put_u16(buf, uint16_t(t.name.size()));
        buf += t.name;
        std::vector<uint32_t> dims(t.shape.begin(), t.shape.end());
        append_tensor(buf, dims, t.data);
    }
    buf += manifest;
    return buf;
}

struct Container {
    std::vector<Tensor> tensors;
    nlohmann::json manifest;
};

Container parse_container(const std::string& path) {
    std::string buf = read_file(path);
    size_t pos = 0;
    if (buf.compare(0, 4, "PATW") != 0)
        throw std::runtime_error("bad weights magic (expected PATW) in " + path);
    pos += 4;
    uint32_t count = get_u32(buf, pos);
    Container c;
    std::set<std::string> seen;
    for (uint32_t i = 0; i < count; ++i) {
        uint16_t len = get_u16(buf, pos);
        if (pos + len > buf.size()) throw std::runtime_error("weights file truncated");
        Tensor t;
        t.name = buf.substr(pos, len);
        pos += len;
        if (!seen.insert(t.name).second)
            throw std::runtime_error("duplicate tensor name " + t.name + " in " + path);
        TensorData td = parse_tensor(buf, pos);
        t.shape.assign(td.dims.begin(), td.dims.end());
        t.data = std::move(td.data);
        c.tensors.push_back(std::move(t));
    }
    std::string manifest = buf.substr(pos);
    c.manifest = nlohmann::json::parse(manifest);
    return c;
}

}  // namespace

void save_weights(const std::string& path, const NetParams& params, uint64_t seed,
                  const std::string& train_config_json) {
    nlohmann::json manifest;
    manifest["format"] = "weights";
    manifest["arch"] = {{"levels", params.arch.levels},
                        {"base_channels", params.arch.base_channels},
                        {"kernel", params.arch.kernel},
                        {"leak", params.arch.leak}};
    manifest["seed"] = seed;
    if (!train_config_json.empty())
        manifest["train"] = nlohmann::json::parse(train_config_json);
    nlohmann::json shapes = nlohmann::json::object();
    for (const Tensor& t : params.tensors) shapes[t.name] = t.shape;
    manifest["shapes"] = shapes;
    write_file(path, weights_container(params.tensors, manifest.dump()));
}

NetParams load_weights(const std::string& path) {
    Container c = parse_container(path);
    if (!c.manifest.contains("arch"))
        throw std::runtime_error("weights manifest lacks arch block in " + path);
    NetParams p;
    const auto& a = c.manifest["arch"];
    p.arch.levels = a.at("levels").get<int>();
    p.arch.base_channels = a.at("base_channels").get<int>();
    p.arch.kernel = a.at("kernel").get<int>();
    p.arch.leak = a.at("leak").get<double>();
    p.tensors = std::move(c.tensors);
    if (c.manifest.contains("shapes")) {
        for (const Tensor& t : p.tensors) {
            auto it = c.manifest["shapes"].find(t.name);
            if (it == c.manifest["shapes"].end())
                throw std::runtime_error("tensor " + t.name + " missing from manifest shapes");
            if (it->get<std::vector<int>>() != t.shape)
                throw std::runtime_error("tensor " + t.name + " shape disagrees with manifest");
        }
    }
    // Cross-check against a freshly initialized parameter set so structural
    // mismatches fail here rather than inside the forward pass.
    NetParams ref = init_params(p.arch, 0);
    if (ref.tensors.size() != p.tensors.size())
        throw std::runtime_error("weights file has wrong tensor count for its arch");
    for (size_t i = 0; i < ref.tensors.size(); ++i) {
        if (ref.tensors[i].name != p.tensors[i].name ||
            ref.tensors[i].shape != p.tensors[i].shape)
            throw std::runtime_error("weights tensor " + p.tensors[i].name +
                                     " does not match the declared architecture");
    }
    return p;
}

void save_matrix(const std::string& path, const MeasMatrix& m) {
    Tensor entries;
    entries.name = "entries";
    entries.shape = {m.rows, m.cols};
    entries.data = m.entries;
    nlohmann::json manifest;
    manifest["format"] = "matrix";
    manifest["kind"] = m.kind == MatrixKind::Subsampling ? "subsampling" : "bernoulli";
    manifest["seed"] = m.seed;
    manifest["rows"] = m.rows;
    manifest["cols"] = m.cols;
    manifest["stride"] = m.stride;
    manifest["weight"] = m.weight;
    write_file(path, weights_container({entries}, manifest.dump()));
}

MeasMatrix load_matrix(const std::string& path) {
    Container c = parse_container(path);
    const auto& man = c.manifest;
    if (!man.contains("kind")) throw std::runtime_error("matrix manifest lacks kind in " + path);
    const std::string kind = man.at("kind").get<std::string>();
    const int rows = man.at("rows").get<int>();
    const int cols = man.at("cols").get<int>();
    MeasMatrix m;
    if (kind == "subsampling") {
        m = subsampling_matrix(rows, cols, man.at("stride").get<int>(),
                               man.at("weight").get<double>());
    } else if (kind == "bernoulli") {
        m = bernoulli_matrix(rows, cols, man.at("seed").get<uint64_t>());
    } else {
        throw std::runtime_error("unknown matrix kind " + kind + " in " + path);
    }
    if (c.tensors.size() != 1 || c.tensors[0].name != "entries" ||
        c.tensors[0].shape != std::vector<int>{rows, cols})
        throw std::runtime_error("matrix container malformed in " + path);
    for (size_t i = 0; i < m.entries.size(); ++i) {
        if (float(m.entries[i]) != float(c.tensors[0].data[i]))
            throw std::runtime_error("matrix entries disagree with kind/seed manifest in " +
                                     path);
    }
    return m;
}

void export_pgm(const std::string& path, const Image& img) {
    check_image_shape(img, "export_pgm");
    double lo = img.values[0], hi = img.values[0];
    for (double v : img.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    std::string buf = "P5\n" + std::to_string(img.grid.nx) + " " + std::to_string(img.grid.ny) +
                      "\n255\n";
    buf.reserve(buf.size() + size_t(img.grid.nx) * img.grid.ny);
    for (int iy = img.grid.ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < img.grid.nx; ++ix) {
            double v = span > 0.0 ? (img.at(ix, iy) - lo) / span : 0.0;
            int q = int(std::lround(v * 255.0));
            buf.push_back(char(uint8_t(q < 0 ? 0 : (q > 255 ? 255 : q))));
        }
    }
    write_file(path, buf);
}

}  // namespace cspat
