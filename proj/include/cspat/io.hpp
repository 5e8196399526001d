#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cspat/image.hpp"
#include "cspat/measure.hpp"
#include "cspat/net.hpp"

namespace cspat {

// Binary tensor container, magic "PATT". All integers and the float32
// payload are little-endian regardless of host order.
struct TensorData {
    std::vector<uint32_t> dims;
    std::vector<double> data;  // widened from the float32 payload

    size_t count() const {
        size_t n = 1;
        for (uint32_t d : dims) n *= d;
        return dims.empty() ? 0 : n;
    }
};

void append_tensor(std::string& buf, const std::vector<uint32_t>& dims,
                   const std::vector<double>& data);
TensorData parse_tensor(const std::string& buf, size_t& pos);

void save_tensor(const std::string& path, const std::vector<uint32_t>& dims,
                 const std::vector<double>& data);
TensorData load_tensor(const std::string& path);

// Image payloads are rank 2 with dims {ny, nx} in row-major y-then-x order,
// matching Image::values.
void save_image(const std::string& path, const Image& img);
Image tensor_to_image(const TensorData& t, const ImageGrid& grid);

void save_sensor_data(const std::string& path, const SensorData& d);  // dims {M, Q}
void save_cs_data(const std::string& path, const CSData& d);          // dims {m, Q}

// Named-tensor container, magic "PATW": u32 count, then per tensor a u16
// name length, the UTF-8 name, and an embedded "PATT" record; a UTF-8 JSON
// manifest occupies the remaining bytes.
void save_weights(const std::string& path, const NetParams& params, uint64_t seed,
                  const std::string& train_config_json = "");
NetParams load_weights(const std::string& path);

// Measurement matrices reuse the named-tensor container: one dense "entries"
// tensor plus a manifest recording kind/seed/shape so the exact double-valued
// matrix can be regenerated on load (the float32 payload is a checksum).
void save_matrix(const std::string& path, const MeasMatrix& m);
MeasMatrix load_matrix(const std::string& path);

// 8-bit binary PGM (P5) after min-max normalization; rows written north-up.
void export_pgm(const std::string& path, const Image& img);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& bytes);

}  // namespace cspat
