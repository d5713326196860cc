#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace sf::data {

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2, i32 = 3, i64 = 4 };

std::size_t dtype_size(Dtype d);
const char* dtype_name(Dtype d);

// One named, typed, shaped array. Payload is little-endian row-major bytes.
struct NamedArray {
    std::string name;
    Dtype dtype = Dtype::f32;
    std::vector<std::uint64_t> shape;
    std::vector<std::uint8_t> bytes;

    std::uint64_t element_count() const;

    static NamedArray from_f32(std::string name, const std::vector<float>& values,
                               std::vector<std::uint64_t> shape);
    static NamedArray from_f64(std::string name, const std::vector<double>& values,
                               std::vector<std::uint64_t> shape);
    static NamedArray from_u8(std::string name, const std::vector<std::uint8_t>& values,
                              std::vector<std::uint64_t> shape);
    std::vector<float> as_f32() const;
    std::vector<double> as_f64() const;
    std::vector<std::uint8_t> as_u8() const;
};

// Binary archive of named arrays. The index (names, dtypes, shapes) is part
// of the file; arrays round-trip bitwise. Writes are atomic (temp + rename).
void write_archive(const std::string& path, const std::vector<NamedArray>& arrays);
std::vector<NamedArray> read_archive(const std::string& path);

const NamedArray* find_array(const std::vector<NamedArray>& arrays, const std::string& name);

}  // namespace sf::data
