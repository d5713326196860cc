#include "sceneflow/data/archive.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include "sceneflow/core/error.hpp"

namespace sf::data {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'R', 'C', '0', '0', '0', '1'};

template <typename T>
void write_le(std::ostream& out, T v) {
    // this codebase targets little-endian hosts; serialize the raw bytes
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& what) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw DataError("archive: truncated while reading " + what);
    return v;
}

}  // namespace

std::size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::u8: return 1;
        case Dtype::i32: return 4;
        case Dtype::i64: return 8;
    }
    throw DataError("archive: unknown dtype code");
}

const char* dtype_name(Dtype d) {
    switch (d) {
        case Dtype::f32: return "f32";
        case Dtype::f64: return "f64";
        case Dtype::u8: return "u8";
        case Dtype::i32: return "i32";
        case Dtype::i64: return "i64";
    }
    return "?";
}

std::uint64_t NamedArray::element_count() const {
    std::uint64_t n = 1;
    for (auto d : shape) n *= d;
    return n;
}

NamedArray NamedArray::from_f32(std::string name, const std::vector<float>& values,
                                std::vector<std::uint64_t> shape) {
    NamedArray a;
    a.name = std::move(name);
    a.dtype = Dtype::f32;
    a.shape = std::move(shape);
    a.bytes.resize(values.size() * 4);
    std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
    return a;
}

NamedArray NamedArray::from_f64(std::string name, const std::vector<double>& values,
                                std::vector<std::uint64_t> shape) {
    NamedArray a;
    a.name = std::move(name);
    a.dtype = Dtype::f64;
    a.shape = std::move(shape);
    a.bytes.resize(values.size() * 8);
    std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
    return a;
}

NamedArray NamedArray::from_u8(std::string name, const std::vector<std::uint8_t>& values,
                               std::vector<std::uint64_t> shape) {
    NamedArray a;
    a.name = std::move(name);
    a.dtype = Dtype::u8;
    a.shape = std::move(shape);
    a.bytes = values;
    return a;
}

std::vector<float> NamedArray::as_f32() const {
    if (dtype != Dtype::f32)
        throw DataError("archive: array '" + name + "' has dtype " + dtype_name(dtype) + ", expected f32");
    std::vector<float> out(bytes.size() / 4);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::vector<double> NamedArray::as_f64() const {
    if (dtype != Dtype::f64)
        throw DataError("archive: array '" + name + "' has dtype " + dtype_name(dtype) + ", expected f64");
    std::vector<double> out(bytes.size() / 8);
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

std::vector<std::uint8_t> NamedArray::as_u8() const {
    if (dtype != Dtype::u8)
        throw DataError("archive: array '" + name + "' has dtype " + dtype_name(dtype) + ", expected u8");
    return bytes;
}

void write_archive(const std::string& path, const std::vector<NamedArray>& arrays) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("archive: cannot open " + tmp + " for writing");
        out.write(kMagic, sizeof(kMagic));
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(arrays.size()));
        for (const auto& a : arrays) {
            if (a.element_count() * dtype_size(a.dtype) != a.bytes.size())
                throw InvalidArgument("archive: array '" + a.name + "' bytes do not match its shape");
            write_le<std::uint16_t>(out, static_cast<std::uint16_t>(a.name.size()));
            out.write(a.name.data(), static_cast<std::streamsize>(a.name.size()));
            write_le<std::uint8_t>(out, static_cast<std::uint8_t>(a.dtype));
            write_le<std::uint8_t>(out, static_cast<std::uint8_t>(a.shape.size()));
            for (auto d : a.shape) write_le<std::uint64_t>(out, d);
            write_le<std::uint64_t>(out, a.bytes.size());
            out.write(reinterpret_cast<const char*>(a.bytes.data()),
                      static_cast<std::streamsize>(a.bytes.size()));
        }
        if (!out) throw IoError("archive: write failed for " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("archive: cannot rename " + tmp + " to " + path + ": " + ec.message());
}

std::vector<NamedArray> read_archive(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("archive: cannot open " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError("archive: bad magic in " + path);
    const auto count = read_le<std::uint32_t>(in, "array count");
    std::vector<NamedArray> arrays;
    arrays.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        NamedArray a;
        const auto name_len = read_le<std::uint16_t>(in, "name length");
        a.name.resize(name_len);
        in.read(a.name.data(), name_len);
        if (!in) throw DataError("archive: truncated name");
        const auto dtype_code = read_le<std::uint8_t>(in, "dtype of '" + a.name + "'");
        if (dtype_code > 4) throw DataError("archive: unknown dtype for array '" + a.name + "'");
        a.dtype = static_cast<Dtype>(dtype_code);
        const auto ndim = read_le<std::uint8_t>(in, "rank of '" + a.name + "'");
        a.shape.resize(ndim);
        for (auto& d : a.shape) d = read_le<std::uint64_t>(in, "shape of '" + a.name + "'");
        const auto nbytes = read_le<std::uint64_t>(in, "byte length of '" + a.name + "'");
        if (nbytes != a.element_count() * dtype_size(a.dtype))
            throw DataError("archive: byte length of '" + a.name + "' does not match its shape");
        a.bytes.resize(nbytes);
        in.read(reinterpret_cast<char*>(a.bytes.data()), static_cast<std::streamsize>(nbytes));
        if (!in) throw DataError("archive: truncated payload of '" + a.name + "'");
        arrays.push_back(std::move(a));
    }
    return arrays;
}

const NamedArray* find_array(const std::vector<NamedArray>& arrays, const std::string& name) {
    for (const auto& a : arrays)
        if (a.name == name) return &a;
    return nullptr;
}

}  // namespace sf::data
