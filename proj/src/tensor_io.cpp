#include "gazebench/tensor_io.hpp"

#include "gazebench/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace gazebench::tensor_io {
namespace {

static_assert(std::endian::native == std::endian::little,
              "tensor_io assumes a little-endian host");

constexpr std::uint32_t kMaxRank = 16;

void read_exact(std::istream& in, void* dst, std::size_t n) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw FormatError("unexpected end of tensor stream");
    }
}

template <typename T>
std::vector<std::uint8_t> to_bytes(std::span<const T> values) {
    std::vector<std::uint8_t> bytes(values.size_bytes());
    if (!bytes.empty()) {
        std::memcpy(bytes.data(), values.data(), bytes.size());
    }
    return bytes;
}

template <typename T>
std::vector<T> from_bytes(const std::vector<std::uint8_t>& bytes) {
    std::vector<T> out(bytes.size() / sizeof(T));
    if (!out.empty()) {
        std::memcpy(out.data(), bytes.data(), out.size() * sizeof(T));
    }
    return out;
}

std::size_t product(const std::vector<std::uint32_t>& dims) {
    std::size_t n = 1;
    for (auto d : dims) {
        n *= d;
    }
    return n;
}

} // namespace

std::size_t dtype_size(DType dtype) {
    switch (dtype) {
    case DType::U8: return 1;
    case DType::F32: return 4;
    case DType::F64: return 8;
    }
    throw FormatError("unknown dtype code");
}

std::size_t Blob::element_count() const { return product(dims); }

Blob Blob::from_u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values) {
    if (product(dims) != values.size()) {
        throw ShapeMismatch("u8 payload does not match dims");
    }
    return {std::move(dims), DType::U8, to_bytes(values)};
}

Blob Blob::from_f32(std::vector<std::uint32_t> dims, std::span<const float> values) {
    if (product(dims) != values.size()) {
        throw ShapeMismatch("f32 payload does not match dims");
    }
    return {std::move(dims), DType::F32, to_bytes(values)};
}

Blob Blob::from_f64(std::vector<std::uint32_t> dims, std::span<const double> values) {
    if (product(dims) != values.size()) {
        throw ShapeMismatch("f64 payload does not match dims");
    }
    return {std::move(dims), DType::F64, to_bytes(values)};
}

Blob Blob::from_tensor(const Tensor& t) {
    std::vector<std::uint32_t> dims(t.shape().begin(), t.shape().end());
    return from_f64(std::move(dims), t.values());
}

std::vector<std::uint8_t> Blob::as_u8() const {
    if (dtype != DType::U8) throw FormatError("tensor is not u8");
    return payload;
}

std::vector<float> Blob::as_f32() const {
    if (dtype != DType::F32) throw FormatError("tensor is not f32");
    return from_bytes<float>(payload);
}

std::vector<double> Blob::as_f64() const {
    if (dtype != DType::F64) throw FormatError("tensor is not f64");
    return from_bytes<double>(payload);
}

Tensor Blob::to_tensor() const {
    Tensor t(std::vector<int>(dims.begin(), dims.end()));
    switch (dtype) {
    case DType::U8:
        for (std::size_t i = 0; i < payload.size(); ++i) t[i] = payload[i];
        break;
    case DType::F32: {
        const auto v = as_f32();
        for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i];
        break;
    }
    case DType::F64: {
        const auto v = as_f64();
        std::copy(v.begin(), v.end(), t.data());
        break;
    }
    }
    return t;
}

void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    read_exact(in, &v, sizeof(v));
    return v;
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    read_exact(in, &v, sizeof(v));
    return v;
}

void write(std::ostream& out, const Blob& blob) {
    if (blob.payload.size() != blob.element_count() * dtype_size(blob.dtype)) {
        throw ShapeMismatch("payload size does not match dims and dtype");
    }
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(blob.dims.size()));
    for (auto d : blob.dims) put_u32(out, d);
    const auto code = static_cast<std::uint8_t>(blob.dtype);
    out.write(reinterpret_cast<const char*>(&code), 1);
    out.write(reinterpret_cast<const char*>(blob.payload.data()),
              static_cast<std::streamsize>(blob.payload.size()));
}

Blob read(std::istream& in) {
    char magic[4];
    read_exact(in, magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw FormatError("bad tensor magic");
    }
    if (get_u32(in) != kVersion) {
        throw FormatError("unsupported tensor version");
    }
    const auto rank = get_u32(in);
    if (rank > kMaxRank) {
        throw FormatError("tensor rank too large");
    }
    Blob blob;
    blob.dims.resize(rank);
    for (auto& d : blob.dims) d = get_u32(in);
    std::uint8_t code = 0;
    read_exact(in, &code, 1);
    if (code > static_cast<std::uint8_t>(DType::F64)) {
        throw FormatError("unknown dtype code");
    }
    blob.dtype = static_cast<DType>(code);
    blob.payload.resize(blob.element_count() * dtype_size(blob.dtype));
    read_exact(in, blob.payload.data(), blob.payload.size());
    return blob;
}

void write_file(const std::filesystem::path& path, const Blob& blob) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write(out, blob);
    if (!out) throw Error("write failed for " + path.string());
}

Blob read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read(in);
}

} // namespace gazebench::tensor_io
