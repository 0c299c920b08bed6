#pragma once

// Binary tensor files (.gzt):
//   magic "GZTN" | version u32 | rank u32 | dims u32 x rank | dtype u8 | payload
// All integers and payload elements are little-endian, payload row-major.

#include "gazebench/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace gazebench::tensor_io {

inline constexpr char kMagic[4] = {'G', 'Z', 'T', 'N'};
inline constexpr std::uint32_t kVersion = 1;

enum class DType : std::uint8_t { U8 = 0, F32 = 1, F64 = 2 };

std::size_t dtype_size(DType dtype);

struct Blob {
    std::vector<std::uint32_t> dims;
    DType dtype = DType::U8;
    std::vector<std::uint8_t> payload;  // little-endian element bytes

    std::size_t element_count() const;

    static Blob from_u8(std::vector<std::uint32_t> dims, std::span<const std::uint8_t> values);
    static Blob from_f32(std::vector<std::uint32_t> dims, std::span<const float> values);
    static Blob from_f64(std::vector<std::uint32_t> dims, std::span<const double> values);
    static Blob from_tensor(const Tensor& t);

    std::vector<std::uint8_t> as_u8() const;
    std::vector<float> as_f32() const;
    std::vector<double> as_f64() const;
    // Widening conversion from any dtype.
    Tensor to_tensor() const;
};

void write(std::ostream& out, const Blob& blob);
// Throws FormatError on bad magic, unsupported version or dtype, or truncation.
Blob read(std::istream& in);

void write_file(const std::filesystem::path& path, const Blob& blob);
Blob read_file(const std::filesystem::path& path);

// Little-endian scalar helpers shared with the checkpoint writer.
void put_u32(std::ostream& out, std::uint32_t v);
void put_u64(std::ostream& out, std::uint64_t v);
std::uint32_t get_u32(std::istream& in);
std::uint64_t get_u64(std::istream& in);

} // namespace gazebench::tensor_io
