#pragma once

// Checkpoint files:
//   magic "GZCK" | version u32 | config length u32 | config JSON bytes |
//   model count u32 | per model: name length u32, name, step u64,
//   tensor count u32, per tensor: name length u32, name, .gzt tensor record
// Optimizer moments are stored as flat tensors "adam.m" and "adam.v".

#include "gazebench/training.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace gazebench::checkpoint {

inline constexpr char kMagic[4] = {'G', 'Z', 'C', 'K'};
inline constexpr std::uint32_t kVersion = 1;

struct NamedModel {
    std::string name;  // "model" for single-model runs, "head"/"neck" for colearn
    training::ModelState state;

    friend bool operator==(const NamedModel&, const NamedModel&) = default;
};

struct Checkpoint {
    nlohmann::json config;
    std::vector<NamedModel> models;

    const NamedModel& find(const std::string& name) const;
};

std::vector<std::uint8_t> encode(const Checkpoint& ckpt);
// Throws CorruptCheckpoint for bad magic, version mismatch or truncation.
Checkpoint decode(std::span<const std::uint8_t> bytes);

void save(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load(const std::filesystem::path& path);

} // namespace gazebench::checkpoint
