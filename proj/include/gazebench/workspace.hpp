#pragma once

// A data directory holds one subdirectory per session plus:
//   manifest.json  sessions with their seeds and the scene config echo
//   clips.jsonl    clip index written by annotate
//   split.json     train/test session lists written by annotate

#include "gazebench/config.hpp"
#include "gazebench/training.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace gazebench::workspace {

struct SessionEntry {
    std::string id;
    std::uint64_t seed = 0;

    friend bool operator==(const SessionEntry&, const SessionEntry&) = default;
};

struct Manifest {
    std::uint64_t seed = 0;
    synth::SceneConfig scene;
    std::vector<SessionEntry> sessions;
};

std::string session_id(std::size_t index);

// Writes `count` sessions seeded seed..seed+count-1 and the manifest.
Manifest generate(const std::filesystem::path& dir, const synth::SceneConfig& scene, std::uint64_t seed,
                  int count);

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest);
// Throws NoSessions when the manifest is missing or lists nothing.
Manifest read_manifest(const std::filesystem::path& dir);

struct Split {
    std::vector<std::string> train;
    std::vector<std::string> test;

    const std::vector<std::string>& get(const std::string& name) const;
};

// Whole sessions, in manifest order: the last round(n * test_fraction)
// go to test, keeping at least one session on each side when n >= 2.
Split make_split(const Manifest& manifest, double test_fraction);
void write_split(const std::filesystem::path& dir, const Split& split);
Split read_split(const std::filesystem::path& dir);

struct SessionSummary {
    std::string id;
    int offset = 0;
    double max_mapping_error_px = 0.0;
    std::size_t head_clips = 0;
    std::size_t neck_clips = 0;
};

struct AnnotateSummary {
    std::vector<SessionSummary> sessions;
    Split split;
};

// Synchronizes, verifies mapping, labels and segments every session; writes
// clips.jsonl and split.json, and targets_<view>.gzt when asked.
AnnotateSummary annotate(const std::filesystem::path& dir, const config::RunConfig& config, bool write_targets);

training::TrainingClip to_training_clip(const synth::SessionRecord& session, const annotation::Clip& clip);
training::ClipPair make_clip_pair(const synth::SessionRecord& session, const annotation::Clip& head,
                                  const annotation::Clip& neck, int offset);

// `wanted` indices spread evenly over [0, available).
std::vector<std::size_t> spread(std::size_t available, std::size_t wanted);

// Clips (or head/neck pairs for colearn) from the named sessions. At most
// `max_clips` in total, spread evenly over each session; 0 means all.
training::TrainingData load_data(const std::filesystem::path& dir, const std::vector<std::string>& sessions,
                                 training::Variant variant, int max_clips, const config::RunConfig& config);

} // namespace gazebench::workspace
