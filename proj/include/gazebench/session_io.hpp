#pragma once

// Session directory layout:
//   meta.json          config echo, fps, frame size, intrinsics, stream spans
//   poses.jsonl        {"frame", "view", "rotation" (9, row-major), "translation" (3)}
//   gaze.jsonl         {"frame", "view", "x", "y", "depth", "confidence", "in_bounds"}
//   markers.jsonl      {"frame", "view", "id"} for frames that show a marker
//   targets3d.jsonl    {"frame", "point"} ground-truth gaze target per session frame
//   frames_<view>.gzt  u8 tensor [n, H, W, 1], only when rendered
// Records are ordered head stream first, then neck, by frame.

#include "gazebench/synthworld.hpp"

#include <filesystem>

namespace gazebench::session_io {

void write_session(const std::filesystem::path& dir, const synth::SessionRecord& session);

// Throws FormatError for missing or malformed files.
synth::SessionRecord read_session(const std::filesystem::path& dir, bool load_frames = true);

std::filesystem::path frames_path(const std::filesystem::path& dir, synth::View view);

} // namespace gazebench::session_io
