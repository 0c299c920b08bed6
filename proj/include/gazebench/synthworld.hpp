#pragma once

#include "gazebench/geometry.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::synth {

using geometry::CameraView;
using geometry::Intrinsics;
using geometry::Pose;
using geometry::Vec3;

enum class View : int { Head = 0, Neck = 1 };

std::string to_string(View v);
View view_from_string(const std::string& s);

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    bool nonempty() const { return lo <= hi; }
    friend bool operator==(const Range&, const Range&) = default;
};

// World frame: origin at the eye, x right, y down, z forward.
struct SceneConfig {
    double fps = 20.0;
    double duration_s = 180.0;
    int width = 64;
    int height = 64;
    Intrinsics head_intrinsics{40.0, 40.0, 32.0, 32.0, 64, 64};
    Intrinsics neck_intrinsics{44.5, 44.5, 32.0, 32.0, 64, 64};

    double neck_drop_m = 0.25;       // neck camera below eye level
    double neck_forward_m = 0.08;
    double neck_pitch_rad = 0.0;     // positive pitches up, negative down

    double head_motion_rad = 0.03;   // rotational jitter, head
    double neck_motion_rad = 0.008;  // rotational jitter, neck (must not exceed head)
    double head_tracking_gain = 0.35;  // fraction of the gaze-head gap closed per frame
    double torso_follow = 0.3;         // fraction of head yaw the torso follows
    double torso_smoothing = 0.05;     // low-pass gain of torso yaw per frame

    Range fixation_s{0.25, 1.2};
    Range saccade_amplitude{0.08, 0.6};  // jump length in normalized direction units
    Range gaze_u{-0.75, 0.75};           // horizontal tangent of gaze direction
    Range gaze_v{-0.55, 0.45};           // vertical tangent (positive is down)
    Range target_depth_m{0.45, 1.6};

    int landmark_count = 40;
    double target_sigma_px = 4.5;  // size of the rendered gaze target
    double low_confidence_fraction = 0.03;
    int frame_offset = 7;       // neck stream index minus head stream index for one instant
    double marker_window_s = 2.0;
    bool render = true;
    std::uint64_t seed = 0;

    int frames_total() const;   // synchronized length, duration * fps
    int marker_window_frames() const;
    // Throws ConfigInvalid.
    void validate() const;

    friend bool operator==(const SceneConfig&, const SceneConfig&) = default;
};

// Raw gaze measurement for one frame of one stream, in pixels.
struct RawGaze {
    double x = 0.0;
    double y = 0.0;
    double depth = 0.0;
    double confidence = 0.0;
    bool in_bounds = false;

    friend bool operator==(const RawGaze&, const RawGaze&) = default;
};

struct StreamRecord {
    View view = View::Head;
    Intrinsics intrinsics;
    int first_real_frame = 0;             // session time of this stream's frame 0
    std::vector<std::uint8_t> frames;     // length x H x W, empty when not rendered
    std::vector<Pose> poses;
    std::vector<RawGaze> gaze;
    std::vector<int> marker_ids;          // -1 where no marker is shown

    std::size_t length() const { return poses.size(); }
    std::span<const std::uint8_t> frame(std::size_t i) const;
    CameraView camera(std::size_t i) const { return {intrinsics, poses.at(i)}; }
};

struct SessionRecord {
    SceneConfig config;
    StreamRecord head;
    StreamRecord neck;
    std::vector<Vec3> gaze_targets;   // per session frame
    int frame_offset = 0;

    const StreamRecord& stream(View v) const { return v == View::Head ? head : neck; }
    // Number of frames both streams cover.
    int synchronized_length() const;
};

bool operator==(const StreamRecord& a, const StreamRecord& b);
bool operator==(const SessionRecord& a, const SessionRecord& b);

SessionRecord generate_session(const SceneConfig& config);

// Grayscale frame (row-major H x W) with values in [0, 1].
std::vector<double> render_frame(std::span<const Vec3> landmarks, const Vec3& gaze_target,
                                 const CameraView& cam, double target_sigma_px = 4.5);

// Sync marker: a 5-column grid of 2x2-pixel cells in the top-left corner.
// Row 0 is a fixed finder pattern, rows 1-4 carry 20 data bits, row 5 holds
// even column parity.
inline constexpr int kMarkerBits = 20;
inline constexpr int kMarkerCapacity = 1 << kMarkerBits;

// Throws MarkerOverflow for ids outside [0, kMarkerCapacity).
void embed_sync_marker(std::span<double> frame, int width, int height, int marker_id);
std::optional<int> decode_sync_marker(std::span<const double> frame, int width, int height);
std::optional<int> decode_sync_marker(std::span<const std::uint8_t> frame, int width, int height);

std::uint8_t quantize(double v);

} // namespace gazebench::synth
