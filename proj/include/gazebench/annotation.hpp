#pragma once

#include "gazebench/rng.hpp"
#include "gazebench/synthworld.hpp"
#include "gazebench/tensor.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::annotation {

using synth::View;

enum class GazeLabel : int { Fixation = 0, Saccade = 1, Truncated = 2, Untracked = 3 };

std::string to_string(GazeLabel label);
GazeLabel label_from_string(const std::string& s);

struct Thresholds {
    double disp_threshold = 0.05;  // normalized units per frame
    double conf_threshold = 0.5;
};

// Gaze in normalized image coordinates; values outside [0,1) are off-image.
struct GazeSample {
    int frame = 0;
    View view = View::Neck;
    double x = 0.0;
    double y = 0.0;
    double confidence = 1.0;
    GazeLabel label = GazeLabel::Fixation;

    bool in_bounds() const { return x >= 0.0 && x < 1.0 && y >= 0.0 && y < 1.0; }
    friend bool operator==(const GazeSample&, const GazeSample&) = default;
};

struct RawSample {
    double x = 0.0;
    double y = 0.0;
    double confidence = 1.0;
    bool in_bounds = true;
};

GazeLabel classify_gaze_event(const std::optional<GazeSample>& prev, const RawSample& cur,
                              const Thresholds& th = {});

// Normalizes and labels one stream's raw gaze, frame by frame.
std::vector<GazeSample> label_stream(const synth::StreamRecord& stream, const Thresholds& th = {});

// Offset d with a[i] == b[i + d]. Negative ids are "no marker" and ignored.
// Throws NoOverlap (< 3 matches) or AmbiguousSync (tie between offsets).
int synchronize(std::span<const int> ids_a, std::span<const int> ids_b);

// Pixel index for a normalized coordinate: round-half-away-from-zero of
// (x*W - 0.5), clamped to [0, W-1].
int rasterize(double normalized, int size);

// H x W probability map.
Tensor make_heatmap_target(const GazeSample& sample, int height, int width, double sigma_px);

struct Clip {
    std::string session_id;
    View view = View::Neck;
    int start_frame = 0;    // index into the view's own stream
    int length = 0;
    std::vector<GazeSample> samples;
    std::vector<int> in_view;

    friend bool operator==(const Clip&, const Clip&) = default;
};

// Consecutive non-overlapping windows over the synchronized span of one view.
// `offset` is the recovered neck-minus-head frame offset. Remainders are dropped.
std::vector<Clip> segment_clips(const synth::SessionRecord& session, View view, double clip_len_s,
                                int offset, const std::string& session_id,
                                const Thresholds& th = {});

enum class SampleMode { Train, Eval };

// Throws ClipTooShort when length < (T-1)*stride + 1.
std::vector<int> sample_frames(int clip_length, int count, int stride, SampleMode mode, Rng& rng);

enum class CropMode { Left, Center, Right };

std::string to_string(CropMode mode);
int crop_origin(int width, int crop_w, CropMode mode);

struct Cropped {
    Tensor frames;  // T x H x crop_w
    std::vector<GazeSample> samples;
};

// frames is T x H x W. Gaze x is renormalized to the crop; in-view samples
// that leave the crop become truncated.
Cropped crop_augment(const Tensor& frames, std::span<const GazeSample> samples, CropMode mode,
                     int crop_w);
double uncrop_x(double cropped_x, int width, int crop_w, CropMode mode);

int in_view_label(const GazeSample& sample);

// Everything the annotation pipeline derives from one session.
struct AnnotatedSession {
    std::string session_id;
    int offset = 0;
    std::vector<GazeSample> head_labels;
    std::vector<GazeSample> neck_labels;
    std::vector<Clip> head_clips;
    std::vector<Clip> neck_clips;
    double max_mapping_error_px = 0.0;  // cross-view consistency check
};

// Marker ids decoded from rendered frames, or the recorded ids when the
// session has no frames.
std::vector<int> stream_marker_ids(const synth::StreamRecord& stream);

AnnotatedSession annotate_session(const synth::SessionRecord& session, const std::string& session_id,
                                  double clip_len_s, const Thresholds& th = {});

} // namespace gazebench::annotation
