#include "gazebench/annotation.hpp"

#include "gazebench/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace gazebench::annotation {

std::string to_string(GazeLabel label) {
    switch (label) {
    case GazeLabel::Fixation: return "fixation";
    case GazeLabel::Saccade: return "saccade";
    case GazeLabel::Truncated: return "truncated";
    case GazeLabel::Untracked: return "untracked";
    }
    return "unknown";
}

GazeLabel label_from_string(const std::string& s) {
    if (s == "fixation") return GazeLabel::Fixation;
    if (s == "saccade") return GazeLabel::Saccade;
    if (s == "truncated") return GazeLabel::Truncated;
    if (s == "untracked") return GazeLabel::Untracked;
    throw FormatError("unknown gaze label '" + s + "'");
}

GazeLabel classify_gaze_event(const std::optional<GazeSample>& prev, const RawSample& cur,
                              const Thresholds& th) {
    if (cur.confidence < th.conf_threshold) return GazeLabel::Untracked;
    if (!cur.in_bounds) return GazeLabel::Truncated;
    if (prev && prev->in_bounds()) {
        const double disp = std::hypot(cur.x - prev->x, cur.y - prev->y);
        if (disp > th.disp_threshold) return GazeLabel::Saccade;
    }
    return GazeLabel::Fixation;
}

std::vector<GazeSample> label_stream(const synth::StreamRecord& stream, const Thresholds& th) {
    std::vector<GazeSample> out;
    out.reserve(stream.gaze.size());
    const double w = stream.intrinsics.width;
    const double h = stream.intrinsics.height;
    std::optional<GazeSample> prev;
    for (std::size_t i = 0; i < stream.gaze.size(); ++i) {
        const auto& g = stream.gaze[i];
        RawSample raw{g.x / w, g.y / h, g.confidence, g.in_bounds};
        GazeSample s;
        s.frame = static_cast<int>(i);
        s.view = stream.view;
        s.x = raw.x;
        s.y = raw.y;
        s.confidence = raw.confidence;
        s.label = classify_gaze_event(prev, raw, th);
        out.push_back(s);
        prev = s;
    }
    return out;
}

int synchronize(std::span<const int> ids_a, std::span<const int> ids_b) {
    if (ids_a.empty() || ids_b.empty()) {
        throw std::invalid_argument("synchronize: marker sequences must be nonempty");
    }
    std::unordered_multimap<int, int> where_b;
    for (std::size_t j = 0; j < ids_b.size(); ++j) {
        if (ids_b[j] >= 0) where_b.emplace(ids_b[j], static_cast<int>(j));
    }
    std::map<int, int> votes;
    for (std::size_t i = 0; i < ids_a.size(); ++i) {
        if (ids_a[i] < 0) continue;
        auto [lo, hi] = where_b.equal_range(ids_a[i]);
        for (auto it = lo; it != hi; ++it) ++votes[it->second - static_cast<int>(i)];
    }
    int best = 0;
    int best_votes = 0;
    bool tie = false;
    for (const auto& [offset, count] : votes) {
        if (count > best_votes) {
            best = offset;
            best_votes = count;
            tie = false;
        } else if (count == best_votes) {
            tie = true;
        }
    }
    if (best_votes < 3) {
        throw NoOverlap("no offset aligns at least 3 markers (best " + std::to_string(best_votes) + ")");
    }
    if (tie) throw AmbiguousSync("several offsets align " + std::to_string(best_votes) + " markers");
    return best;
}

int rasterize(double normalized, int size) {
    const double idx = std::round(normalized * size - 0.5);
    return static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(size - 1)));
}

Tensor make_heatmap_target(const GazeSample& sample, int height, int width, double sigma_px) {
    if (height < 4 || width < 4) throw std::invalid_argument("heatmap must be at least 4x4");
    if (!(sigma_px > 0.0)) throw std::invalid_argument("heatmap sigma must be positive");
    Tensor map({height, width});
    if (in_view_label(sample) == 0) {
        map.fill(1.0 / (static_cast<double>(height) * width));
        return map;
    }
    const int cx = rasterize(sample.x, width);
    const int cy = rasterize(sample.y, height);
    const double inv = 1.0 / (2.0 * sigma_px * sigma_px);
    double total = 0.0;
    for (int j = 0; j < height; ++j) {
        for (int i = 0; i < width; ++i) {
            const double d2 = static_cast<double>((i - cx) * (i - cx) + (j - cy) * (j - cy));
            const double v = std::exp(-d2 * inv);
            map[static_cast<std::size_t>(j) * width + i] = v;
            total += v;
        }
    }
    for (auto& v : map.values()) v /= total;
    return map;
}

std::vector<Clip> segment_clips(const synth::SessionRecord& session, View view, double clip_len_s,
                                int offset, const std::string& session_id, const Thresholds& th) {
    const double fps = session.config.fps;
    const double exact = clip_len_s * fps;
    const int clip_frames = static_cast<int>(std::lround(exact));
    if (clip_frames <= 0 || std::abs(exact - clip_frames) > 1e-9) {
        throw std::invalid_argument("segment_clips: clip length times fps must be a positive integer");
    }
    const auto& stream = session.stream(view);
    const int head_start = std::max(-offset, 0);
    const int neck_start = std::max(offset, 0);
    const int sync_len = std::max(0, std::min(static_cast<int>(session.head.length()) - head_start,
                                              static_cast<int>(session.neck.length()) - neck_start));
    const int start = view == View::Head ? head_start : neck_start;
    const auto labels = label_stream(stream, th);

    std::vector<Clip> clips;
    for (int c = 0; (c + 1) * clip_frames <= sync_len; ++c) {
        Clip clip;
        clip.session_id = session_id;
        clip.view = view;
        clip.start_frame = start + c * clip_frames;
        clip.length = clip_frames;
        clip.samples.assign(labels.begin() + clip.start_frame,
                            labels.begin() + clip.start_frame + clip_frames);
        for (const auto& s : clip.samples) clip.in_view.push_back(in_view_label(s));
        clips.push_back(std::move(clip));
    }
    return clips;
}

std::vector<int> sample_frames(int clip_length, int count, int stride, SampleMode mode, Rng& rng) {
    if (count < 1 || stride < 1) throw std::invalid_argument("sample_frames: count and stride must be positive");
    const int span = (count - 1) * stride + 1;
    if (clip_length < span) {
        throw ClipTooShort("clip of " + std::to_string(clip_length) + " frames, need " +
                           std::to_string(span));
    }
    const int start = mode == SampleMode::Eval
                          ? 0
                          : static_cast<int>(rng.uniform_int(0, clip_length - span));
    std::vector<int> idx(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) idx[static_cast<std::size_t>(t)] = start + t * stride;
    return idx;
}

std::string to_string(CropMode mode) {
    switch (mode) {
    case CropMode::Left: return "left";
    case CropMode::Center: return "center";
    case CropMode::Right: return "right";
    }
    return "unknown";
}

int crop_origin(int width, int crop_w, CropMode mode) {
    if (crop_w <= 0 || crop_w > width) throw std::invalid_argument("crop width must lie in (0, W]");
    switch (mode) {
    case CropMode::Left: return 0;
    case CropMode::Center: return (width - crop_w) / 2;
    case CropMode::Right: return width - crop_w;
    }
    return 0;
}

Cropped crop_augment(const Tensor& frames, std::span<const GazeSample> samples, CropMode mode,
                     int crop_w) {
    if (frames.rank() != 3) throw ShapeMismatch("crop_augment expects T x H x W frames");
    const int t_count = frames.dim(0);
    const int h = frames.dim(1);
    const int w = frames.dim(2);
    const int x0 = crop_origin(w, crop_w, mode);

    Cropped out{Tensor({t_count, h, crop_w}), {}};
    for (int t = 0; t < t_count; ++t) {
        for (int j = 0; j < h; ++j) {
            const double* src = frames.data() + (static_cast<std::size_t>(t) * h + j) * w + x0;
            double* dst = out.frames.data() + (static_cast<std::size_t>(t) * h + j) * crop_w;
            std::copy(src, src + crop_w, dst);
        }
    }
    out.samples.reserve(samples.size());
    for (GazeSample s : samples) {
        s.x = (s.x * w - x0) / crop_w;
        if (in_view_label(s) == 1 && !s.in_bounds()) s.label = GazeLabel::Truncated;
        out.samples.push_back(s);
    }
    return out;
}

double uncrop_x(double cropped_x, int width, int crop_w, CropMode mode) {
    return (cropped_x * crop_w + crop_origin(width, crop_w, mode)) / width;
}

int in_view_label(const GazeSample& sample) {
    return sample.label == GazeLabel::Fixation || sample.label == GazeLabel::Saccade ? 1 : 0;
}

std::vector<int> stream_marker_ids(const synth::StreamRecord& stream) {
    if (stream.frames.empty()) return stream.marker_ids;
    std::vector<int> ids;
    ids.reserve(stream.length());
    for (std::size_t i = 0; i < stream.length(); ++i) {
        const auto id = synth::decode_sync_marker(stream.frame(i), stream.intrinsics.width,
                                                  stream.intrinsics.height);
        ids.push_back(id.value_or(-1));
    }
    return ids;
}

AnnotatedSession annotate_session(const synth::SessionRecord& session, const std::string& session_id,
                                  double clip_len_s, const Thresholds& th) {
    AnnotatedSession out;
    out.session_id = session_id;
    const auto head_ids = stream_marker_ids(session.head);
    const auto neck_ids = stream_marker_ids(session.neck);
    out.offset = synchronize(head_ids, neck_ids);

    // Re-derive every neck measurement from its synchronized head partner.
    for (std::size_t i = 0; i < session.head.length(); ++i) {
        const long j = static_cast<long>(i) + out.offset;
        if (j < 0 || j >= static_cast<long>(session.neck.length())) continue;
        const auto& hg = session.head.gaze[i];
        const auto& ng = session.neck.gaze[static_cast<std::size_t>(j)];
        if (!hg.in_bounds || ng.confidence <= 0.0 || hg.confidence <= 0.0) continue;
        try {
            const auto mapped = geometry::map_gaze_cross_view(
                {hg.x, hg.y, true}, hg.depth, session.head.camera(i),
                session.neck.camera(static_cast<std::size_t>(j)));
            out.max_mapping_error_px =
                std::max(out.max_mapping_error_px, std::hypot(mapped.x - ng.x, mapped.y - ng.y));
        } catch (const BehindCamera&) {
            out.max_mapping_error_px = std::numeric_limits<double>::infinity();
        }
    }

    out.head_labels = label_stream(session.head, th);
    out.neck_labels = label_stream(session.neck, th);
    out.head_clips = segment_clips(session, View::Head, clip_len_s, out.offset, session_id, th);
    out.neck_clips = segment_clips(session, View::Neck, clip_len_s, out.offset, session_id, th);
    return out;
}

} // namespace gazebench::annotation
