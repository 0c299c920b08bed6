#include "gazebench/synthworld.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gazebench::synth {
namespace {

constexpr double kLandmarkPeak = 0.35;
constexpr double kLandmarkSigmaPx = 1.2;
constexpr double kTargetPeak = 1.0;

constexpr int kMarkerCols = 5;
constexpr int kMarkerRows = 6;  // finder + 4 data + parity
constexpr int kMarkerCellPx = 2;
constexpr int kFinder[kMarkerCols] = {1, 0, 1, 0, 1};

// Max-composites an isotropic Gaussian into the frame around (px, py),
// sampled at pixel centers.
void splat(std::span<double> frame, int width, int height, double px, double py,
           double peak, double sigma) {
    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    const int ci = static_cast<int>(std::floor(px));
    const int cj = static_cast<int>(std::floor(py));
    const double inv = 1.0 / (2.0 * sigma * sigma);
    for (int j = std::max(0, cj - radius); j <= std::min(height - 1, cj + radius); ++j) {
        const double dy = j + 0.5 - py;
        for (int i = std::max(0, ci - radius); i <= std::min(width - 1, ci + radius); ++i) {
            const double dx = i + 0.5 - px;
            const double v = peak * std::exp(-(dx * dx + dy * dy) * inv);
            double& dst = frame[static_cast<std::size_t>(j) * width + i];
            dst = std::max(dst, v);
        }
    }
}

std::optional<geometry::Projection> try_project(const Vec3& p, const CameraView& cam) {
    try {
        return geometry::project(p, cam);
    } catch (const BehindCamera&) {
        return std::nullopt;
    }
}

int marker_bit(int id, int row, int col) {
    const int idx = (row - 1) * kMarkerCols + col;
    return (id >> (kMarkerBits - 1 - idx)) & 1;
}

template <typename Pixel>
std::optional<int> decode_impl(std::span<const Pixel> frame, int width, int height, double scale) {
    if (width < kMarkerCols * kMarkerCellPx || height < kMarkerRows * kMarkerCellPx ||
        frame.size() < static_cast<std::size_t>(width) * height) {
        return std::nullopt;
    }
    int cells[kMarkerRows][kMarkerCols];
    for (int r = 0; r < kMarkerRows; ++r) {
        for (int c = 0; c < kMarkerCols; ++c) {
            double sum = 0.0;
            for (int dy = 0; dy < kMarkerCellPx; ++dy) {
                for (int dx = 0; dx < kMarkerCellPx; ++dx) {
                    const int x = c * kMarkerCellPx + dx;
                    const int y = r * kMarkerCellPx + dy;
                    sum += static_cast<double>(frame[static_cast<std::size_t>(y) * width + x]) * scale;
                }
            }
            cells[r][c] = sum / (kMarkerCellPx * kMarkerCellPx) > 0.5 ? 1 : 0;
        }
    }
    for (int c = 0; c < kMarkerCols; ++c) {
        if (cells[0][c] != kFinder[c]) return std::nullopt;
        int parity = 0;
        for (int r = 1; r <= 4; ++r) parity ^= cells[r][c];
        if (parity != cells[kMarkerRows - 1][c]) return std::nullopt;
    }
    int id = 0;
    for (int r = 1; r <= 4; ++r) {
        for (int c = 0; c < kMarkerCols; ++c) id = (id << 1) | cells[r][c];
    }
    return id;
}

// Gaze direction tangents (u, v) to yaw/pitch of the ray (u, v, 1).
double yaw_of(double u) { return std::atan(u); }
double pitch_of(double u, double v) { return std::atan2(-v, std::sqrt(1.0 + u * u)); }

} // namespace

std::string to_string(View v) { return v == View::Head ? "head" : "neck"; }

View view_from_string(const std::string& s) {
    if (s == "head") return View::Head;
    if (s == "neck") return View::Neck;
    throw FormatError("unknown view '" + s + "'");
}

int SceneConfig::frames_total() const { return static_cast<int>(std::lround(duration_s * fps)); }

int SceneConfig::marker_window_frames() const {
    return static_cast<int>(std::lround(marker_window_s * fps));
}

void SceneConfig::validate() const {
    if (!(fps > 0.0)) throw ConfigInvalid("fps must be positive");
    if (!(duration_s > 0.0)) throw ConfigInvalid("duration must be positive");
    if (width <= 0 || height <= 0) throw ConfigInvalid("image size must be positive");
    if (frames_total() < 1) throw ConfigInvalid("session shorter than one frame");
    head_intrinsics.validate();
    neck_intrinsics.validate();
    if (head_intrinsics.width != width || head_intrinsics.height != height ||
        neck_intrinsics.width != width || neck_intrinsics.height != height) {
        throw ConfigInvalid("intrinsics image size must match the configured frame size");
    }
    if (!(head_motion_rad >= 0.0) || !(neck_motion_rad >= 0.0)) {
        throw ConfigInvalid("motion amplitudes must be nonnegative");
    }
    if (neck_motion_rad > head_motion_rad) {
        throw ConfigInvalid("neck motion amplitude must not exceed head motion amplitude");
    }
    if (!(head_tracking_gain > 0.0 && head_tracking_gain <= 1.0)) {
        throw ConfigInvalid("head tracking gain must lie in (0, 1]");
    }
    if (!(torso_smoothing > 0.0 && torso_smoothing <= 1.0)) {
        throw ConfigInvalid("torso smoothing must lie in (0, 1]");
    }
    for (const Range* r : {&fixation_s, &saccade_amplitude, &gaze_u, &gaze_v, &target_depth_m}) {
        if (!r->nonempty()) throw ConfigInvalid("empty range in scene config");
    }
    if (!(fixation_s.lo > 0.0)) throw ConfigInvalid("fixation duration must be positive");
    if (!(saccade_amplitude.lo >= 0.0)) throw ConfigInvalid("saccade amplitude must be nonnegative");
    if (!(target_depth_m.lo > 0.1)) throw ConfigInvalid("gaze targets must be at least 0.1 m away");
    if (landmark_count < 0) throw ConfigInvalid("landmark count must be nonnegative");
    if (!(target_sigma_px > 0.0)) throw ConfigInvalid("target sigma must be positive");
    if (!(low_confidence_fraction >= 0.0 && low_confidence_fraction <= 1.0)) {
        throw ConfigInvalid("low confidence fraction must lie in [0, 1]");
    }
    if (marker_window_frames() < 1 || marker_window_frames() > frames_total()) {
        throw ConfigInvalid("marker window must cover between one frame and the whole session");
    }
    if (width < kMarkerCols * kMarkerCellPx || height < kMarkerRows * kMarkerCellPx) {
        throw ConfigInvalid("frame too small for the sync marker");
    }
}

std::span<const std::uint8_t> StreamRecord::frame(std::size_t i) const {
    const std::size_t px = static_cast<std::size_t>(intrinsics.width) * intrinsics.height;
    return std::span<const std::uint8_t>(frames).subspan(i * px, px);
}

int SessionRecord::synchronized_length() const {
    const auto head_len = static_cast<int>(head.length()) - std::max(-frame_offset, 0);
    const auto neck_len = static_cast<int>(neck.length()) - std::max(frame_offset, 0);
    return std::max(0, std::min(head_len, neck_len));
}

bool operator==(const StreamRecord& a, const StreamRecord& b) {
    return a.view == b.view && a.intrinsics == b.intrinsics && a.first_real_frame == b.first_real_frame && a.frames == b.frames &&
           a.poses == b.poses && a.gaze == b.gaze && a.marker_ids == b.marker_ids;
}

bool operator==(const SessionRecord& a, const SessionRecord& b) {
    return a.frame_offset == b.frame_offset && a.head == b.head && a.neck == b.neck &&
           a.gaze_targets == b.gaze_targets;
}

std::uint8_t quantize(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

std::vector<double> render_frame(std::span<const Vec3> landmarks, const Vec3& gaze_target,
                                 const CameraView& cam, double target_sigma_px) {
    const int w = cam.intrinsics.width;
    const int h = cam.intrinsics.height;
    std::vector<double> frame(static_cast<std::size_t>(w) * h, 0.0);
    for (const auto& lm : landmarks) {
        const auto p = try_project(lm, cam);
        if (p && p->pixel.in_bounds) {
            splat(frame, w, h, p->pixel.x, p->pixel.y, kLandmarkPeak, kLandmarkSigmaPx);
        }
    }
    const auto t = try_project(gaze_target, cam);
    if (t && t->pixel.in_bounds) {
        splat(frame, w, h, t->pixel.x, t->pixel.y, kTargetPeak, target_sigma_px);
    }
    return frame;
}

void embed_sync_marker(std::span<double> frame, int width, int height, int marker_id) {
    if (marker_id < 0) throw std::invalid_argument("marker id must be nonnegative");
    if (marker_id >= kMarkerCapacity) {
        throw MarkerOverflow("marker id " + std::to_string(marker_id) + " exceeds " +
                             std::to_string(kMarkerBits) + "-bit grid");
    }
    if (width < kMarkerCols * kMarkerCellPx || height < kMarkerRows * kMarkerCellPx ||
        frame.size() < static_cast<std::size_t>(width) * height) {
        throw ShapeMismatch("frame too small for the sync marker");
    }
    for (int c = 0; c < kMarkerCols; ++c) {
        int parity = 0;
        for (int r = 0; r < kMarkerRows; ++r) {
            int bit = 0;
            if (r == 0) {
                bit = kFinder[c];
            } else if (r == kMarkerRows - 1) {
                bit = parity;
            } else {
                bit = marker_bit(marker_id, r, c);
                parity ^= bit;
            }
            for (int dy = 0; dy < kMarkerCellPx; ++dy) {
                for (int dx = 0; dx < kMarkerCellPx; ++dx) {
                    const int x = c * kMarkerCellPx + dx;
                    const int y = r * kMarkerCellPx + dy;
                    frame[static_cast<std::size_t>(y) * width + x] = bit ? 1.0 : 0.0;
                }
            }
        }
    }
}

std::optional<int> decode_sync_marker(std::span<const double> frame, int width, int height) {
    return decode_impl(frame, width, height, 1.0);
}

std::optional<int> decode_sync_marker(std::span<const std::uint8_t> frame, int width, int height) {
    return decode_impl(frame, width, height, 1.0 / 255.0);
}

SessionRecord generate_session(const SceneConfig& config) {
    config.validate();

    Rng gaze_rng = Rng::derive(config.seed, 1);
    Rng motion_rng = Rng::derive(config.seed, 2);
    Rng scene_rng = Rng::derive(config.seed, 3);
    Rng conf_rng = Rng::derive(config.seed, 4);

    const int k = config.frame_offset;
    const int n = config.frames_total();
    const int lead = std::abs(k);
    const int total = lead + n;
    const int head_start = std::max(k, 0);
    const int neck_start = std::max(-k, 0);
    const int window = config.marker_window_frames();
    const int marker_base = static_cast<int>(scene_rng.uniform_int(0, 1 << 16));

    std::vector<Vec3> landmarks;
    landmarks.reserve(static_cast<std::size_t>(config.landmark_count));
    for (int i = 0; i < config.landmark_count; ++i) {
        landmarks.emplace_back(scene_rng.uniform(-1.6, 1.6), scene_rng.uniform(-1.0, 1.0),
                               scene_rng.uniform(0.6, 2.8));
    }

    SessionRecord rec;
    rec.config = config;
    rec.frame_offset = k;
    rec.head.view = View::Head;
    rec.head.intrinsics = config.head_intrinsics;
    rec.head.first_real_frame = head_start;
    rec.neck.view = View::Neck;
    rec.neck.intrinsics = config.neck_intrinsics;
    rec.neck.first_real_frame = neck_start;
    rec.gaze_targets.reserve(static_cast<std::size_t>(total));

    // Gaze process state.
    double u = gaze_rng.uniform(config.gaze_u.lo, config.gaze_u.hi);
    double v = gaze_rng.uniform(config.gaze_v.lo, config.gaze_v.hi);
    double depth = gaze_rng.uniform(config.target_depth_m.lo, config.target_depth_m.hi);
    auto fixation_frames = [&] {
        const double s = gaze_rng.uniform(config.fixation_s.lo, config.fixation_s.hi);
        return std::max(1, static_cast<int>(std::lround(s * config.fps)));
    };
    int remaining = fixation_frames();

    // Head and torso state.
    double head_yaw = yaw_of(u);
    double head_pitch = pitch_of(u, v);
    double torso_yaw = config.torso_follow * head_yaw;
    double jh_yaw = 0.0, jh_pitch = 0.0, jh_roll = 0.0;
    double jn_yaw = 0.0, jn_pitch = 0.0;
    constexpr double kHeadAr = 0.8;
    constexpr double kNeckAr = 0.95;
    const double head_innov = config.head_motion_rad * std::sqrt(1.0 - kHeadAr * kHeadAr);
    const double neck_innov = config.neck_motion_rad * std::sqrt(1.0 - kNeckAr * kNeckAr);

    const int rendered_w = config.width;
    const int rendered_h = config.height;
    const std::size_t px = static_cast<std::size_t>(rendered_w) * rendered_h;


    for (int real = 0; real < total; ++real) {
        if (real > 0 && --remaining <= 0) {
            const double amp = gaze_rng.uniform(config.saccade_amplitude.lo, config.saccade_amplitude.hi);
            double nu = u, nv = v;
            bool placed = false;
            for (int attempt = 0; attempt < 32 && !placed; ++attempt) {
                const double phi = gaze_rng.uniform(0.0, 2.0 * M_PI);
                nu = u + amp * std::cos(phi);
                nv = v + amp * std::sin(phi);
                placed = nu >= config.gaze_u.lo && nu <= config.gaze_u.hi &&
                         nv >= config.gaze_v.lo && nv <= config.gaze_v.hi;
            }
            if (!placed) {
                const double cu = 0.5 * (config.gaze_u.lo + config.gaze_u.hi) - u;
                const double cv = 0.5 * (config.gaze_v.lo + config.gaze_v.hi) - v;
                const double len = std::hypot(cu, cv);
                nu = len > 0.0 ? u + amp * cu / len : u + amp;
                nv = len > 0.0 ? v + amp * cv / len : v;
            }
            u = nu;
            v = nv;
            depth = gaze_rng.uniform(config.target_depth_m.lo, config.target_depth_m.hi);
            remaining = fixation_frames();
        }
        const Vec3 target = depth * Vec3(u, v, 1.0).normalized();
        rec.gaze_targets.push_back(target);

        const double g = config.head_tracking_gain;
        head_yaw += g * (yaw_of(u) - head_yaw);
        head_pitch += g * (pitch_of(u, v) - head_pitch);
        jh_yaw = kHeadAr * jh_yaw + head_innov * motion_rng.normal();
        jh_pitch = kHeadAr * jh_pitch + head_innov * motion_rng.normal();
        jh_roll = kHeadAr * jh_roll + 0.5 * head_innov * motion_rng.normal();
        torso_yaw += config.torso_smoothing * (config.torso_follow * head_yaw - torso_yaw);
        jn_yaw = kNeckAr * jn_yaw + neck_innov * motion_rng.normal();
        jn_pitch = kNeckAr * jn_pitch + neck_innov * motion_rng.normal();

        Pose head_pose;
        head_pose.rotation = geometry::rotation_from_ypr(head_yaw + jh_yaw, head_pitch + jh_pitch, jh_roll);
        head_pose.translation = Vec3::Zero();

        Pose neck_pose;
        neck_pose.rotation =
            geometry::rotation_from_ypr(torso_yaw + jn_yaw, config.neck_pitch_rad + jn_pitch, 0.0);
        const Vec3 neck_center =
            geometry::rotation_from_ypr(torso_yaw, 0.0, 0.0).transpose() *
            Vec3(0.0, config.neck_drop_m, config.neck_forward_m);
        neck_pose.translation = -neck_pose.rotation * neck_center;

        const double confidence =
            conf_rng.bernoulli(config.low_confidence_fraction) ? conf_rng.uniform(0.0, 0.4) : 1.0;

        const CameraView head_cam{config.head_intrinsics, head_pose};
        const CameraView neck_cam{config.neck_intrinsics, neck_pose};

        RawGaze head_gaze;
        RawGaze neck_gaze;
        head_gaze.confidence = confidence;
        neck_gaze.confidence = confidence;
        if (auto hp = try_project(target, head_cam)) {
            head_gaze.x = hp->pixel.x;
            head_gaze.y = hp->pixel.y;
            head_gaze.depth = hp->depth;
            head_gaze.in_bounds = hp->pixel.in_bounds;
        } else {
            head_gaze = RawGaze{-1.0, -1.0, head_pose.to_camera(target).z(), 0.0, false};
        }
        // Neck ground truth goes through the cross-view mapping whenever the
        // head measurement allows it, so the two paths agree bit for bit.
        try {
            if (head_gaze.in_bounds) {
                const geometry::PixelPoint hp{head_gaze.x, head_gaze.y, true};
                const auto mapped = geometry::map_gaze_cross_view(hp, head_gaze.depth, head_cam, neck_cam);
                const Vec3 world = geometry::back_project(head_gaze.x, head_gaze.y, head_gaze.depth,
                                                          head_cam.intrinsics, head_cam.pose);
                neck_gaze.x = mapped.x;
                neck_gaze.y = mapped.y;
                neck_gaze.in_bounds = mapped.in_bounds;
                neck_gaze.depth = neck_pose.to_camera(world).z();
            } else {
                const auto np = geometry::project(target, neck_cam);
                neck_gaze.x = np.pixel.x;
                neck_gaze.y = np.pixel.y;
                neck_gaze.in_bounds = np.pixel.in_bounds;
                neck_gaze.depth = np.depth;
            }
        } catch (const BehindCamera&) {
            neck_gaze = RawGaze{-1.0, -1.0, neck_pose.to_camera(target).z(), 0.0, false};
        }

        const int marker = (real >= lead && real < lead + window) ? marker_base + (real - lead) : -1;

        auto push = [&](StreamRecord& stream, const CameraView& cam, const RawGaze& raw) {
            stream.poses.push_back(cam.pose);
            stream.gaze.push_back(raw);
            stream.marker_ids.push_back(marker);
            if (config.render) {
                auto frame = render_frame(landmarks, target, cam, config.target_sigma_px);
                if (marker >= 0) embed_sync_marker(frame, rendered_w, rendered_h, marker);
                const std::size_t base = stream.frames.size();
                stream.frames.resize(base + px);
                for (std::size_t i = 0; i < px; ++i) stream.frames[base + i] = quantize(frame[i]);
            }
        };
        if (real >= head_start) push(rec.head, head_cam, head_gaze);
        if (real >= neck_start) push(rec.neck, neck_cam, neck_gaze);
    }
    return rec;
}

} // namespace gazebench::synth
