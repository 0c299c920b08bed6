#include "gazebench/annotation.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"
#include "gazebench/synthworld.hpp"

#include "doctest.h"
#include "oracles.hpp"

#include <cmath>
#include <numeric>
#include <vector>

using namespace gazebench;
using namespace gazebench::annotation;

namespace {

GazeSample at(double x, double y, GazeLabel label = GazeLabel::Fixation) {
    GazeSample s;
    s.x = x;
    s.y = y;
    s.label = label;
    return s;
}

double total(const Tensor& t) {
    const auto v = t.values();
    return std::accumulate(v.begin(), v.end(), 0.0);
}

std::size_t argmax(const Tensor& t) {
    const auto v = t.values();
    return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

} // namespace

TEST_CASE("four-way labeling rule") {
    Thresholds th;
    th.disp_threshold = 0.02;
    const auto prev = at(0.5, 0.5);
    CHECK(classify_gaze_event(prev, {0.505, 0.5, 1.0, true}, th) == GazeLabel::Fixation);
    CHECK(classify_gaze_event(prev, {0.6, 0.5, 1.0, true}, th) == GazeLabel::Saccade);
    CHECK(classify_gaze_event(prev, {1.2, 0.5, 1.0, false}, th) == GazeLabel::Truncated);
    CHECK(classify_gaze_event(prev, {0.5, 0.5, 0.1, true}, th) == GazeLabel::Untracked);
    CHECK(classify_gaze_event(prev, {1.2, 0.5, 0.1, false}, th) == GazeLabel::Untracked);
    // no previous frame, or previous off-image: fixation
    CHECK(classify_gaze_event(std::nullopt, {0.9, 0.1, 1.0, true}, th) == GazeLabel::Fixation);
    CHECK(classify_gaze_event(at(1.3, 0.5, GazeLabel::Truncated), {0.1, 0.1, 1.0, true}, th) ==
          GazeLabel::Fixation);
}

TEST_CASE("stream labels agree with a from-scratch labeler") {
    for (std::uint64_t seed : {1, 2, 3}) {
        synth::SceneConfig c;
        c.duration_s = 30.0;
        c.render = false;
        c.seed = seed;
        c.low_confidence_fraction = 0.1;
        const auto s = synth::generate_session(c);
        const Thresholds th;
        for (const auto* stream : {&s.head, &s.neck}) {
            const auto got = label_stream(*stream, th);
            const auto want = oracle::labels(*stream, th.disp_threshold, th.conf_threshold);
            REQUIRE(got.size() == want.size());
            for (std::size_t i = 0; i < got.size(); ++i) REQUIRE(got[i].label == want[i]);
        }
    }
}

TEST_CASE("synchronize finds the marker offset") {
    const std::vector<int> a{5, 6, 7, 8};
    const std::vector<int> b{3, 4, 5, 6, 7, 8, 9};
    CHECK(synchronize(a, b) == 2);
    CHECK(synchronize(b, a) == -2);
    CHECK(synchronize(b, b) == 0);
    const std::vector<int> gaps{-1, -1, 5, 6, -1, 8};
    CHECK(synchronize(gaps, b) == 0);
}

TEST_CASE("synchronize errors") {
    const std::vector<int> a{1, 2};
    const std::vector<int> b{1, 2, 3};
    CHECK_THROWS_AS(synchronize(a, b), NoOverlap);
    const std::vector<int> c{10, 11, 12};
    CHECK_THROWS_AS(synchronize(c, b), NoOverlap);
    // repeated ids make two offsets equally good
    const std::vector<int> rep{1, 2, 3, 1, 2, 3};
    const std::vector<int> one{1, 2, 3};
    CHECK_THROWS_AS(synchronize(one, rep), AmbiguousSync);
}

TEST_CASE("synchronize recovers injected offsets from rendered markers") {
    Rng rng(31);
    for (int i = 0; i < 12; ++i) {
        synth::SceneConfig c;
        c.duration_s = 3.0;
        c.seed = 100 + static_cast<std::uint64_t>(i);
        c.frame_offset = static_cast<int>(rng.uniform_int(-100, 100));
        c.marker_window_s = 3.0;
        const auto s = synth::generate_session(c);
        const auto ha = stream_marker_ids(s.head);
        const auto nb = stream_marker_ids(s.neck);
        CHECK(synchronize(ha, nb) == c.frame_offset);
    }
}

TEST_CASE("rasterize rounds half away from zero and clamps") {
    CHECK(rasterize(0.25, 64) == 16);   // 15.5 -> 16
    CHECK(rasterize(0.75, 64) == 48);   // 47.5 -> 48
    CHECK(rasterize(0.5, 64) == 32);    // 31.5 -> 32
    CHECK(rasterize(0.0, 64) == 0);     // -0.5 -> -1 -> 0
    CHECK(rasterize(0.999, 64) == 63);
    CHECK(rasterize(1.5, 64) == 63);
    CHECK(rasterize(-0.3, 64) == 0);
}

TEST_CASE("heatmap targets") {
    const auto uniform = make_heatmap_target(at(1.2, 0.5, GazeLabel::Truncated), 64, 64, 3.0);
    for (double v : uniform.values()) CHECK(v == doctest::Approx(1.0 / 4096.0).epsilon(1e-12));
    const auto untracked = make_heatmap_target(at(0.2, 0.5, GazeLabel::Untracked), 64, 64, 3.0);
    CHECK(untracked == uniform);

    const auto center = make_heatmap_target(at(0.5, 0.5), 64, 64, 3.0);
    CHECK(std::abs(total(center) - 1.0) < 1e-6);
    CHECK(argmax(center) == 32u * 64u + 32u);

    const auto off = make_heatmap_target(at(0.25, 0.75), 64, 64, 3.0);
    CHECK(std::abs(total(off) - 1.0) < 1e-6);
    CHECK(argmax(off) == 48u * 64u + 16u);
    double inside = 0.0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            if (std::hypot(x - 16.0, y - 48.0) <= 9.0) inside += off[static_cast<std::size_t>(y * 64 + x)];
        }
    }
    CHECK(inside >= 0.98);
}

TEST_CASE("heatmaps sum to one and peak at the rasterized pixel everywhere") {
    Rng rng(4);
    for (int i = 0; i < 300; ++i) {
        const double x = rng.uniform(0.0, 0.9999);
        const double y = rng.uniform(0.0, 0.9999);
        const auto label = i % 2 ? GazeLabel::Saccade : GazeLabel::Fixation;
        const auto t = make_heatmap_target(at(x, y, label), 64, 48, rng.uniform(0.5, 6.0));
        REQUIRE(t.shape() == std::vector<int>{64, 48});
        CHECK(std::abs(total(t) - 1.0) < 1e-6);
        CHECK(argmax(t) == static_cast<std::size_t>(rasterize(y, 64) * 48 + rasterize(x, 48)));
    }
}

TEST_CASE("segment_clips keeps whole windows") {
    synth::SceneConfig c;
    c.render = false;
    c.frame_offset = 0;
    c.duration_s = 12.0;  // 240 frames
    auto s = synth::generate_session(c);
    auto clips = segment_clips(s, View::Neck, 5.0, 0, "s");
    REQUIRE(clips.size() == 2);
    CHECK(clips[0].length == 100);
    CHECK(clips[1].start_frame == 100);

    c.duration_s = 4.95;  // 99 frames
    s = synth::generate_session(c);
    CHECK(segment_clips(s, View::Neck, 5.0, 0, "s").empty());

    CHECK_THROWS_AS(segment_clips(s, View::Neck, 0.033, 0, "s"), std::invalid_argument);
}

TEST_CASE("a default three minute session gives 36 clips per view") {
    synth::SceneConfig c;
    c.render = false;
    const auto s = synth::generate_session(c);
    for (View v : {View::Head, View::Neck}) {
        const auto clips = segment_clips(s, v, 5.0, c.frame_offset, "s");
        REQUIRE(clips.size() == 36);
        for (std::size_t i = 0; i < clips.size(); ++i) {
            CHECK(clips[i].length == 100);
            CHECK(clips[i].samples.size() == 100);
            CHECK(clips[i].in_view.size() == 100);
            if (i > 0) CHECK(clips[i].start_frame == clips[i - 1].start_frame + 100);
            for (std::size_t j = 0; j < clips[i].samples.size(); ++j) {
                CHECK(clips[i].in_view[j] == in_view_label(clips[i].samples[j]));
            }
        }
    }
    // head and neck clip i cover the same instants
    const auto h = segment_clips(s, View::Head, 5.0, c.frame_offset, "s");
    const auto n = segment_clips(s, View::Neck, 5.0, c.frame_offset, "s");
    CHECK(n[3].start_frame - h[3].start_frame == c.frame_offset);
}

TEST_CASE("sample_frames") {
    Rng rng(1);
    const std::vector<int> want{0, 8, 16, 24, 32, 40, 48, 56};
    CHECK(sample_frames(100, 8, 8, SampleMode::Eval, rng) == want);
    CHECK(sample_frames(57, 8, 8, SampleMode::Train, rng) == want);
    CHECK_THROWS_AS(sample_frames(56, 8, 8, SampleMode::Eval, rng), ClipTooShort);
    for (int i = 0; i < 200; ++i) {
        const auto idx = sample_frames(100, 8, 8, SampleMode::Train, rng);
        CHECK(idx.front() >= 0);
        CHECK(idx.front() <= 43);
        CHECK(idx.back() == idx.front() + 56);
    }
}

TEST_CASE("crop windows and gaze renormalization") {
    CHECK(crop_origin(96, 64, CropMode::Left) == 0);
    CHECK(crop_origin(96, 64, CropMode::Center) == 16);
    CHECK(crop_origin(96, 64, CropMode::Right) == 32);

    Tensor frames({2, 4, 96});
    for (std::size_t i = 0; i < frames.size(); ++i) frames[i] = static_cast<double>(i % 96);
    const std::vector<GazeSample> samples{at(10.0 / 96.0, 0.5), at(48.0 / 96.0, 0.5)};

    const auto right = crop_augment(frames, samples, CropMode::Right, 64);
    CHECK(right.frames.shape() == std::vector<int>{2, 4, 64});
    CHECK(right.frames[0] == 32.0);
    CHECK(right.samples[0].label == GazeLabel::Truncated);
    CHECK(right.samples[1].label == GazeLabel::Fixation);

    const auto center = crop_augment(frames, samples, CropMode::Center, 64);
    CHECK(center.samples[1].x == doctest::Approx(0.5));
    CHECK(center.samples[0].label == GazeLabel::Truncated);  // x=10 is left of the window at 16
    CHECK(center.frames[0] == 16.0);
}

TEST_CASE("uncrop inverts the crop for samples that stay inside") {
    Rng rng(8);
    Tensor frames({1, 2, 96});
    for (int i = 0; i < 500; ++i) {
        const auto mode = static_cast<CropMode>(i % 3);
        const GazeSample s = at(rng.uniform(0.0, 0.9999), 0.4);
        const auto c = crop_augment(frames, std::span<const GazeSample>(&s, 1), mode, 64);
        if (c.samples[0].label != GazeLabel::Fixation) continue;
        CHECK(std::abs(uncrop_x(c.samples[0].x, 96, 64, mode) - s.x) < 1e-9);
    }
}

TEST_CASE("in-view labels") {
    CHECK(in_view_label(at(0.5, 0.5, GazeLabel::Fixation)) == 1);
    CHECK(in_view_label(at(0.5, 0.5, GazeLabel::Saccade)) == 1);
    CHECK(in_view_label(at(1.5, 0.5, GazeLabel::Truncated)) == 0);
    CHECK(in_view_label(at(0.5, 0.5, GazeLabel::Untracked)) == 0);
}

TEST_CASE("annotate_session recovers the offset and maps gaze consistently") {
    synth::SceneConfig c;
    c.duration_s = 12.0;
    c.frame_offset = -9;
    c.seed = 77;
    const auto s = synth::generate_session(c);
    const auto a = annotate_session(s, "x", 5.0);
    CHECK(a.offset == -9);
    CHECK(a.max_mapping_error_px < 1e-6);
    CHECK(a.head_clips.size() == 2);
    CHECK(a.neck_clips.size() == 2);
    CHECK(a.head_labels.size() == s.head.length());
}
