#pragma once

// Small hand-built training data for tests that should not render sessions.

#include "gazebench/annotation.hpp"
#include "gazebench/rng.hpp"
#include "gazebench/training.hpp"

#include <algorithm>

namespace fixture {

using namespace gazebench;

// Noise frames with a bright square under the gaze point; about a fifth of
// the frames are truncated.
inline training::TrainingClip clip(Rng& rng, annotation::View view, int h = 16, int w = 16, int length = 9) {
    training::TrainingClip c;
    c.session_id = "fixture";
    c.view = view;
    c.height = h;
    c.width = w;
    c.frames.resize(static_cast<std::size_t>(length) * h * w);
    for (auto& v : c.frames) v = static_cast<std::uint8_t>(rng.uniform_int(0, 90));
    for (int t = 0; t < length; ++t) {
        annotation::GazeSample s;
        s.frame = t;
        s.view = view;
        if (rng.uniform() < 0.2) {
            s.x = 1.3;
            s.y = 0.5;
            s.label = annotation::GazeLabel::Truncated;
        } else {
            s.x = rng.uniform(0.1, 0.9);
            s.y = rng.uniform(0.1, 0.9);
            const int px = annotation::rasterize(s.x, w);
            const int py = annotation::rasterize(s.y, h);
            for (int dy = -1; dy <= 1; ++dy) {
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = std::clamp(px + dx, 0, w - 1);
                    const int y = std::clamp(py + dy, 0, h - 1);
                    c.frames[(static_cast<std::size_t>(t) * h + y) * w + x] = 250;
                }
            }
        }
        c.samples.push_back(s);
    }
    return c;
}

inline training::TrainConfig small_config(training::Variant variant) {
    training::TrainConfig c;
    c.variant = variant;
    c.epochs = 3;
    c.frames_per_clip = 2;
    c.frame_stride = 4;
    c.crop_width = 12;
    c.latent_k = 2;
    c.adamw.lr = 1e-3;
    c.seed = 5;
    return c;
}

// Clips and the matching synchronized pairs; pairs[i].neck == clips[i].
inline training::TrainingData data(std::uint64_t seed, int count) {
    Rng rng(seed);
    training::TrainingData d;
    for (int i = 0; i < count; ++i) {
        training::ClipPair p;
        p.head = clip(rng, annotation::View::Head);
        p.neck = clip(rng, annotation::View::Neck);
        p.head.start_frame = 10 * i;
        p.neck.start_frame = 10 * i;
        p.r_rel.assign(static_cast<std::size_t>(p.neck.length()), geometry::rotation_from_ypr(0.1 * i, 0.2, 0.0));
        d.clips.push_back(p.neck);
        d.pairs.push_back(std::move(p));
    }
    return d;
}

} // namespace fixture
