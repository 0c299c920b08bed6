#include "gazebench/eval.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gazebench::eval {

using annotation::GazeLabel;

std::string to_string(ThresholdMode mode) {
    return mode == ThresholdMode::Relative ? "relative" : "absolute";
}

ThresholdMode threshold_mode_from_string(const std::string& s) {
    if (s == "relative") return ThresholdMode::Relative;
    if (s == "absolute") return ThresholdMode::Absolute;
    throw ConfigInvalid("threshold mode must be relative or absolute, got '" + s + "'");
}

void EvalConfig::validate() const {
    try {
        ThresholdSweep::check_thresholds(thresholds);
    } catch (const std::invalid_argument& e) {
        throw ConfigInvalid(e.what());
    }
    if (thresholds.empty()) throw ConfigInvalid("threshold set is empty");
    if (!(classifier_threshold > 0.0 && classifier_threshold < 1.0)) {
        throw ConfigInvalid("classifier threshold must lie in (0,1)");
    }
    if (!std::isfinite(gt_radius_px)) throw ConfigInvalid("gt radius must be finite");
}

long long Mask::count() const {
    return std::count(bits.begin(), bits.end(), std::uint8_t{1});
}

std::vector<std::size_t> select_eval_frames(std::span<const GazeSample> samples) {
    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (samples[i].label == GazeLabel::Fixation && samples[i].in_bounds()) keep.push_back(i);
    }
    return keep;
}

Mask gt_mask(const GazeSample& sample, int height, int width, double radius) {
    if (height <= 0 || width <= 0) throw std::invalid_argument("mask size must be positive");
    if (!(radius >= 0.0)) throw std::invalid_argument("mask radius must be nonnegative");
    Mask m(height, width);
    const int cx = annotation::rasterize(sample.x, width);
    const int cy = annotation::rasterize(sample.y, height);
    const double r2 = radius * radius;
    const int reach = static_cast<int>(std::floor(radius));
    for (int y = std::max(0, cy - reach); y <= std::min(height - 1, cy + reach); ++y) {
        for (int x = std::max(0, cx - reach); x <= std::min(width - 1, cx + reach); ++x) {
            const double dx = x - cx;
            const double dy = y - cy;
            if (dx * dx + dy * dy <= r2) m.at(y, x) = 1;
        }
    }
    return m;
}

Mask binarize(const Tensor& pred, double tau, ThresholdMode mode) {
    if (pred.rank() != 2) throw ShapeMismatch("prediction map must be H x W");
    Mask m(pred.dim(0), pred.dim(1));
    double cut = tau;
    if (mode == ThresholdMode::Relative) {
        cut = tau * *std::max_element(pred.values().begin(), pred.values().end());
    }
    for (std::size_t i = 0; i < pred.size(); ++i) m.bits[i] = pred[i] >= cut ? 1 : 0;
    return m;
}

Score score_from_counts(long long tp, long long fp, long long fn) {
    Score s;
    s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
    s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
    s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
    return s;
}

void ThresholdSweep::check_thresholds(std::span<const double> thresholds) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        const double t = thresholds[i];
        if (!(t > 0.0 && t < 1.0)) throw std::invalid_argument("thresholds must lie in (0,1)");
        if (i > 0 && !(t > thresholds[i - 1])) throw std::invalid_argument("thresholds must increase strictly");
    }
}

AdaptiveF1 adaptive_f1(std::span<const Tensor> preds, std::span<const Mask> masks,
                       std::span<const double> thresholds, ThresholdMode mode) {
    if (preds.empty()) throw EmptyEvalSet("no frames to evaluate");
    if (preds.size() != masks.size()) throw ShapeMismatch("prediction and mask counts differ");
    if (thresholds.empty()) throw std::invalid_argument("threshold set is empty");
    ThresholdSweep::check_thresholds(thresholds);

    AdaptiveF1 out;
    out.sweep.thresholds.assign(thresholds.begin(), thresholds.end());
    out.sweep.tp.assign(thresholds.size(), 0);
    out.sweep.fp.assign(thresholds.size(), 0);
    out.sweep.fn.assign(thresholds.size(), 0);
    for (std::size_t f = 0; f < preds.size(); ++f) {
        const Tensor& pred = preds[f];
        const Mask& gt = masks[f];
        if (pred.rank() != 2 || pred.dim(0) != gt.height || pred.dim(1) != gt.width) {
            throw ShapeMismatch("prediction and mask shapes differ");
        }
        for (std::size_t k = 0; k < thresholds.size(); ++k) {
            const Mask bin = binarize(pred, thresholds[k], mode);
            for (std::size_t i = 0; i < bin.bits.size(); ++i) {
                if (bin.bits[i] && gt.bits[i]) ++out.sweep.tp[k];
                else if (bin.bits[i]) ++out.sweep.fp[k];
                else if (gt.bits[i]) ++out.sweep.fn[k];
            }
        }
    }
    for (std::size_t k = 0; k < thresholds.size(); ++k) {
        const Score s = score_from_counts(out.sweep.tp[k], out.sweep.fp[k], out.sweep.fn[k]);
        if (k == 0 || s.f1 > out.score.f1) {
            out.score = s;
            out.best_index = k;
        }
    }
    out.threshold = thresholds[out.best_index];
    return out;
}

ClassifierMetrics classifier_metrics(std::span<const double> scores, std::span<const int> labels,
                                     double threshold) {
    if (scores.size() != labels.size()) throw ShapeMismatch("score and label counts differ");
    ClassifierMetrics m;
    m.threshold = threshold;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const bool pred = scores[i] >= threshold;
        const bool truth = labels[i] != 0;
        if (pred && truth) ++m.counts.tp;
        else if (pred) ++m.counts.fp;
        else if (truth) ++m.counts.fn;
        else ++m.counts.tn;
    }
    m.score = score_from_counts(m.counts.tp, m.counts.fp, m.counts.fn);
    return m;
}

Confusion pixel_confusion(std::span<const Mask> preds, std::span<const Mask> gts) {
    if (preds.size() != gts.size()) throw ShapeMismatch("prediction and mask counts differ");
    Confusion c;
    for (std::size_t f = 0; f < preds.size(); ++f) {
        if (preds[f].bits.size() != gts[f].bits.size()) throw ShapeMismatch("mask shapes differ");
        for (std::size_t i = 0; i < preds[f].bits.size(); ++i) {
            const int row = gts[f].bits[i] ? 0 : 1;
            const int col = preds[f].bits[i] ? 0 : 1;
            ++c.counts[row][col];
        }
    }
    for (int r = 0; r < 2; ++r) {
        const long long total = c.counts[r][0] + c.counts[r][1];
        if (total == 0) continue;
        for (int col = 0; col < 2; ++col) {
            c.rates[r][col] = static_cast<double>(c.counts[r][col]) / static_cast<double>(total);
        }
    }
    return c;
}

ViewStats view_stats(std::span<const GazeSample> samples) {
    ViewStats s;
    double sum_x = 0.0;
    double sum_y = 0.0;
    long long in_view = 0;
    for (const auto& g : samples) {
        switch (g.label) {
        case GazeLabel::Fixation: ++s.fixation; break;
        case GazeLabel::Saccade: ++s.saccade; break;
        case GazeLabel::Truncated: ++s.truncated; break;
        case GazeLabel::Untracked: ++s.untracked; break;
        }
        if (g.label == GazeLabel::Untracked || g.label == GazeLabel::Truncated || !g.in_bounds()) continue;
        const int bx = std::min(kHistogramBins - 1, static_cast<int>(g.x * kHistogramBins));
        const int by = std::min(kHistogramBins - 1, static_cast<int>(g.y * kHistogramBins));
        ++s.histogram[static_cast<std::size_t>(by * kHistogramBins + bx)];
        sum_x += g.x;
        sum_y += g.y;
        ++in_view;
    }
    if (s.valid() > 0) s.oob_rate = static_cast<double>(s.truncated) / static_cast<double>(s.valid());
    if (in_view > 0) {
        s.mean_x = sum_x / static_cast<double>(in_view);
        s.mean_y = sum_y / static_cast<double>(in_view);
    }
    return s;
}

DatasetStats dataset_stats(std::span<const annotation::AnnotatedSession> sessions) {
    std::vector<GazeSample> head;
    std::vector<GazeSample> neck;
    for (const auto& s : sessions) {
        head.insert(head.end(), s.head_labels.begin(), s.head_labels.end());
        neck.insert(neck.end(), s.neck_labels.begin(), s.neck_labels.end());
    }
    return {view_stats(head), view_stats(neck)};
}

namespace {

struct ClipEval {
    std::vector<Tensor> preds;
    std::vector<Mask> masks;
    std::vector<double> scores;
    std::vector<int> labels;
    long long skipped = 0;
};

} // namespace

MetricsReport evaluate(const model::ModelParams& params, std::span<const training::TrainingClip> clips,
                       const training::TrainConfig& train, const EvalConfig& config,
                       const std::string& variant, bool with_classifier) {
    config.validate();
    std::vector<ClipEval> per_clip(clips.size());
    const double radius = config.radius_for(train.sigma_px);
    parallel_for(clips.size(), [&](std::size_t c) {
        const auto& clip = clips[c];
        Rng unused(0);
        const auto idx = annotation::sample_frames(clip.length(), train.frames_per_clip, train.frame_stride,
                                                   annotation::SampleMode::Eval, unused);
        std::vector<GazeSample> samples;
        const auto ex = training::make_example(clip, idx, annotation::CropMode::Center, train, &samples);
        const auto out = model::forward(ex.frames, params);
        const int h = out.probs.dim(1);
        const int w = out.probs.dim(2);
        const std::size_t plane = static_cast<std::size_t>(h) * w;
        auto& r = per_clip[c];
        const auto keep = select_eval_frames(samples);
        r.skipped = static_cast<long long>(samples.size() - keep.size());
        for (std::size_t t : keep) {
            Tensor pred({h, w});
            std::copy_n(out.probs.data() + t * plane, plane, pred.data());
            r.preds.push_back(std::move(pred));
            r.masks.push_back(gt_mask(samples[t], h, w, radius));
        }
        for (std::size_t t = 0; t < samples.size(); ++t) {
            r.scores.push_back(model::sigmoid(out.inview_logits[t]));
            r.labels.push_back(ex.labels[t]);
        }
    });

    std::vector<Tensor> preds;
    std::vector<Mask> masks;
    std::vector<double> scores;
    std::vector<int> labels;
    MetricsReport report;
    report.variant = variant;
    for (auto& r : per_clip) {
        std::move(r.preds.begin(), r.preds.end(), std::back_inserter(preds));
        std::move(r.masks.begin(), r.masks.end(), std::back_inserter(masks));
        scores.insert(scores.end(), r.scores.begin(), r.scores.end());
        labels.insert(labels.end(), r.labels.begin(), r.labels.end());
        report.frames_skipped += r.skipped;
    }
    report.frames_evaluated = static_cast<long long>(preds.size());
    report.heatmap = adaptive_f1(preds, masks, config.thresholds, config.mode);
    std::vector<Mask> binary;
    binary.reserve(preds.size());
    for (const auto& p : preds) binary.push_back(binarize(p, report.heatmap.threshold, config.mode));
    report.confusion = pixel_confusion(binary, masks);
    if (with_classifier) report.classifier = classifier_metrics(scores, labels, config.classifier_threshold);
    return report;
}

} // namespace gazebench::eval
