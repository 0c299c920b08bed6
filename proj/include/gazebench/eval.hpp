#pragma once

#include "gazebench/annotation.hpp"
#include "gazebench/training.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::eval {

using annotation::GazeSample;

enum class ThresholdMode { Relative, Absolute };

std::string to_string(ThresholdMode mode);
// Throws ConfigInvalid.
ThresholdMode threshold_mode_from_string(const std::string& s);

struct EvalConfig {
    std::vector<double> thresholds{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    ThresholdMode mode = ThresholdMode::Relative;
    double gt_radius_px = -1.0;  // negative: twice the training sigma
    double classifier_threshold = 0.5;

    double radius_for(double sigma_px) const { return gt_radius_px < 0.0 ? 2.0 * sigma_px : gt_radius_px; }
    // Throws ConfigInvalid.
    void validate() const;

    friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct Mask {
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> bits;  // row-major, 0 or 1

    Mask() = default;
    Mask(int h, int w) : height(h), width(w), bits(static_cast<std::size_t>(h) * w, 0) {}
    std::uint8_t& at(int y, int x) { return bits[static_cast<std::size_t>(y) * width + x]; }
    std::uint8_t at(int y, int x) const { return bits[static_cast<std::size_t>(y) * width + x]; }
    long long count() const;

    friend bool operator==(const Mask&, const Mask&) = default;
};

// Indices of frames labeled fixation with in-bounds gaze.
std::vector<std::size_t> select_eval_frames(std::span<const GazeSample> samples);

// Disc of `radius` pixels around the rasterized gaze pixel, clipped to the grid.
Mask gt_mask(const GazeSample& sample, int height, int width, double radius);

// pred >= tau * max(pred) (relative) or pred >= tau (absolute).
Mask binarize(const Tensor& pred, double tau, ThresholdMode mode);

struct Score {
    double f1 = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

// Precision and recall are 0 when their denominators are 0; F1 is the
// harmonic mean, 0 when P + R = 0.
Score score_from_counts(long long tp, long long fp, long long fn);

struct ThresholdSweep {
    std::vector<double> thresholds;
    std::vector<long long> tp;
    std::vector<long long> fp;
    std::vector<long long> fn;

    // Throws std::invalid_argument unless thresholds lie in (0,1) strictly increasing.
    static void check_thresholds(std::span<const double> thresholds);
};

struct AdaptiveF1 {
    ThresholdSweep sweep;
    std::size_t best_index = 0;
    double threshold = 0.0;
    Score score;
};

// Pixel counts are summed over all frames before F1 is computed. The best
// threshold maximizes F1; ties go to the smaller threshold.
// Throws EmptyEvalSet for an empty frame set.
AdaptiveF1 adaptive_f1(std::span<const Tensor> preds, std::span<const Mask> masks,
                       std::span<const double> thresholds, ThresholdMode mode = ThresholdMode::Relative);

struct BinaryCounts {
    long long tp = 0;
    long long fp = 0;
    long long fn = 0;
    long long tn = 0;
};

struct ClassifierMetrics {
    BinaryCounts counts;
    Score score;
    double threshold = 0.5;
};

// Positive prediction when score >= threshold.
ClassifierMetrics classifier_metrics(std::span<const double> scores, std::span<const int> labels,
                                     double threshold = 0.5);

// Rows: ground truth positive, negative. Columns: predicted positive, negative.
struct Confusion {
    std::array<std::array<long long, 2>, 2> counts{};
    std::array<std::array<double, 2>, 2> rates{};
};

// A row with no pixels keeps zero rates.
Confusion pixel_confusion(std::span<const Mask> preds, std::span<const Mask> gts);

inline constexpr int kHistogramBins = 16;

struct ViewStats {
    long long fixation = 0;
    long long saccade = 0;
    long long truncated = 0;
    long long untracked = 0;
    double oob_rate = 0.0;  // truncated / (fixation + saccade + truncated)
    std::array<long long, kHistogramBins * kHistogramBins> histogram{};  // [row y][col x]
    double mean_x = 0.0;    // over valid in-bounds points
    double mean_y = 0.0;

    long long valid() const { return fixation + saccade + truncated; }
};

ViewStats view_stats(std::span<const GazeSample> samples);

struct DatasetStats {
    ViewStats head;
    ViewStats neck;
};

DatasetStats dataset_stats(std::span<const annotation::AnnotatedSession> sessions);

struct MetricsReport {
    std::string variant;
    AdaptiveF1 heatmap;
    Confusion confusion;  // at the best threshold
    std::optional<ClassifierMetrics> classifier;
    long long frames_evaluated = 0;
    long long frames_skipped = 0;
};

// Runs the model on every clip with eval-mode sampling and a center crop,
// scores heatmaps on the selected frames and, when asked, the in-view
// classifier on all sampled frames. Throws EmptyEvalSet.
MetricsReport evaluate(const model::ModelParams& params, std::span<const training::TrainingClip> clips,
                       const training::TrainConfig& train, const EvalConfig& config,
                       const std::string& variant, bool with_classifier);

} // namespace gazebench::eval
