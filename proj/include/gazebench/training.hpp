#pragma once

#include "gazebench/annotation.hpp"
#include "gazebench/model.hpp"
#include "gazebench/optimizer.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::training {

enum class Variant { Base, Aux, Colearn };

std::string to_string(Variant v);
// Throws ConfigInvalid for anything outside {base, aux, colearn}.
Variant variant_from_string(const std::string& s);

struct TrainConfig {
    Variant variant = Variant::Base;
    int epochs = 30;
    int batch_size = 1;
    model::LossWeights weights;
    optim::AdamWConfig adamw;
    std::uint64_t seed = 0;

    int frames_per_clip = 8;   // T
    int frame_stride = 8;
    int crop_width = 64;
    double sigma_px = 3.0;
    int latent_k = 8;
    // Frames enter the model as (intensity - input_mean) / input_std.
    double input_mean = 0.45;
    double input_std = 0.225;
    // Weight in-view frames by (#out-of-view / #in-view) over the training
    // set so that both classes carry equal weight in the in-view loss.
    bool balance_inbound = true;

    // Throws ConfigInvalid.
    void validate() const;
    // Weights the variant actually optimizes: base drops the in-view and
    // alignment terms, aux drops alignment, colearn drops the in-view term.
    model::LossWeights effective_weights() const;

    friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// One clip's frames (u8, length x H x W) with its labeled gaze samples.
struct TrainingClip {
    std::string session_id;
    annotation::View view = annotation::View::Neck;
    int start_frame = 0;
    int height = 0;
    int width = 0;
    std::vector<std::uint8_t> frames;
    std::vector<annotation::GazeSample> samples;

    int length() const { return static_cast<int>(samples.size()); }
};

// Synchronized head/neck clips plus the per-frame head->neck rotation.
struct ClipPair {
    TrainingClip head;
    TrainingClip neck;
    int offset = 0;  // neck stream index minus head stream index
    std::vector<geometry::Mat3> r_rel;
};

struct TrainingData {
    std::vector<TrainingClip> clips;  // base / aux
    std::vector<ClipPair> pairs;      // colearn
};

// Builds a model example from a clip: gathers frames at `indices`, crops,
// and produces heatmap targets and in-view labels. The cropped samples are
// written to `cropped_samples` when given.
// Uses the config's crop width, sigma and input normalization.
model::Example make_example(const TrainingClip& clip, std::span<const int> indices,
                            annotation::CropMode crop, const TrainConfig& config,
                            std::vector<annotation::GazeSample>* cropped_samples = nullptr);

// Rotation averaged (chordal mean) over the sampled frames.
geometry::Mat3 mean_rotation(std::span<const geometry::Mat3> rotations, std::span<const int> indices);

// Out-of-view over in-view frame count across all clips; 1 when either is absent.
double inbound_pos_weight(std::span<const TrainingClip> clips);

// Throws PairMismatch when the two clips do not cover the same instants.
void check_pair(const ClipPair& pair);

struct EpochStats {
    int epoch = 0;
    double heatmap = 0.0;
    double inbound = 0.0;
    double align = 0.0;
    double total = 0.0;
    double wall_s = 0.0;
};

struct ModelState {
    model::ModelParams params;
    optim::OptimizerState optimizer;

    friend bool operator==(const ModelState&, const ModelState&) = default;
};

struct TrainResult {
    ModelState primary;                 // the neck model (or the single model)
    std::optional<ModelState> head;     // colearn only
    std::vector<EpochStats> history;
};

// One optimizer step on a batch of examples for a single model. Gradients
// are averaged over the batch in example order. Returns the mean loss terms.
model::LossTerms train_step(ModelState& state, std::span<const model::Example> batch,
                            const model::LossWeights& weights, const optim::AdamWConfig& adamw);

struct PairExample {
    model::Example head;
    model::Example neck;
    geometry::Mat3 r_rel = geometry::Mat3::Identity();
};

model::LossTerms train_pair_step(ModelState& head, ModelState& neck, std::span<const PairExample> batch,
                                 const model::LossWeights& weights, const optim::AdamWConfig& adamw);

// Initial parameters for each stream, derived from the run seed.
model::ModelParams initial_params(const TrainConfig& config, annotation::View view);

// Throws DatasetEmpty, PairMismatch, ConfigInvalid.
TrainResult train(const TrainingData& data, const TrainConfig& config);

} // namespace gazebench::training
