#include "gazebench/training.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/parallel.hpp"
#include "gazebench/rng.hpp"

#include <algorithm>
#include <cmath>
#include <chrono>
#include <numeric>

namespace gazebench::training {
namespace {

using annotation::CropMode;
using annotation::SampleMode;
using annotation::View;

constexpr std::uint64_t kShuffleStream = 101;
constexpr std::uint64_t kTemporalStream = 102;
constexpr std::uint64_t kNeckCropStream = 103;
constexpr std::uint64_t kHeadCropStream = 104;

CropMode draw_crop(Rng& rng) { return static_cast<CropMode>(rng.uniform_int(0, 2)); }

void add_into(std::vector<double>& acc, const std::vector<double>& g) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

void accumulate(model::LossTerms& acc, const model::LossTerms& l) {
    acc.heatmap += l.heatmap;
    acc.inbound += l.inbound;
    acc.align += l.align;
    acc.total += l.total;
}

void scale(model::LossTerms& l, double s) {
    l.heatmap *= s;
    l.inbound *= s;
    l.align *= s;
    l.total *= s;
}

} // namespace

std::string to_string(Variant v) {
    switch (v) {
    case Variant::Base: return "base";
    case Variant::Aux: return "aux";
    case Variant::Colearn: return "colearn";
    }
    return "unknown";
}

Variant variant_from_string(const std::string& s) {
    if (s == "base") return Variant::Base;
    if (s == "aux") return Variant::Aux;
    if (s == "colearn") return Variant::Colearn;
    throw ConfigInvalid("unknown variant '" + s + "' (expected base, aux or colearn)");
}

void TrainConfig::validate() const {
    if (!(adamw.lr >= 0.0)) throw ConfigInvalid("learning rate must be nonnegative");
    if (epochs < 1) throw ConfigInvalid("epochs must be at least 1");
    if (batch_size < 1) throw ConfigInvalid("batch size must be at least 1");
    if (!(weights.heatmap >= 0.0) || !(weights.inbound >= 0.0) || !(weights.align >= 0.0)) {
        throw ConfigInvalid("loss weights must be nonnegative");
    }
    if (!(adamw.beta1 >= 0.0 && adamw.beta1 < 1.0) || !(adamw.beta2 >= 0.0 && adamw.beta2 < 1.0)) {
        throw ConfigInvalid("AdamW betas must lie in [0, 1)");
    }
    if (!(adamw.eps > 0.0) || !(adamw.weight_decay >= 0.0)) {
        throw ConfigInvalid("AdamW eps must be positive and weight decay nonnegative");
    }
    if (frames_per_clip < 1 || frame_stride < 1) throw ConfigInvalid("temporal sampling must be positive");
    if (crop_width < 4 || crop_width % 4 != 0) throw ConfigInvalid("crop width must be a multiple of 4");
    if (!(sigma_px > 0.0)) throw ConfigInvalid("heatmap sigma must be positive");
    if (latent_k < 1) throw ConfigInvalid("latent K must be positive");
    if (!std::isfinite(input_mean) || !(input_std > 0.0)) throw ConfigInvalid("input std must be positive");
}

model::LossWeights TrainConfig::effective_weights() const {
    model::LossWeights w = weights;
    if (variant != Variant::Colearn) w.align = 0.0;
    if (variant != Variant::Aux) w.inbound = 0.0;
    return w;
}

model::Example make_example(const TrainingClip& clip, std::span<const int> indices, CropMode crop,
                            const TrainConfig& config,
                            std::vector<annotation::GazeSample>* cropped_samples) {
    const int crop_width = config.crop_width;
    const double sigma_px = config.sigma_px;
    const double scale = 1.0 / (255.0 * config.input_std);
    const double shift = config.input_mean / config.input_std;
    const int t_count = static_cast<int>(indices.size());
    const std::size_t plane = static_cast<std::size_t>(clip.height) * clip.width;
    Tensor frames({t_count, clip.height, clip.width});
    std::vector<annotation::GazeSample> samples;
    samples.reserve(indices.size());
    for (int t = 0; t < t_count; ++t) {
        const int idx = indices[static_cast<std::size_t>(t)];
        if (idx < 0 || idx >= clip.length()) throw std::out_of_range("frame index outside clip");
        const std::uint8_t* src = clip.frames.data() + static_cast<std::size_t>(idx) * plane;
        double* dst = frames.data() + static_cast<std::size_t>(t) * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = src[i] * scale - shift;
        samples.push_back(clip.samples[static_cast<std::size_t>(idx)]);
    }
    auto cropped = annotation::crop_augment(frames, samples, crop, crop_width);

    model::Example ex;
    ex.frames = std::move(cropped.frames);
    ex.targets = Tensor({t_count, clip.height, crop_width});
    const std::size_t out_plane = static_cast<std::size_t>(clip.height) * crop_width;
    for (int t = 0; t < t_count; ++t) {
        const auto& s = cropped.samples[static_cast<std::size_t>(t)];
        const Tensor target = annotation::make_heatmap_target(s, clip.height, crop_width, sigma_px);
        std::copy(target.values().begin(), target.values().end(),
                  ex.targets.data() + static_cast<std::size_t>(t) * out_plane);
        ex.labels.push_back(annotation::in_view_label(s));
    }
    if (cropped_samples) *cropped_samples = std::move(cropped.samples);
    return ex;
}

geometry::Mat3 mean_rotation(std::span<const geometry::Mat3> rotations, std::span<const int> indices) {
    geometry::Mat3 sum = geometry::Mat3::Zero();
    for (int idx : indices) sum += rotations[static_cast<std::size_t>(idx)];
    return geometry::project_to_so3(sum);
}

double inbound_pos_weight(std::span<const TrainingClip> clips) {
    long long pos = 0;
    long long neg = 0;
    for (const auto& clip : clips) {
        for (const auto& s : clip.samples) (annotation::in_view_label(s) ? pos : neg) += 1;
    }
    return pos > 0 && neg > 0 ? static_cast<double>(neg) / static_cast<double>(pos) : 1.0;
}

void check_pair(const ClipPair& pair) {
    if (pair.head.session_id != pair.neck.session_id) throw PairMismatch("pair spans two sessions");
    if (pair.head.view != View::Head || pair.neck.view != View::Neck) throw PairMismatch("pair views swapped");
    if (pair.head.length() != pair.neck.length()) throw PairMismatch("pair clips differ in length");
    if (pair.head.start_frame + pair.offset != pair.neck.start_frame) {
        throw PairMismatch("pair clips are not synchronized (head " + std::to_string(pair.head.start_frame) +
                           " + offset " + std::to_string(pair.offset) + " != neck " +
                           std::to_string(pair.neck.start_frame) + ")");
    }
    if (pair.r_rel.size() != static_cast<std::size_t>(pair.head.length())) {
        throw PairMismatch("pair needs one relative rotation per frame");
    }
}

model::LossTerms train_step(ModelState& state, std::span<const model::Example> batch,
                            const model::LossWeights& weights, const optim::AdamWConfig& adamw) {
    if (batch.empty()) throw DatasetEmpty("empty batch");
    std::vector<std::vector<double>> grads(batch.size());
    std::vector<model::LossTerms> losses(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
        auto r = model::loss_and_grad(batch[i], state.params, weights);
        grads[i] = model::flatten(r.grad);
        losses[i] = r.loss;
    });
    std::vector<double> total(grads.front().size(), 0.0);
    model::LossTerms mean;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        add_into(total, grads[i]);
        accumulate(mean, losses[i]);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : total) g *= inv;
    scale(mean, inv);

    auto flat = model::flatten(state.params);
    optim::adamw_step(flat, total, state.optimizer, adamw);
    model::unflatten(flat, state.params);
    return mean;
}

model::LossTerms train_pair_step(ModelState& head, ModelState& neck, std::span<const PairExample> batch,
                                 const model::LossWeights& weights, const optim::AdamWConfig& adamw) {
    if (batch.empty()) throw DatasetEmpty("empty batch");
    std::vector<std::vector<double>> head_grads(batch.size());
    std::vector<std::vector<double>> neck_grads(batch.size());
    std::vector<model::LossTerms> losses(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
        auto r = model::pair_loss_and_grad(batch[i].head, batch[i].neck, batch[i].r_rel, head.params,
                                           neck.params, weights);
        head_grads[i] = model::flatten(r.head_grad);
        neck_grads[i] = model::flatten(r.neck_grad);
        losses[i] = r.loss;
    });
    std::vector<double> head_total(head_grads.front().size(), 0.0);
    std::vector<double> neck_total(neck_grads.front().size(), 0.0);
    model::LossTerms mean;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        add_into(head_total, head_grads[i]);
        add_into(neck_total, neck_grads[i]);
        accumulate(mean, losses[i]);
    }
    const double inv = 1.0 / static_cast<double>(batch.size());
    for (auto& g : head_total) g *= inv;
    for (auto& g : neck_total) g *= inv;
    scale(mean, inv);

    auto head_flat = model::flatten(head.params);
    optim::adamw_step(head_flat, head_total, head.optimizer, adamw);
    model::unflatten(head_flat, head.params);
    auto neck_flat = model::flatten(neck.params);
    optim::adamw_step(neck_flat, neck_total, neck.optimizer, adamw);
    model::unflatten(neck_flat, neck.params);
    return mean;
}

model::ModelParams initial_params(const TrainConfig& config, View view) {
    Rng seeder = Rng::derive(config.seed, view == View::Neck ? 201 : 202);
    return model::ModelParams::init(seeder.next(), config.latent_k);
}

TrainResult train(const TrainingData& data, const TrainConfig& config) {
    config.validate();
    const bool colearn = config.variant == Variant::Colearn;
    const std::size_t n = colearn ? data.pairs.size() : data.clips.size();
    if (n == 0) throw DatasetEmpty("no training clips for variant " + to_string(config.variant));
    if (colearn) {
        for (const auto& p : data.pairs) check_pair(p);
    }
    auto weights = config.effective_weights();
    if (config.variant == Variant::Aux && config.balance_inbound) weights.pos_weight = inbound_pos_weight(data.clips);

    Rng shuffle_rng = Rng::derive(config.seed, kShuffleStream);
    Rng temporal_rng = Rng::derive(config.seed, kTemporalStream);
    Rng neck_crop_rng = Rng::derive(config.seed, kNeckCropStream);
    Rng head_crop_rng = Rng::derive(config.seed, kHeadCropStream);

    TrainResult result;
    result.primary.params = initial_params(config, View::Neck);
    if (colearn) result.head = ModelState{initial_params(config, View::Head), {}};

    std::vector<std::size_t> order(n);
    const auto started = std::chrono::steady_clock::now();
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (std::size_t i = n; i > 1; --i) {
            const auto j = static_cast<std::size_t>(shuffle_rng.uniform_int(0, static_cast<long long>(i - 1)));
            std::swap(order[i - 1], order[j]);
        }

        model::LossTerms epoch_sum;
        for (std::size_t begin = 0; begin < n; begin += static_cast<std::size_t>(config.batch_size)) {
            const std::size_t end = std::min(n, begin + static_cast<std::size_t>(config.batch_size));
            model::LossTerms batch_mean;
            if (colearn) {
                std::vector<PairExample> batch;
                for (std::size_t b = begin; b < end; ++b) {
                    const auto& pair = data.pairs[order[b]];
                    const auto idx = annotation::sample_frames(pair.neck.length(), config.frames_per_clip,
                                                               config.frame_stride, SampleMode::Train,
                                                               temporal_rng);
                    const auto neck_crop = draw_crop(neck_crop_rng);
                    const auto head_crop = draw_crop(head_crop_rng);
                    batch.push_back({make_example(pair.head, idx, head_crop, config),
                                     make_example(pair.neck, idx, neck_crop, config),
                                     mean_rotation(pair.r_rel, idx)});
                }
                batch_mean = train_pair_step(*result.head, result.primary, batch, weights, config.adamw);
            } else {
                std::vector<model::Example> batch;
                for (std::size_t b = begin; b < end; ++b) {
                    const auto& clip = data.clips[order[b]];
                    const auto idx = annotation::sample_frames(clip.length(), config.frames_per_clip,
                                                               config.frame_stride, SampleMode::Train,
                                                               temporal_rng);
                    const auto crop = draw_crop(neck_crop_rng);
                    batch.push_back(make_example(clip, idx, crop, config));
                }
                batch_mean = train_step(result.primary, batch, weights, config.adamw);
            }
            scale(batch_mean, static_cast<double>(end - begin));
            accumulate(epoch_sum, batch_mean);
        }
        scale(epoch_sum, 1.0 / static_cast<double>(n));
        EpochStats stats;
        stats.epoch = epoch;
        stats.heatmap = epoch_sum.heatmap;
        stats.inbound = epoch_sum.inbound;
        stats.align = epoch_sum.align;
        stats.total = epoch_sum.total;
        stats.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        result.history.push_back(stats);
    }
    return result;
}

} // namespace gazebench::training
