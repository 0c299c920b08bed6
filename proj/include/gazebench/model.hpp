#pragma once

#include "gazebench/geometry.hpp"
#include "gazebench/tensor.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace gazebench::model {

inline constexpr int kEnc1Channels = 8;
inline constexpr int kEnc2Channels = 16;
inline constexpr int kBottleneckChannels = 16;
inline constexpr int kDec1Channels = 8;
inline constexpr double kLogEpsilon = 1e-12;

// Encoder (two stride-2 3x3 convs, 1->8->16), bottleneck (3x3 conv 16->16),
// decoder (two stride-2 transposed convs, 16->8->1), in-view head on the
// pooled bottleneck, and a 1x1 projection to K latent 3-vectors per cell.
struct ModelParams {
    int latent_k = 8;

    Tensor enc1_w, enc1_b;      // [8,1,3,3], [8]
    Tensor enc2_w, enc2_b;      // [16,8,3,3], [16]
    Tensor bott_w, bott_b;      // [16,16,3,3], [16]
    Tensor dec1_w, dec1_b;      // [16,8,3,3] (in, out, kh, kw), [8]
    Tensor dec2_w, dec2_b;      // [8,1,3,3], [1]
    Tensor inview_w, inview_b;  // [16], [1]
    Tensor proj_w, proj_b;      // [3K,16], [3K]

    static ModelParams zeros(int latent_k = 8);
    // Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
    static ModelParams init(std::uint64_t seed, int latent_k = 8);

    // Visits tensors in a fixed order with stable names.
    void for_each(const std::function<void(const std::string&, Tensor&)>& fn);
    void for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const;

    std::size_t parameter_count() const;
    bool all_finite() const;

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

using Gradients = ModelParams;

// Flat views used by the optimizer.
std::vector<double> flatten(const ModelParams& p);
void unflatten(std::span<const double> flat, ModelParams& p);

struct LatentField {
    int k = 0;
    int height = 0;
    int width = 0;
    Tensor values;  // [3K, h, w]; vector (k, cell) is channels 3k..3k+2

    geometry::Vec3 vector(int kk, int cell) const;
    std::size_t vector_count() const { return static_cast<std::size_t>(k) * height * width; }
};

// Intermediate activations kept for the backward pass.
struct ForwardCache {
    Tensor input;          // [T,1,H,W]
    Tensor enc1;           // post-ReLU [T,8,H/2,W/2]
    Tensor enc2;           // post-ReLU [T,16,H/4,W/4]
    Tensor bott;           // post-ReLU [T,16,H/4,W/4]
    Tensor dec1;           // post-ReLU [T,8,H/2,W/2]
    Tensor pooled;         // [T,16] spatial means of bott
};

struct ForwardOutput {
    Tensor logits;         // [T,H,W]
    Tensor probs;          // [T,H,W], spatial softmax per frame
    Tensor inview_logits;  // [T]
    Tensor bottleneck;     // [16,H/4,W/4], temporal mean of per-frame bottlenecks
    LatentField latent;
    ForwardCache cache;
};

// frames: [T,H,W] (single channel). Throws ShapeMismatch unless H, W are
// positive multiples of 4.
ForwardOutput forward(const Tensor& frames, const ModelParams& params);

Tensor spatial_softmax(const Tensor& logits);

// Mean over frames of KL(target || pred).
double heatmap_loss(const Tensor& pred, const Tensor& target);
// Mean binary cross-entropy of sigmoid(logit) against labels, with positive
// frames weighted by pos_weight.
double inbound_loss(std::span<const double> logits, std::span<const int> labels, double pos_weight = 1.0);

LatentField project_latent_3d(const Tensor& bottleneck, const ModelParams& params);

// Mean squared error between R*head and neck over all scalar components.
// Throws NotARotation when R is not orthonormal within 1e-6.
double align_loss(const LatentField& head, const LatentField& neck, const geometry::Mat3& rotation);

struct AlignGrad {
    double loss = 0.0;
    Tensor d_head;  // [3K,h,w]
    Tensor d_neck;
};
AlignGrad align_loss_grad(const LatentField& head, const LatentField& neck,
                          const geometry::Mat3& rotation);

struct LossWeights {
    double heatmap = 1.0;
    double inbound = 1.0;
    double align = 1.0;
    double pos_weight = 1.0;  // weight of in-view frames inside the in-view loss

    friend bool operator==(const LossWeights&, const LossWeights&) = default;
};

// Gradient of heatmap_w * L_heatmap + inbound_w * L_inbound, plus the
// pull-back of `latent_grad` (already weighted) when provided.
Gradients backward(const ForwardOutput& out, const Tensor& targets, std::span<const int> labels,
                   const ModelParams& params, double heatmap_w, double inbound_w,
                   const Tensor* latent_grad = nullptr, double pos_weight = 1.0);

struct LossTerms {
    double heatmap = 0.0;
    double inbound = 0.0;
    double align = 0.0;
    double total = 0.0;
};

struct Example {
    Tensor frames;             // [T,H,W]
    Tensor targets;            // [T,H,W]
    std::vector<int> labels;   // [T]
};

struct SingleResult {
    LossTerms loss;
    Gradients grad;
    ForwardOutput output;
};

// Loss and gradient for the single-model objective.
SingleResult loss_and_grad(const Example& ex, const ModelParams& params, const LossWeights& w);
LossTerms loss_only(const Example& ex, const ModelParams& params, const LossWeights& w);

struct PairResult {
    LossTerms loss;  // heatmap holds head + neck heatmap terms
    Gradients head_grad;
    Gradients neck_grad;
};

// Co-learning objective: heatmap(head) + heatmap(neck) + align(R head, neck).
PairResult pair_loss_and_grad(const Example& head, const Example& neck, const geometry::Mat3& r_rel,
                              const ModelParams& head_params, const ModelParams& neck_params,
                              const LossWeights& w);
LossTerms pair_loss_only(const Example& head, const Example& neck, const geometry::Mat3& r_rel,
                         const ModelParams& head_params, const ModelParams& neck_params,
                         const LossWeights& w);

double sigmoid(double z);

} // namespace gazebench::model
