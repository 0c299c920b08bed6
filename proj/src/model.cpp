#include "gazebench/model.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/rng.hpp"

#include <algorithm>
#include <cmath>

namespace gazebench::model {
namespace {

constexpr int kKernel = 3;

struct Dims {
    int c, h, w;
    std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
    std::size_t size() const { return static_cast<std::size_t>(c) * plane(); }
};

// Valid output columns x for tap kx: 0 <= x*stride - 1 + kx < in_w.
void tap_range(int kx, int stride, int in_w, int out_w, int& lo, int& hi) {
    lo = kx == 0 ? 1 : 0;
    if (stride == 1) {
        hi = std::min(out_w - 1, in_w - kx);
    } else {
        hi = std::min(out_w - 1, (in_w - kx) / stride);
    }
}

// 3x3 convolution, padding 1, for one frame. w is [Co,Ci,3,3].
void conv_forward(const double* in, Dims id, const Tensor& w, const Tensor& b, int stride,
                  double* out, Dims od) {
    for (int o = 0; o < od.c; ++o) {
        double* oplane = out + o * od.plane();
        std::fill(oplane, oplane + od.plane(), b[static_cast<std::size_t>(o)]);
        for (int i = 0; i < id.c; ++i) {
            const double* iplane = in + i * id.plane();
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const double wv = w[((static_cast<std::size_t>(o) * id.c + i) * kKernel + ky) * kKernel + kx];
                    int xlo = 0, xhi = 0;
                    tap_range(kx, stride, id.w, od.w, xlo, xhi);
                    for (int y = 0; y < od.h; ++y) {
                        const int iy = y * stride - 1 + ky;
                        if (iy < 0 || iy >= id.h) continue;
                        const double* irow = iplane + static_cast<std::size_t>(iy) * id.w;
                        double* orow = oplane + static_cast<std::size_t>(y) * od.w;
                        for (int x = xlo; x <= xhi; ++x) orow[x] += wv * irow[x * stride - 1 + kx];
                    }
                }
            }
        }
    }
}

void conv_backward(const double* in, Dims id, const Tensor& w, int stride, const double* dout,
                   Dims od, double* din, Tensor& dw, Tensor& db) {
    for (int o = 0; o < od.c; ++o) {
        const double* gplane = dout + o * od.plane();
        double acc = 0.0;
        for (std::size_t p = 0; p < od.plane(); ++p) acc += gplane[p];
        db[static_cast<std::size_t>(o)] += acc;
        for (int i = 0; i < id.c; ++i) {
            const double* iplane = in + i * id.plane();
            double* dplane = din ? din + i * id.plane() : nullptr;
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const std::size_t widx = ((static_cast<std::size_t>(o) * id.c + i) * kKernel + ky) * kKernel + kx;
                    const double wv = w[widx];
                    int xlo = 0, xhi = 0;
                    tap_range(kx, stride, id.w, od.w, xlo, xhi);
                    double gw = 0.0;
                    for (int y = 0; y < od.h; ++y) {
                        const int iy = y * stride - 1 + ky;
                        if (iy < 0 || iy >= id.h) continue;
                        const double* irow = iplane + static_cast<std::size_t>(iy) * id.w;
                        const double* grow = gplane + static_cast<std::size_t>(y) * od.w;
                        for (int x = xlo; x <= xhi; ++x) gw += grow[x] * irow[x * stride - 1 + kx];
                        if (dplane) {
                            double* drow = dplane + static_cast<std::size_t>(iy) * id.w;
                            for (int x = xlo; x <= xhi; ++x) drow[x * stride - 1 + kx] += wv * grow[x];
                        }
                    }
                    dw[widx] += gw;
                }
            }
        }
    }
}

// Stride-2 transposed 3x3 convolution (padding 1, output padding 1), the
// adjoint of the stride-2 convolution; doubles the spatial size. w is [Ci,Co,3,3].
void tconv_forward(const double* in, Dims id, const Tensor& w, const Tensor& b, double* out, Dims od) {
    for (int o = 0; o < od.c; ++o) {
        double* oplane = out + o * od.plane();
        std::fill(oplane, oplane + od.plane(), b[static_cast<std::size_t>(o)]);
    }
    for (int i = 0; i < id.c; ++i) {
        const double* iplane = in + i * id.plane();
        for (int o = 0; o < od.c; ++o) {
            double* oplane = out + o * od.plane();
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const double wv = w[((static_cast<std::size_t>(i) * od.c + o) * kKernel + ky) * kKernel + kx];
                    int xlo = 0, xhi = 0;
                    tap_range(kx, 2, od.w, id.w, xlo, xhi);
                    for (int iy = 0; iy < id.h; ++iy) {
                        const int y = 2 * iy - 1 + ky;
                        if (y < 0 || y >= od.h) continue;
                        const double* irow = iplane + static_cast<std::size_t>(iy) * id.w;
                        double* orow = oplane + static_cast<std::size_t>(y) * od.w;
                        for (int ix = xlo; ix <= xhi; ++ix) orow[2 * ix - 1 + kx] += wv * irow[ix];
                    }
                }
            }
        }
    }
}

void tconv_backward(const double* in, Dims id, const Tensor& w, const double* dout, Dims od,
                    double* din, Tensor& dw, Tensor& db) {
    for (int o = 0; o < od.c; ++o) {
        const double* gplane = dout + o * od.plane();
        double acc = 0.0;
        for (std::size_t p = 0; p < od.plane(); ++p) acc += gplane[p];
        db[static_cast<std::size_t>(o)] += acc;
    }
    for (int i = 0; i < id.c; ++i) {
        const double* iplane = in + i * id.plane();
        double* dplane = din ? din + i * id.plane() : nullptr;
        for (int o = 0; o < od.c; ++o) {
            const double* gplane = dout + o * od.plane();
            for (int ky = 0; ky < kKernel; ++ky) {
                for (int kx = 0; kx < kKernel; ++kx) {
                    const std::size_t widx = ((static_cast<std::size_t>(i) * od.c + o) * kKernel + ky) * kKernel + kx;
                    const double wv = w[widx];
                    int xlo = 0, xhi = 0;
                    tap_range(kx, 2, od.w, id.w, xlo, xhi);
                    double gw = 0.0;
                    for (int iy = 0; iy < id.h; ++iy) {
                        const int y = 2 * iy - 1 + ky;
                        if (y < 0 || y >= od.h) continue;
                        const double* irow = iplane + static_cast<std::size_t>(iy) * id.w;
                        const double* grow = gplane + static_cast<std::size_t>(y) * od.w;
                        for (int ix = xlo; ix <= xhi; ++ix) gw += grow[2 * ix - 1 + kx] * irow[ix];
                        if (dplane) {
                            double* drow = dplane + static_cast<std::size_t>(iy) * id.w;
                            for (int ix = xlo; ix <= xhi; ++ix) drow[ix] += wv * grow[2 * ix - 1 + kx];
                        }
                    }
                    dw[widx] += gw;
                }
            }
        }
    }
}

void relu_inplace(double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) v[i] = v[i] > 0.0 ? v[i] : 0.0;
}

void relu_backward(const double* post, double* grad, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        if (!(post[i] > 0.0)) grad[i] = 0.0;
    }
}

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

void init_uniform(Tensor& t, double fan_in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(fan_in);
    for (auto& v : t.values()) v = rng.uniform(-bound, bound);
}

} // namespace

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

ModelParams ModelParams::zeros(int latent_k) {
    if (latent_k < 1) throw ConfigInvalid("latent K must be positive");
    ModelParams p;
    p.latent_k = latent_k;
    p.enc1_w = Tensor({kEnc1Channels, 1, 3, 3});
    p.enc1_b = Tensor({kEnc1Channels});
    p.enc2_w = Tensor({kEnc2Channels, kEnc1Channels, 3, 3});
    p.enc2_b = Tensor({kEnc2Channels});
    p.bott_w = Tensor({kBottleneckChannels, kEnc2Channels, 3, 3});
    p.bott_b = Tensor({kBottleneckChannels});
    p.dec1_w = Tensor({kBottleneckChannels, kDec1Channels, 3, 3});
    p.dec1_b = Tensor({kDec1Channels});
    p.dec2_w = Tensor({kDec1Channels, 1, 3, 3});
    p.dec2_b = Tensor({1});
    p.inview_w = Tensor({kBottleneckChannels});
    p.inview_b = Tensor({1});
    p.proj_w = Tensor({3 * latent_k, kBottleneckChannels});
    p.proj_b = Tensor({3 * latent_k});
    return p;
}

ModelParams ModelParams::init(std::uint64_t seed, int latent_k) {
    ModelParams p = zeros(latent_k);
    Rng rng(seed);
    init_uniform(p.enc1_w, 1 * 9, rng);
    init_uniform(p.enc1_b, 1 * 9, rng);
    init_uniform(p.enc2_w, kEnc1Channels * 9, rng);
    init_uniform(p.enc2_b, kEnc1Channels * 9, rng);
    init_uniform(p.bott_w, kEnc2Channels * 9, rng);
    init_uniform(p.bott_b, kEnc2Channels * 9, rng);
    init_uniform(p.dec1_w, kBottleneckChannels * 9, rng);
    init_uniform(p.dec1_b, kBottleneckChannels * 9, rng);
    init_uniform(p.dec2_w, kDec1Channels * 9, rng);
    init_uniform(p.dec2_b, kDec1Channels * 9, rng);
    init_uniform(p.inview_w, kBottleneckChannels, rng);
    init_uniform(p.inview_b, kBottleneckChannels, rng);
    init_uniform(p.proj_w, kBottleneckChannels, rng);
    init_uniform(p.proj_b, kBottleneckChannels, rng);
    return p;
}

void ModelParams::for_each(const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("encoder.conv1.weight", enc1_w);
    fn("encoder.conv1.bias", enc1_b);
    fn("encoder.conv2.weight", enc2_w);
    fn("encoder.conv2.bias", enc2_b);
    fn("bottleneck.conv.weight", bott_w);
    fn("bottleneck.conv.bias", bott_b);
    fn("decoder.tconv1.weight", dec1_w);
    fn("decoder.tconv1.bias", dec1_b);
    fn("decoder.tconv2.weight", dec2_w);
    fn("decoder.tconv2.bias", dec2_b);
    fn("inview.weight", inview_w);
    fn("inview.bias", inview_b);
    fn("latent3d.weight", proj_w);
    fn("latent3d.bias", proj_b);
}

void ModelParams::for_each(const std::function<void(const std::string&, const Tensor&)>& fn) const {
    const_cast<ModelParams*>(this)->for_each(
        [&](const std::string& name, Tensor& t) { fn(name, static_cast<const Tensor&>(t)); });
}

std::size_t ModelParams::parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Tensor& t) { n += t.size(); });
    return n;
}

bool ModelParams::all_finite() const {
    bool ok = true;
    for_each([&](const std::string&, const Tensor& t) {
        for (double v : t.values()) ok = ok && std::isfinite(v);
    });
    return ok;
}

std::vector<double> flatten(const ModelParams& p) {
    std::vector<double> flat;
    flat.reserve(p.parameter_count());
    p.for_each([&](const std::string&, const Tensor& t) {
        flat.insert(flat.end(), t.values().begin(), t.values().end());
    });
    return flat;
}

void unflatten(std::span<const double> flat, ModelParams& p) {
    if (flat.size() != p.parameter_count()) throw ShapeMismatch("flat parameter vector has wrong length");
    std::size_t offset = 0;
    p.for_each([&](const std::string&, Tensor& t) {
        std::copy_n(flat.begin() + static_cast<std::ptrdiff_t>(offset), t.size(), t.data());
        offset += t.size();
    });
}

geometry::Vec3 LatentField::vector(int kk, int cell) const {
    const std::size_t plane = static_cast<std::size_t>(height) * width;
    const std::size_t base = static_cast<std::size_t>(3 * kk) * plane + static_cast<std::size_t>(cell);
    return {values[base], values[base + plane], values[base + 2 * plane]};
}

Tensor spatial_softmax(const Tensor& logits) {
    if (logits.rank() != 3) throw ShapeMismatch("spatial_softmax expects [T,H,W]");
    Tensor probs(logits.shape());
    const std::size_t plane = static_cast<std::size_t>(logits.dim(1)) * logits.dim(2);
    for (int t = 0; t < logits.dim(0); ++t) {
        const double* z = logits.data() + t * plane;
        double* p = probs.data() + t * plane;
        const double zmax = *std::max_element(z, z + plane);
        double sum = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            p[i] = std::exp(z[i] - zmax);
            sum += p[i];
        }
        for (std::size_t i = 0; i < plane; ++i) p[i] /= sum;
    }
    return probs;
}

LatentField project_latent_3d(const Tensor& bottleneck, const ModelParams& params) {
    if (bottleneck.rank() != 3 || bottleneck.dim(0) != kBottleneckChannels) {
        throw ShapeMismatch("bottleneck must be [16,h,w]");
    }
    if (params.proj_w.dim(0) != 3 * params.latent_k) throw ShapeMismatch("projection does not match K");
    LatentField f;
    f.k = params.latent_k;
    f.height = bottleneck.dim(1);
    f.width = bottleneck.dim(2);
    const int channels = 3 * f.k;
    const std::size_t plane = static_cast<std::size_t>(f.height) * f.width;
    f.values = Tensor({channels, f.height, f.width});
    for (int ch = 0; ch < channels; ++ch) {
        double* dst = f.values.data() + ch * plane;
        std::fill(dst, dst + plane, params.proj_b[static_cast<std::size_t>(ch)]);
        for (int c = 0; c < kBottleneckChannels; ++c) {
            const double wv = params.proj_w[static_cast<std::size_t>(ch) * kBottleneckChannels + c];
            const double* src = bottleneck.data() + c * plane;
            for (std::size_t p = 0; p < plane; ++p) dst[p] += wv * src[p];
        }
    }
    return f;
}

ForwardOutput forward(const Tensor& frames, const ModelParams& params) {
    if (frames.rank() != 3) throw ShapeMismatch("forward expects [T,H,W] frames");
    const int t_count = frames.dim(0);
    const int h = frames.dim(1);
    const int w = frames.dim(2);
    if (t_count < 1 || h < 4 || w < 4 || h % 4 != 0 || w % 4 != 0) {
        throw ShapeMismatch("frame height and width must be positive multiples of 4");
    }
    const Dims in_d{1, h, w};
    const Dims e1_d{kEnc1Channels, h / 2, w / 2};
    const Dims e2_d{kEnc2Channels, h / 4, w / 4};
    const Dims b_d{kBottleneckChannels, h / 4, w / 4};
    const Dims d1_d{kDec1Channels, h / 2, w / 2};
    const Dims d2_d{1, h, w};

    ForwardOutput out;
    auto& c = out.cache;
    c.input = Tensor({t_count, 1, h, w});
    std::copy(frames.values().begin(), frames.values().end(), c.input.data());
    c.enc1 = Tensor({t_count, e1_d.c, e1_d.h, e1_d.w});
    c.enc2 = Tensor({t_count, e2_d.c, e2_d.h, e2_d.w});
    c.bott = Tensor({t_count, b_d.c, b_d.h, b_d.w});
    c.dec1 = Tensor({t_count, d1_d.c, d1_d.h, d1_d.w});
    c.pooled = Tensor({t_count, kBottleneckChannels});
    out.logits = Tensor({t_count, h, w});
    out.inview_logits = Tensor({t_count});

    for (int t = 0; t < t_count; ++t) {
        const double* x = c.input.data() + t * in_d.size();
        double* e1 = c.enc1.data() + t * e1_d.size();
        double* e2 = c.enc2.data() + t * e2_d.size();
        double* bt = c.bott.data() + t * b_d.size();
        double* d1 = c.dec1.data() + t * d1_d.size();
        double* lg = out.logits.data() + t * d2_d.size();

        conv_forward(x, in_d, params.enc1_w, params.enc1_b, 2, e1, e1_d);
        relu_inplace(e1, e1_d.size());
        conv_forward(e1, e1_d, params.enc2_w, params.enc2_b, 2, e2, e2_d);
        relu_inplace(e2, e2_d.size());
        conv_forward(e2, e2_d, params.bott_w, params.bott_b, 1, bt, b_d);
        relu_inplace(bt, b_d.size());
        tconv_forward(bt, b_d, params.dec1_w, params.dec1_b, d1, d1_d);
        relu_inplace(d1, d1_d.size());
        tconv_forward(d1, d1_d, params.dec2_w, params.dec2_b, lg, d2_d);

        double z = params.inview_b[0];
        for (int ch = 0; ch < b_d.c; ++ch) {
            const double* plane = bt + ch * b_d.plane();
            double s = 0.0;
            for (std::size_t p = 0; p < b_d.plane(); ++p) s += plane[p];
            const double mean = s / static_cast<double>(b_d.plane());
            c.pooled[static_cast<std::size_t>(t) * kBottleneckChannels + ch] = mean;
            z += params.inview_w[static_cast<std::size_t>(ch)] * mean;
        }
        out.inview_logits[static_cast<std::size_t>(t)] = z;
    }

    out.probs = spatial_softmax(out.logits);
    out.bottleneck = Tensor({b_d.c, b_d.h, b_d.w});
    for (int t = 0; t < t_count; ++t) {
        const double* bt = c.bott.data() + t * b_d.size();
        for (std::size_t i = 0; i < b_d.size(); ++i) out.bottleneck[i] += bt[i];
    }
    for (auto& v : out.bottleneck.values()) v /= t_count;
    out.latent = project_latent_3d(out.bottleneck, params);
    return out;
}

double heatmap_loss(const Tensor& pred, const Tensor& target) {
    if (!pred.same_shape(target) || pred.rank() != 3) {
        throw ShapeMismatch("heatmap_loss expects matching [T,H,W] maps");
    }
    const std::size_t plane = static_cast<std::size_t>(pred.dim(1)) * pred.dim(2);
    double total = 0.0;
    for (int t = 0; t < pred.dim(0); ++t) {
        double kl = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            const double q = target[t * plane + i];
            if (q > 0.0) kl += q * (std::log(q) - std::log(pred[t * plane + i] + kLogEpsilon));
        }
        total += kl;
    }
    return total / pred.dim(0);
}

double inbound_loss(std::span<const double> logits, std::span<const int> labels, double pos_weight) {
    if (logits.size() != labels.size() || logits.empty()) {
        throw ShapeMismatch("inbound_loss expects matching nonempty logits and labels");
    }
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double z = logits[i];
        // -[p y log s(z) + (1-y) log(1-s(z))] in overflow-free form.
        total += labels[i] ? pos_weight * softplus(-z) : softplus(z);
    }
    return total / static_cast<double>(logits.size());
}

namespace {

void check_rotation(const geometry::Mat3& r) {
    if ((r.transpose() * r - geometry::Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6) {
        throw NotARotation("alignment matrix is not orthonormal");
    }
}

void check_fields(const LatentField& a, const LatentField& b) {
    if (a.k != b.k || a.height != b.height || a.width != b.width || !a.values.same_shape(b.values)) {
        throw ShapeMismatch("latent fields differ in shape");
    }
}

} // namespace

double align_loss(const LatentField& head, const LatentField& neck, const geometry::Mat3& rotation) {
    return align_loss_grad(head, neck, rotation).loss;
}

AlignGrad align_loss_grad(const LatentField& head, const LatentField& neck,
                          const geometry::Mat3& rotation) {
    check_fields(head, neck);
    check_rotation(rotation);
    const std::size_t plane = static_cast<std::size_t>(head.height) * head.width;
    const double n = 3.0 * static_cast<double>(head.vector_count());
    AlignGrad g;
    g.d_head = Tensor(head.values.shape());
    g.d_neck = Tensor(neck.values.shape());
    double sum = 0.0;
    for (int k = 0; k < head.k; ++k) {
        for (std::size_t cell = 0; cell < plane; ++cell) {
            const std::size_t base = static_cast<std::size_t>(3 * k) * plane + cell;
            const geometry::Vec3 hv(head.values[base], head.values[base + plane], head.values[base + 2 * plane]);
            const geometry::Vec3 nv(neck.values[base], neck.values[base + plane], neck.values[base + 2 * plane]);
            const geometry::Vec3 diff = rotation * hv - nv;
            sum += diff.squaredNorm();
            const geometry::Vec3 dh = (2.0 / n) * (rotation.transpose() * diff);
            const geometry::Vec3 dn = (-2.0 / n) * diff;
            for (int a = 0; a < 3; ++a) {
                g.d_head[base + a * plane] = dh[a];
                g.d_neck[base + a * plane] = dn[a];
            }
        }
    }
    g.loss = sum / n;
    return g;
}

Gradients backward(const ForwardOutput& out, const Tensor& targets, std::span<const int> labels,
                   const ModelParams& params, double heatmap_w, double inbound_w,
                   const Tensor* latent_grad, double pos_weight) {
    const auto& c = out.cache;
    const int t_count = out.logits.dim(0);
    const int h = out.logits.dim(1);
    const int w = out.logits.dim(2);
    if (!targets.same_shape(out.probs)) throw ShapeMismatch("targets do not match prediction shape");
    if (labels.size() != static_cast<std::size_t>(t_count)) throw ShapeMismatch("one label per frame required");

    const Dims in_d{1, h, w};
    const Dims e1_d{kEnc1Channels, h / 2, w / 2};
    const Dims e2_d{kEnc2Channels, h / 4, w / 4};
    const Dims b_d{kBottleneckChannels, h / 4, w / 4};
    const Dims d1_d{kDec1Channels, h / 2, w / 2};
    const Dims d2_d{1, h, w};

    Gradients g = ModelParams::zeros(params.latent_k);
    const std::size_t plane = d2_d.plane();

    // Latent projection: field = P * mean_t(bott) + b.
    Tensor d_bott_mean({b_d.c, b_d.h, b_d.w});
    bool have_latent = latent_grad != nullptr;
    if (have_latent) {
        if (!latent_grad->same_shape(out.latent.values)) throw ShapeMismatch("latent gradient shape");
        const int channels = 3 * params.latent_k;
        for (int ch = 0; ch < channels; ++ch) {
            const double* dfield = latent_grad->data() + ch * b_d.plane();
            double acc_b = 0.0;
            for (std::size_t p = 0; p < b_d.plane(); ++p) acc_b += dfield[p];
            g.proj_b[static_cast<std::size_t>(ch)] += acc_b;
            for (int cc = 0; cc < b_d.c; ++cc) {
                const double* bm = out.bottleneck.data() + cc * b_d.plane();
                double acc_w = 0.0;
                for (std::size_t p = 0; p < b_d.plane(); ++p) acc_w += dfield[p] * bm[p];
                g.proj_w[static_cast<std::size_t>(ch) * kBottleneckChannels + cc] += acc_w;
                const double wv = params.proj_w[static_cast<std::size_t>(ch) * kBottleneckChannels + cc];
                double* dbm = d_bott_mean.data() + cc * b_d.plane();
                for (std::size_t p = 0; p < b_d.plane(); ++p) dbm[p] += wv * dfield[p];
            }
        }
    }

    std::vector<double> d_logits(plane);
    std::vector<double> d_d1(d1_d.size());
    std::vector<double> d_b(b_d.size());
    std::vector<double> d_e2(e2_d.size());
    std::vector<double> d_e1(e1_d.size());

    for (int t = 0; t < t_count; ++t) {
        const double* p = out.probs.data() + t * plane;
        const double* q = targets.data() + t * plane;
        // d/dp of -(1/T) sum q log(p + eps), pulled back through the softmax.
        double dot = 0.0;
        for (std::size_t i = 0; i < plane; ++i) {
            const double gp = -q[i] / (p[i] + kLogEpsilon) / t_count;
            d_logits[i] = gp;
            dot += p[i] * gp;
        }
        for (std::size_t i = 0; i < plane; ++i) d_logits[i] = heatmap_w * p[i] * (d_logits[i] - dot);

        const double* e1 = c.enc1.data() + t * e1_d.size();
        const double* e2 = c.enc2.data() + t * e2_d.size();
        const double* bt = c.bott.data() + t * b_d.size();
        const double* d1 = c.dec1.data() + t * d1_d.size();
        const double* x = c.input.data() + t * in_d.size();

        std::fill(d_d1.begin(), d_d1.end(), 0.0);
        tconv_backward(d1, d1_d, params.dec2_w, d_logits.data(), d2_d, d_d1.data(), g.dec2_w, g.dec2_b);
        relu_backward(d1, d_d1.data(), d_d1.size());

        std::fill(d_b.begin(), d_b.end(), 0.0);
        tconv_backward(bt, b_d, params.dec1_w, d_d1.data(), d1_d, d_b.data(), g.dec1_w, g.dec1_b);

        // In-view head on the spatially pooled bottleneck.
        const double z = out.inview_logits[static_cast<std::size_t>(t)];
        const double dz = inbound_w *
                          (labels[static_cast<std::size_t>(t)] ? pos_weight * (sigmoid(z) - 1.0) : sigmoid(z)) /
                          t_count;
        g.inview_b[0] += dz;
        for (int ch = 0; ch < b_d.c; ++ch) {
            g.inview_w[static_cast<std::size_t>(ch)] +=
                dz * c.pooled[static_cast<std::size_t>(t) * kBottleneckChannels + ch];
            const double dmean = dz * params.inview_w[static_cast<std::size_t>(ch)] /
                                 static_cast<double>(b_d.plane());
            double* dplane = d_b.data() + ch * b_d.plane();
            for (std::size_t pidx = 0; pidx < b_d.plane(); ++pidx) dplane[pidx] += dmean;
        }
        if (have_latent) {
            for (std::size_t i = 0; i < b_d.size(); ++i) d_b[i] += d_bott_mean[i] / t_count;
        }
        relu_backward(bt, d_b.data(), d_b.size());

        std::fill(d_e2.begin(), d_e2.end(), 0.0);
        conv_backward(e2, e2_d, params.bott_w, 1, d_b.data(), b_d, d_e2.data(), g.bott_w, g.bott_b);
        relu_backward(e2, d_e2.data(), d_e2.size());

        std::fill(d_e1.begin(), d_e1.end(), 0.0);
        conv_backward(e1, e1_d, params.enc2_w, 2, d_e2.data(), e2_d, d_e1.data(), g.enc2_w, g.enc2_b);
        relu_backward(e1, d_e1.data(), d_e1.size());

        conv_backward(x, in_d, params.enc1_w, 2, d_e1.data(), e1_d, nullptr, g.enc1_w, g.enc1_b);
    }
    return g;
}

namespace {

LossTerms single_terms(const ForwardOutput& out, const Example& ex, const LossWeights& w) {
    LossTerms l;
    l.heatmap = heatmap_loss(out.probs, ex.targets);
    l.inbound = inbound_loss(out.inview_logits.values(), ex.labels, w.pos_weight);
    l.total = w.heatmap * l.heatmap + w.inbound * l.inbound;
    return l;
}

} // namespace

SingleResult loss_and_grad(const Example& ex, const ModelParams& params, const LossWeights& w) {
    SingleResult r;
    r.output = forward(ex.frames, params);
    r.loss = single_terms(r.output, ex, w);
    r.grad = backward(r.output, ex.targets, ex.labels, params, w.heatmap, w.inbound, nullptr, w.pos_weight);
    return r;
}

LossTerms loss_only(const Example& ex, const ModelParams& params, const LossWeights& w) {
    return single_terms(forward(ex.frames, params), ex, w);
}

PairResult pair_loss_and_grad(const Example& head, const Example& neck, const geometry::Mat3& r_rel,
                              const ModelParams& head_params, const ModelParams& neck_params,
                              const LossWeights& w) {
    const auto head_out = forward(head.frames, head_params);
    const auto neck_out = forward(neck.frames, neck_params);
    auto ag = align_loss_grad(head_out.latent, neck_out.latent, r_rel);
    for (auto& v : ag.d_head.values()) v *= w.align;
    for (auto& v : ag.d_neck.values()) v *= w.align;

    PairResult r;
    r.loss.heatmap = heatmap_loss(head_out.probs, head.targets) + heatmap_loss(neck_out.probs, neck.targets);
    r.loss.align = ag.loss;
    r.loss.total = w.heatmap * r.loss.heatmap + w.align * r.loss.align;
    r.head_grad = backward(head_out, head.targets, head.labels, head_params, w.heatmap, 0.0, &ag.d_head);
    r.neck_grad = backward(neck_out, neck.targets, neck.labels, neck_params, w.heatmap, 0.0, &ag.d_neck);
    return r;
}

LossTerms pair_loss_only(const Example& head, const Example& neck, const geometry::Mat3& r_rel,
                         const ModelParams& head_params, const ModelParams& neck_params,
                         const LossWeights& w) {
    const auto head_out = forward(head.frames, head_params);
    const auto neck_out = forward(neck.frames, neck_params);
    LossTerms l;
    l.heatmap = heatmap_loss(head_out.probs, head.targets) + heatmap_loss(neck_out.probs, neck.targets);
    l.align = align_loss(head_out.latent, neck_out.latent, r_rel);
    l.total = w.heatmap * l.heatmap + w.align * l.align;
    return l;
}

} // namespace gazebench::model
