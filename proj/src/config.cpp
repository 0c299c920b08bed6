#include "gazebench/config.hpp"

#include "gazebench/errors.hpp"

#include <fstream>
#include <set>
#include <type_traits>

namespace gazebench::config {
namespace {

// Reads keys from one JSON object and rejects the ones nobody asked for.
class Section {
public:
    Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
        if (!j_.is_object()) throw ConfigInvalid(name_ + " must be a JSON object");
    }

    template <typename T>
    void get(const std::string& key, T& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) fail(key, "expected a boolean");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) fail(key, "expected an integer");
            if constexpr (std::is_unsigned_v<T>) {
                if (v.is_number_integer() && !v.is_number_unsigned()) fail(key, "expected a nonnegative integer");
            }
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) fail(key, "expected a number");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) fail(key, "expected a string");
        }
        try {
            out = v.get<T>();
        } catch (const json::exception& e) {
            fail(key, e.what());
        }
    }

    void get(const std::string& key, synth::Range& out) {
        seen_.insert(key);
        if (!j_.contains(key)) return;
        const json& v = j_.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            fail(key, "expected [lo, hi]");
        }
        out = {v[0].get<double>(), v[1].get<double>()};
    }

    void get(const std::string& key, geometry::Intrinsics& out) {
        if (const json* c = child(key)) {
            Section s(*c, name_ + "." + key);
            s.get("fx", out.fx);
            s.get("fy", out.fy);
            s.get("cx", out.cx);
            s.get("cy", out.cy);
            s.get("width", out.width);
            s.get("height", out.height);
            s.finish();
        }
    }

    const json* child(const std::string& key) {
        seen_.insert(key);
        return j_.contains(key) ? &j_.at(key) : nullptr;
    }

    void finish() const {
        for (const auto& item : j_.items()) {
            if (!seen_.count(item.key())) throw ConfigInvalid("unknown key '" + name_ + "." + item.key() + "'");
        }
    }

private:
    [[noreturn]] void fail(const std::string& key, const std::string& why) const {
        throw ConfigInvalid(name_ + "." + key + ": " + why);
    }

    const json& j_;
    std::string name_;
    std::set<std::string> seen_;
};

json range_json(const synth::Range& r) { return json::array({r.lo, r.hi}); }

json intrinsics_json(const geometry::Intrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

} // namespace

json to_json(const synth::SceneConfig& c) {
    return {
        {"fps", c.fps},
        {"duration_s", c.duration_s},
        {"width", c.width},
        {"height", c.height},
        {"head_intrinsics", intrinsics_json(c.head_intrinsics)},
        {"neck_intrinsics", intrinsics_json(c.neck_intrinsics)},
        {"neck_drop_m", c.neck_drop_m},
        {"neck_forward_m", c.neck_forward_m},
        {"neck_pitch_rad", c.neck_pitch_rad},
        {"head_motion_rad", c.head_motion_rad},
        {"neck_motion_rad", c.neck_motion_rad},
        {"head_tracking_gain", c.head_tracking_gain},
        {"torso_follow", c.torso_follow},
        {"torso_smoothing", c.torso_smoothing},
        {"fixation_s", range_json(c.fixation_s)},
        {"saccade_amplitude", range_json(c.saccade_amplitude)},
        {"gaze_u", range_json(c.gaze_u)},
        {"gaze_v", range_json(c.gaze_v)},
        {"target_depth_m", range_json(c.target_depth_m)},
        {"landmark_count", c.landmark_count},
        {"target_sigma_px", c.target_sigma_px},
        {"low_confidence_fraction", c.low_confidence_fraction},
        {"frame_offset", c.frame_offset},
        {"marker_window_s", c.marker_window_s},
        {"render", c.render},
        {"seed", c.seed},
    };
}

json to_json(const training::TrainConfig& c) {
    return {
        {"variant", training::to_string(c.variant)},
        {"epochs", c.epochs},
        {"batch_size", c.batch_size},
        {"loss_weights", {{"heatmap", c.weights.heatmap}, {"inbound", c.weights.inbound}, {"align", c.weights.align}}},
        {"adamw",
         {{"lr", c.adamw.lr},
          {"beta1", c.adamw.beta1},
          {"beta2", c.adamw.beta2},
          {"eps", c.adamw.eps},
          {"weight_decay", c.adamw.weight_decay}}},
        {"seed", c.seed},
        {"frames_per_clip", c.frames_per_clip},
        {"frame_stride", c.frame_stride},
        {"crop_width", c.crop_width},
        {"sigma_px", c.sigma_px},
        {"latent_k", c.latent_k},
        {"input_mean", c.input_mean},
        {"input_std", c.input_std},
        {"balance_inbound", c.balance_inbound},
    };
}

json to_json(const eval::EvalConfig& c) {
    return {
        {"thresholds", c.thresholds},
        {"mode", eval::to_string(c.mode)},
        {"gt_radius_px", c.gt_radius_px},
        {"classifier_threshold", c.classifier_threshold},
    };
}

json to_json(const RunConfig& c) {
    return {
        {"scene", to_json(c.scene)},
        {"annotation",
         {{"disp_threshold", c.thresholds.disp_threshold},
          {"conf_threshold", c.thresholds.conf_threshold},
          {"clip_len_s", c.clip_len_s},
          {"test_fraction", c.test_fraction}}},
        {"train", to_json(c.train)},
        {"max_clips", c.max_clips},
        {"eval", to_json(c.eval)},
    };
}

synth::SceneConfig scene_from_json(const json& j, synth::SceneConfig c) {
    Section s(j, "scene");
    s.get("fps", c.fps);
    s.get("duration_s", c.duration_s);
    s.get("width", c.width);
    s.get("height", c.height);
    s.get("head_intrinsics", c.head_intrinsics);
    s.get("neck_intrinsics", c.neck_intrinsics);
    s.get("neck_drop_m", c.neck_drop_m);
    s.get("neck_forward_m", c.neck_forward_m);
    s.get("neck_pitch_rad", c.neck_pitch_rad);
    s.get("head_motion_rad", c.head_motion_rad);
    s.get("neck_motion_rad", c.neck_motion_rad);
    s.get("head_tracking_gain", c.head_tracking_gain);
    s.get("torso_follow", c.torso_follow);
    s.get("torso_smoothing", c.torso_smoothing);
    s.get("fixation_s", c.fixation_s);
    s.get("saccade_amplitude", c.saccade_amplitude);
    s.get("gaze_u", c.gaze_u);
    s.get("gaze_v", c.gaze_v);
    s.get("target_depth_m", c.target_depth_m);
    s.get("landmark_count", c.landmark_count);
    s.get("target_sigma_px", c.target_sigma_px);
    s.get("low_confidence_fraction", c.low_confidence_fraction);
    s.get("frame_offset", c.frame_offset);
    s.get("marker_window_s", c.marker_window_s);
    s.get("render", c.render);
    s.get("seed", c.seed);
    s.finish();
    return c;
}

training::TrainConfig train_from_json(const json& j, training::TrainConfig c) {
    Section s(j, "train");
    std::string variant = training::to_string(c.variant);
    s.get("variant", variant);
    c.variant = training::variant_from_string(variant);
    s.get("epochs", c.epochs);
    s.get("batch_size", c.batch_size);
    if (const json* w = s.child("loss_weights")) {
        Section ws(*w, "train.loss_weights");
        ws.get("heatmap", c.weights.heatmap);
        ws.get("inbound", c.weights.inbound);
        ws.get("align", c.weights.align);
        ws.finish();
    }
    if (const json* a = s.child("adamw")) {
        Section as(*a, "train.adamw");
        as.get("lr", c.adamw.lr);
        as.get("beta1", c.adamw.beta1);
        as.get("beta2", c.adamw.beta2);
        as.get("eps", c.adamw.eps);
        as.get("weight_decay", c.adamw.weight_decay);
        as.finish();
    }
    s.get("seed", c.seed);
    s.get("frames_per_clip", c.frames_per_clip);
    s.get("frame_stride", c.frame_stride);
    s.get("crop_width", c.crop_width);
    s.get("sigma_px", c.sigma_px);
    s.get("latent_k", c.latent_k);
    s.get("input_mean", c.input_mean);
    s.get("input_std", c.input_std);
    s.get("balance_inbound", c.balance_inbound);
    s.finish();
    return c;
}

eval::EvalConfig eval_from_json(const json& j, eval::EvalConfig c) {
    Section s(j, "eval");
    if (const json* t = s.child("thresholds")) {
        if (!t->is_array()) throw ConfigInvalid("eval.thresholds must be an array");
        c.thresholds.clear();
        for (const auto& v : *t) {
            if (!v.is_number()) throw ConfigInvalid("eval.thresholds must hold numbers");
            c.thresholds.push_back(v.get<double>());
        }
    }
    std::string mode = eval::to_string(c.mode);
    s.get("mode", mode);
    c.mode = eval::threshold_mode_from_string(mode);
    s.get("gt_radius_px", c.gt_radius_px);
    s.get("classifier_threshold", c.classifier_threshold);
    s.finish();
    return c;
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    Section s(j, "config");
    if (const json* v = s.child("scene")) c.scene = scene_from_json(*v);
    if (const json* v = s.child("annotation")) {
        Section a(*v, "annotation");
        a.get("disp_threshold", c.thresholds.disp_threshold);
        a.get("conf_threshold", c.thresholds.conf_threshold);
        a.get("clip_len_s", c.clip_len_s);
        a.get("test_fraction", c.test_fraction);
        a.finish();
    }
    if (const json* v = s.child("train")) c.train = train_from_json(*v);
    s.get("max_clips", c.max_clips);
    if (const json* v = s.child("eval")) c.eval = eval_from_json(*v);
    s.finish();
    c.validate();
    return c;
}

void RunConfig::validate() const {
    scene.validate();
    train.validate();
    eval.validate();
    if (!(thresholds.disp_threshold > 0.0)) throw ConfigInvalid("disp_threshold must be positive");
    if (!(thresholds.conf_threshold >= 0.0 && thresholds.conf_threshold <= 1.0)) {
        throw ConfigInvalid("conf_threshold must lie in [0,1]");
    }
    if (!(clip_len_s > 0.0)) throw ConfigInvalid("clip_len_s must be positive");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigInvalid("test_fraction must lie in (0,1)");
    if (max_clips <= 0) throw ConfigInvalid("max_clips must be positive");
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

RunConfig load_run_config(const std::filesystem::path& path) {
    if (!std::filesystem::is_regular_file(path)) throw ConfigInvalid("config file " + path.string() + " not found");
    try {
        return run_config_from_json(read_json_file(path));
    } catch (const FormatError& e) {
        throw ConfigInvalid(e.what());
    }
}

} // namespace gazebench::config
