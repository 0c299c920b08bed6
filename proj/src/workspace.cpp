#include "gazebench/workspace.hpp"

#include "gazebench/errors.hpp"
#include "gazebench/session_io.hpp"
#include "gazebench/tensor_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace gazebench::workspace {
namespace {

using config::json;
using synth::View;

constexpr double kMappingTolerancePx = 1e-6;

} // namespace

std::string session_id(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "session_%03zu", index);
    return buf;
}

Manifest generate(const std::filesystem::path& dir, const synth::SceneConfig& scene, std::uint64_t seed,
                  int count) {
    if (count < 1) throw ConfigInvalid("session count must be positive");
    scene.validate();
    Manifest m;
    m.seed = seed;
    m.scene = scene;
    for (int i = 0; i < count; ++i) {
        synth::SceneConfig cfg = scene;
        cfg.seed = seed + static_cast<std::uint64_t>(i);
        const auto rec = synth::generate_session(cfg);
        const auto id = session_id(static_cast<std::size_t>(i));
        session_io::write_session(dir / id, rec);
        m.sessions.push_back({id, cfg.seed});
    }
    write_manifest(dir, m);
    return m;
}

void write_manifest(const std::filesystem::path& dir, const Manifest& manifest) {
    json sessions = json::array();
    for (const auto& s : manifest.sessions) sessions.push_back({{"id", s.id}, {"seed", s.seed}});
    std::filesystem::create_directories(dir);
    config::write_json_file(dir / "manifest.json",
                            {{"seed", manifest.seed}, {"scene", config::to_json(manifest.scene)}, {"sessions", sessions}});
}

Manifest read_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    if (!std::filesystem::is_regular_file(path)) throw NoSessions("no manifest.json in " + dir.string());
    const json j = config::read_json_file(path);
    Manifest m;
    try {
        m.seed = j.at("seed").get<std::uint64_t>();
        m.scene = config::scene_from_json(j.at("scene"));
        for (const auto& s : j.at("sessions")) {
            m.sessions.push_back({s.at("id").get<std::string>(), s.at("seed").get<std::uint64_t>()});
        }
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
    if (m.sessions.empty()) throw NoSessions("manifest in " + dir.string() + " lists no sessions");
    return m;
}

const std::vector<std::string>& Split::get(const std::string& name) const {
    if (name == "train") return train;
    if (name == "test") return test;
    throw ConfigInvalid("split must be train or test, got '" + name + "'");
}

Split make_split(const Manifest& manifest, double test_fraction) {
    const long n = static_cast<long>(manifest.sessions.size());
    long n_test = std::lround(static_cast<double>(n) * test_fraction);
    if (n >= 2) n_test = std::clamp(n_test, 1L, n - 1);
    else n_test = 0;
    Split s;
    for (long i = 0; i < n; ++i) {
        (i < n - n_test ? s.train : s.test).push_back(manifest.sessions[static_cast<std::size_t>(i)].id);
    }
    return s;
}

void write_split(const std::filesystem::path& dir, const Split& split) {
    config::write_json_file(dir / "split.json", {{"train", split.train}, {"test", split.test}});
}

Split read_split(const std::filesystem::path& dir) {
    const auto path = dir / "split.json";
    if (!std::filesystem::is_regular_file(path)) {
        throw Error("no split.json in " + dir.string() + "; run annotate first");
    }
    const json j = config::read_json_file(path);
    try {
        return {j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>()};
    } catch (const json::exception& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

AnnotateSummary annotate(const std::filesystem::path& dir, const config::RunConfig& config, bool write_targets) {
    config.validate();
    const Manifest manifest = read_manifest(dir);
    AnnotateSummary summary;
    std::ofstream clips_out(dir / "clips.jsonl", std::ios::trunc);
    if (!clips_out) throw Error("cannot write clips.jsonl in " + dir.string());
    for (const auto& entry : manifest.sessions) {
        const auto session = session_io::read_session(dir / entry.id, true);
        const auto ann = annotation::annotate_session(session, entry.id, config.clip_len_s, config.thresholds);
        if (!(ann.max_mapping_error_px <= kMappingTolerancePx)) {
            throw Error(entry.id + ": neck gaze disagrees with the head-to-neck mapping by " +
                        std::to_string(ann.max_mapping_error_px) + " px");
        }
        if (ann.offset != session.frame_offset) {
            throw Error(entry.id + ": recovered offset " + std::to_string(ann.offset) + " but the recording says " +
                        std::to_string(session.frame_offset));
        }
        for (const auto* clips : {&ann.head_clips, &ann.neck_clips}) {
            for (std::size_t c = 0; c < clips->size(); ++c) {
                const auto& clip = (*clips)[c];
                json labels = json::array();
                for (const auto& s : clip.samples) labels.push_back(annotation::to_string(s.label));
                clips_out << json{{"session", clip.session_id},
                                  {"view", synth::to_string(clip.view)},
                                  {"clip", c},
                                  {"start_frame", clip.start_frame},
                                  {"length", clip.length},
                                  {"offset", ann.offset},
                                  {"labels", labels},
                                  {"in_view", clip.in_view}}
                                 .dump()
                          << '\n';
            }
        }
        if (write_targets) {
            for (const auto& [view, labels] : {std::pair{View::Head, &ann.head_labels},
                                               std::pair{View::Neck, &ann.neck_labels}}) {
                const int h = session.config.height;
                const int w = session.config.width;
                std::vector<float> values;
                values.reserve(labels->size() * static_cast<std::size_t>(h * w));
                for (const auto& s : *labels) {
                    const auto t = annotation::make_heatmap_target(s, h, w, config.train.sigma_px);
                    for (double v : t.values()) values.push_back(static_cast<float>(v));
                }
                tensor_io::write_file(dir / entry.id / ("targets_" + synth::to_string(view) + ".gzt"),
                                      tensor_io::Blob::from_f32({static_cast<std::uint32_t>(labels->size()),
                                                                 static_cast<std::uint32_t>(h),
                                                                 static_cast<std::uint32_t>(w)},
                                                                values));
            }
        }
        summary.sessions.push_back({entry.id, ann.offset, ann.max_mapping_error_px, ann.head_clips.size(),
                                    ann.neck_clips.size()});
    }
    if (!clips_out) throw Error("write failed for clips.jsonl");
    summary.split = make_split(manifest, config.test_fraction);
    write_split(dir, summary.split);
    return summary;
}

training::TrainingClip to_training_clip(const synth::SessionRecord& session, const annotation::Clip& clip) {
    const auto& stream = session.stream(clip.view);
    if (stream.frames.empty()) throw Error(clip.session_id + " has no rendered frames");
    training::TrainingClip out;
    out.session_id = clip.session_id;
    out.view = clip.view;
    out.start_frame = clip.start_frame;
    out.height = session.config.height;
    out.width = session.config.width;
    const std::size_t plane = static_cast<std::size_t>(out.height) * out.width;
    const auto first = stream.frames.begin() + static_cast<std::ptrdiff_t>(clip.start_frame * plane);
    out.frames.assign(first, first + static_cast<std::ptrdiff_t>(clip.length * plane));
    out.samples = clip.samples;
    return out;
}

training::ClipPair make_clip_pair(const synth::SessionRecord& session, const annotation::Clip& head,
                                  const annotation::Clip& neck, int offset) {
    if (neck.start_frame - head.start_frame != offset || head.length != neck.length) {
        throw PairMismatch("head clip at " + std::to_string(head.start_frame) + " and neck clip at " +
                           std::to_string(neck.start_frame) + " do not cover the same instants");
    }
    training::ClipPair pair;
    pair.head = to_training_clip(session, head);
    pair.neck = to_training_clip(session, neck);
    pair.offset = offset;
    for (int i = 0; i < head.length; ++i) {
        const auto rel = geometry::relative_extrinsics(session.head.poses[static_cast<std::size_t>(head.start_frame + i)],
                                                       session.neck.poses[static_cast<std::size_t>(neck.start_frame + i)]);
        pair.r_rel.push_back(rel.rotation);
    }
    return pair;
}

std::vector<std::size_t> spread(std::size_t available, std::size_t wanted) {
    wanted = std::min(wanted, available);
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < wanted; ++i) idx.push_back(i * available / wanted);
    return idx;
}

training::TrainingData load_data(const std::filesystem::path& dir, const std::vector<std::string>& sessions,
                                 training::Variant variant, int max_clips, const config::RunConfig& config) {
    training::TrainingData data;
    if (sessions.empty()) return data;
    const std::size_t cap = max_clips > 0 ? static_cast<std::size_t>(max_clips) : SIZE_MAX;
    const std::size_t per_session = max_clips > 0 ? (cap + sessions.size() - 1) / sessions.size() : SIZE_MAX;
    const bool pairs = variant == training::Variant::Colearn;
    std::size_t taken = 0;
    for (const auto& id : sessions) {
        if (taken >= cap) break;
        const auto session = session_io::read_session(dir / id, true);
        const auto ann = annotation::annotate_session(session, id, config.clip_len_s, config.thresholds);
        const std::size_t want = std::min(per_session, cap - taken);
        for (std::size_t c : spread(ann.neck_clips.size(), want)) {
            if (pairs) {
                data.pairs.push_back(make_clip_pair(session, ann.head_clips.at(c), ann.neck_clips[c], ann.offset));
            } else {
                data.clips.push_back(to_training_clip(session, ann.neck_clips[c]));
            }
            ++taken;
        }
    }
    return data;
}

} // namespace gazebench::workspace
