#include "gazebench/session_io.hpp"

#include "gazebench/config.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/tensor_io.hpp"

#include <fstream>
#include <functional>

namespace gazebench::session_io {
namespace {

using config::json;
using synth::View;

void write_lines(const std::filesystem::path& path, const std::vector<json>& rows) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    for (const auto& r : rows) out << r.dump() << '\n';
    if (!out) throw Error("write failed for " + path.string());
}

void read_lines(const std::filesystem::path& path, const std::function<void(const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw FormatError("missing " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

synth::StreamRecord& pick(synth::SessionRecord& s, const json& row) {
    return synth::view_from_string(row.at("view").get<std::string>()) == View::Head ? s.head : s.neck;
}

std::size_t frame_index(const json& row, const synth::StreamRecord& stream) {
    const long f = row.at("frame").get<long>();
    if (f < 0 || f >= static_cast<long>(stream.length())) throw FormatError("frame index out of range");
    return static_cast<std::size_t>(f);
}

json stream_meta(const synth::StreamRecord& s) {
    return {{"intrinsics",
             {{"fx", s.intrinsics.fx},
              {"fy", s.intrinsics.fy},
              {"cx", s.intrinsics.cx},
              {"cy", s.intrinsics.cy},
              {"width", s.intrinsics.width},
              {"height", s.intrinsics.height}}},
            {"first_real_frame", s.first_real_frame},
            {"length", s.length()},
            {"has_frames", !s.frames.empty()}};
}

void read_stream_meta(const json& j, View view, synth::StreamRecord& s) {
    s.view = view;
    const auto& k = j.at("intrinsics");
    s.intrinsics = {k.at("fx").get<double>(), k.at("fy").get<double>(), k.at("cx").get<double>(),
                    k.at("cy").get<double>(), k.at("width").get<int>(), k.at("height").get<int>()};
    s.first_real_frame = j.at("first_real_frame").get<int>();
    const auto n = j.at("length").get<std::size_t>();
    s.poses.assign(n, geometry::Pose::identity());
    s.gaze.assign(n, {});
    s.marker_ids.assign(n, -1);
}

} // namespace

std::filesystem::path frames_path(const std::filesystem::path& dir, View view) {
    return dir / ("frames_" + synth::to_string(view) + ".gzt");
}

void write_session(const std::filesystem::path& dir, const synth::SessionRecord& session) {
    std::filesystem::create_directories(dir);
    const auto& cfg = session.config;
    json meta = {
        {"config", config::to_json(cfg)},
        {"fps", cfg.fps},
        {"width", cfg.width},
        {"height", cfg.height},
        {"frame_offset", session.frame_offset},
        {"streams", {{"head", stream_meta(session.head)}, {"neck", stream_meta(session.neck)}}},
    };
    config::write_json_file(dir / "meta.json", meta);

    std::vector<json> poses, gaze, markers;
    for (const auto* stream : {&session.head, &session.neck}) {
        const std::string view = synth::to_string(stream->view);
        for (std::size_t i = 0; i < stream->length(); ++i) {
            const auto& p = stream->poses[i];
            json rot = json::array();
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) rot.push_back(p.rotation(r, c));
            }
            poses.push_back({{"frame", i},
                             {"view", view},
                             {"rotation", rot},
                             {"translation", {p.translation.x(), p.translation.y(), p.translation.z()}}});
            const auto& g = stream->gaze[i];
            gaze.push_back({{"frame", i},
                            {"view", view},
                            {"x", g.x},
                            {"y", g.y},
                            {"depth", g.depth},
                            {"confidence", g.confidence},
                            {"in_bounds", g.in_bounds}});
            if (stream->marker_ids[i] >= 0) {
                markers.push_back({{"frame", i}, {"view", view}, {"id", stream->marker_ids[i]}});
            }
        }
        if (!stream->frames.empty()) {
            const auto n = static_cast<std::uint32_t>(stream->length());
            tensor_io::write_file(frames_path(dir, stream->view),
                                  tensor_io::Blob::from_u8({n, static_cast<std::uint32_t>(cfg.height),
                                                            static_cast<std::uint32_t>(cfg.width), 1},
                                                           stream->frames));
        }
    }
    std::vector<json> targets;
    for (std::size_t i = 0; i < session.gaze_targets.size(); ++i) {
        const auto& t = session.gaze_targets[i];
        targets.push_back({{"frame", i}, {"point", {t.x(), t.y(), t.z()}}});
    }
    write_lines(dir / "poses.jsonl", poses);
    write_lines(dir / "gaze.jsonl", gaze);
    write_lines(dir / "markers.jsonl", markers);
    write_lines(dir / "targets3d.jsonl", targets);
}

synth::SessionRecord read_session(const std::filesystem::path& dir, bool load_frames) {
    synth::SessionRecord s;
    bool head_frames = false;
    bool neck_frames = false;
    if (!std::filesystem::is_regular_file(dir / "meta.json")) throw FormatError("missing " + (dir / "meta.json").string());
    try {
        const json meta = config::read_json_file(dir / "meta.json");
        s.config = config::scene_from_json(meta.at("config"));
        s.frame_offset = meta.at("frame_offset").get<int>();
        read_stream_meta(meta.at("streams").at("head"), View::Head, s.head);
        read_stream_meta(meta.at("streams").at("neck"), View::Neck, s.neck);
        head_frames = meta.at("streams").at("head").at("has_frames").get<bool>();
        neck_frames = meta.at("streams").at("neck").at("has_frames").get<bool>();
    } catch (const json::exception& e) {
        throw FormatError((dir / "meta.json").string() + ": " + e.what());
    } catch (const ConfigInvalid& e) {
        throw FormatError((dir / "meta.json").string() + ": " + e.what());
    }

    read_lines(dir / "poses.jsonl", [&](const json& row) {
        auto& stream = pick(s, row);
        auto& p = stream.poses[frame_index(row, stream)];
        const auto& rot = row.at("rotation");
        const auto& tr = row.at("translation");
        if (rot.size() != 9 || tr.size() != 3) throw FormatError("pose record has wrong arity");
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) p.rotation(r, c) = rot[static_cast<std::size_t>(r * 3 + c)].get<double>();
        }
        p.translation = {tr[0].get<double>(), tr[1].get<double>(), tr[2].get<double>()};
    });
    read_lines(dir / "gaze.jsonl", [&](const json& row) {
        auto& stream = pick(s, row);
        auto& g = stream.gaze[frame_index(row, stream)];
        g.x = row.at("x").get<double>();
        g.y = row.at("y").get<double>();
        g.depth = row.at("depth").get<double>();
        g.confidence = row.at("confidence").get<double>();
        g.in_bounds = row.at("in_bounds").get<bool>();
    });
    read_lines(dir / "markers.jsonl", [&](const json& row) {
        auto& stream = pick(s, row);
        stream.marker_ids[frame_index(row, stream)] = row.at("id").get<int>();
    });
    read_lines(dir / "targets3d.jsonl", [&](const json& row) {
        const auto& p = row.at("point");
        const auto f = row.at("frame").get<std::size_t>();
        if (f != s.gaze_targets.size()) throw FormatError("targets3d frames out of order");
        s.gaze_targets.emplace_back(p.at(0).get<double>(), p.at(1).get<double>(), p.at(2).get<double>());
    });

    if (load_frames) {
        for (auto* stream : {&s.head, &s.neck}) {
            const bool present = stream->view == View::Head ? head_frames : neck_frames;
            if (!present) continue;
            const auto blob = tensor_io::read_file(frames_path(dir, stream->view));
            const std::vector<std::uint32_t> want = {static_cast<std::uint32_t>(stream->length()),
                                                     static_cast<std::uint32_t>(s.config.height),
                                                     static_cast<std::uint32_t>(s.config.width), 1};
            if (blob.dims != want || blob.dtype != tensor_io::DType::U8) {
                throw FormatError(frames_path(dir, stream->view).string() + ": unexpected shape or dtype");
            }
            stream->frames = blob.payload;
        }
    }
    return s;
}

} // namespace gazebench::session_io
