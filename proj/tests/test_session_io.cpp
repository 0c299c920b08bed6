#include "gazebench/errors.hpp"
#include "gazebench/session_io.hpp"
#include "gazebench/synthworld.hpp"

#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace gazebench;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("gazebench_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("a written session reads back identical") {
    synth::SceneConfig c;
    c.duration_s = 3.0;
    c.seed = 12;
    c.frame_offset = -5;
    const auto rec = synth::generate_session(c);
    const auto dir = scratch_dir("session_rt");
    session_io::write_session(dir, rec);
    const auto back = session_io::read_session(dir);
    CHECK(back == rec);

    const auto meta_only = session_io::read_session(dir, false);
    CHECK(meta_only.head.frames.empty());
    CHECK(meta_only.head.gaze == rec.head.gaze);

    // writing again gives the same bytes
    const auto dir2 = scratch_dir("session_rt2");
    session_io::write_session(dir2, back);
    for (const char* f : {"meta.json", "poses.jsonl", "gaze.jsonl", "markers.jsonl", "targets3d.jsonl"}) {
        CHECK(slurp(dir / f) == slurp(dir2 / f));
    }
    CHECK(slurp(session_io::frames_path(dir, synth::View::Neck)) ==
          slurp(session_io::frames_path(dir2, synth::View::Neck)));
    fs::remove_all(dir);
    fs::remove_all(dir2);
}

TEST_CASE("missing or damaged session files raise FormatError") {
    synth::SceneConfig c;
    c.duration_s = 1.0;
    c.marker_window_s = 0.5;
    c.render = false;
    const auto dir = scratch_dir("session_bad");
    CHECK_THROWS_AS(session_io::read_session(dir), FormatError);

    session_io::write_session(dir, synth::generate_session(c));
    CHECK_NOTHROW(session_io::read_session(dir));
    {
        std::ofstream out(dir / "gaze.jsonl", std::ios::app);
        out << "{not json\n";
    }
    CHECK_THROWS_AS(session_io::read_session(dir), FormatError);
    fs::remove(dir / "gaze.jsonl");
    CHECK_THROWS_AS(session_io::read_session(dir), FormatError);
    fs::remove_all(dir);
}
