#pragma once

#include "gazebench/annotation.hpp"
#include "gazebench/eval.hpp"
#include "gazebench/synthworld.hpp"
#include "gazebench/training.hpp"

#include "json.hpp"

#include <filesystem>

namespace gazebench::config {

using nlohmann::json;

struct RunConfig {
    synth::SceneConfig scene;
    annotation::Thresholds thresholds;
    double clip_len_s = 5.0;
    double test_fraction = 1.0 / 3.0;  // share of sessions held out, by session
    training::TrainConfig train;
    int max_clips = 64;                // training clips drawn from the train split
    eval::EvalConfig eval;

    // Throws ConfigInvalid.
    void validate() const;
};

// Every section and key is optional on input; missing keys keep defaults and
// unknown keys are rejected. Output always lists every key.
json to_json(const synth::SceneConfig& c);
json to_json(const training::TrainConfig& c);
json to_json(const eval::EvalConfig& c);
json to_json(const RunConfig& c);

// All throw ConfigInvalid.
synth::SceneConfig scene_from_json(const json& j, synth::SceneConfig base = {});
training::TrainConfig train_from_json(const json& j, training::TrainConfig base = {});
eval::EvalConfig eval_from_json(const json& j, eval::EvalConfig base = {});
RunConfig run_config_from_json(const json& j);

RunConfig load_run_config(const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);
// Pretty-printed with a trailing newline.
void write_json_file(const std::filesystem::path& path, const json& j);

} // namespace gazebench::config
