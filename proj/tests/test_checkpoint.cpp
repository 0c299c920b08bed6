#include "gazebench/checkpoint.hpp"
#include "gazebench/config.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/training.hpp"

#include "doctest.h"
#include "fixtures.hpp"

#include <filesystem>

using namespace gazebench;
namespace fs = std::filesystem;

namespace {

checkpoint::Checkpoint trained(training::Variant v) {
    const auto data = fixture::data(7, 2);
    const auto cfg = fixture::small_config(v);
    const auto r = training::train(data, cfg);
    checkpoint::Checkpoint ck;
    ck.config = config::to_json(cfg);
    if (r.head) {
        ck.models.push_back({"head", *r.head});
        ck.models.push_back({"neck", r.primary});
    } else {
        ck.models.push_back({"model", r.primary});
    }
    return ck;
}

} // namespace

TEST_CASE("checkpoint encode, decode, encode is byte-identical") {
    for (auto v : {training::Variant::Aux, training::Variant::Colearn}) {
        const auto ck = trained(v);
        const auto bytes = checkpoint::encode(ck);
        const auto back = checkpoint::decode(bytes);
        CHECK(back.config == ck.config);
        CHECK(back.models == ck.models);
        CHECK(checkpoint::encode(back) == bytes);
    }
}

TEST_CASE("checkpoint files round trip") {
    const auto ck = trained(training::Variant::Base);
    const fs::path dir = fs::temp_directory_path() / "gazebench_test_ckpt";
    fs::remove_all(dir);
    fs::create_directories(dir);
    checkpoint::save(ck, dir / "a.gzck");
    const auto back = checkpoint::load(dir / "a.gzck");
    checkpoint::save(back, dir / "b.gzck");
    CHECK(checkpoint::encode(checkpoint::load(dir / "b.gzck")) == checkpoint::encode(ck));
    CHECK(back.find("model").state == ck.models[0].state);
    CHECK_THROWS(back.find("neck"));
    CHECK_THROWS_AS(checkpoint::load(dir / "missing.gzck"), Error);
    fs::remove_all(dir);
}

TEST_CASE("damaged checkpoints are rejected") {
    const auto bytes = checkpoint::encode(trained(training::Variant::Base));
    for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
        const std::vector<std::uint8_t> part(bytes.begin(), bytes.begin() + static_cast<long>(cut));
        CHECK_THROWS_AS(checkpoint::decode(part), CorruptCheckpoint);
    }
    auto wrong_magic = bytes;
    wrong_magic[0] = 'X';
    CHECK_THROWS_AS(checkpoint::decode(wrong_magic), CorruptCheckpoint);
    auto wrong_version = bytes;
    wrong_version[4] = 2;
    CHECK_THROWS_AS(checkpoint::decode(wrong_version), CorruptCheckpoint);
    auto trailing = bytes;
    trailing.push_back(0);
    CHECK_THROWS_AS(checkpoint::decode(trailing), CorruptCheckpoint);
}

TEST_CASE("resuming from a checkpoint matches an uninterrupted step") {
    Rng rng(5);
    const auto clip = fixture::clip(rng, annotation::View::Neck);
    auto cfg = fixture::small_config(training::Variant::Aux);
    const std::vector<int> idx{0, 4};
    const std::vector<model::Example> batch{
        training::make_example(clip, idx, annotation::CropMode::Left, cfg)};
    const auto w = cfg.effective_weights();

    training::ModelState state{training::initial_params(cfg, annotation::View::Neck), {}};
    training::train_step(state, batch, w, cfg.adamw);

    checkpoint::Checkpoint ck;
    ck.config = config::to_json(cfg);
    ck.models.push_back({"model", state});
    auto resumed = checkpoint::decode(checkpoint::encode(ck)).models[0].state;

    training::train_step(state, batch, w, cfg.adamw);
    training::train_step(resumed, batch, w, cfg.adamw);
    CHECK(resumed == state);
}
