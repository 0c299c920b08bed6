// gazebench: generate | annotate | train | eval | stats

#include "gazebench/checkpoint.hpp"
#include "gazebench/config.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/eval.hpp"
#include "gazebench/report.hpp"
#include "gazebench/session_io.hpp"
#include "gazebench/workspace.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace gazebench;

namespace {

struct Options {
    std::string config_path;
    std::string data;
    std::string out;
    std::string report;
    std::string variant;
    std::string split = "test";
    std::vector<std::string> ckpts;
    std::optional<std::uint64_t> seed;
    int sessions = 12;
    std::optional<double> duration_s;
    std::optional<int> epochs;
    std::optional<int> batch_size;
    std::optional<double> lr;
    std::optional<int> max_clips;
    bool write_targets = false;
};

config::RunConfig load_config(const Options& o) {
    config::RunConfig c = o.config_path.empty() ? config::RunConfig{} : config::load_run_config(o.config_path);
    if (o.duration_s) c.scene.duration_s = *o.duration_s;
    if (o.epochs) c.train.epochs = *o.epochs;
    if (o.batch_size) c.train.batch_size = *o.batch_size;
    if (o.lr) c.train.adamw.lr = *o.lr;
    if (o.max_clips) c.max_clips = *o.max_clips;
    if (!o.variant.empty()) c.train.variant = training::variant_from_string(o.variant);
    if (o.seed) c.train.seed = *o.seed;
    c.validate();
    return c;
}

fs::path sibling(const fs::path& ckpt, const std::string& suffix) {
    fs::path p = ckpt;
    p.replace_extension(suffix);
    return p;
}

int cmd_generate(const Options& o) {
    if (!o.seed) throw ConfigInvalid("--seed is required");
    const auto cfg = load_config(o);
    const auto m = workspace::generate(o.out, cfg.scene, *o.seed, o.sessions);
    const double minutes = cfg.scene.duration_s * static_cast<double>(m.sessions.size()) / 60.0;
    std::printf("generated %zu sessions (%.1f min) in %s\n", m.sessions.size(), minutes, o.out.c_str());
    return 0;
}

int cmd_annotate(const Options& o) {
    const auto cfg = load_config(o);
    const auto summary = workspace::annotate(o.data, cfg, o.write_targets);
    std::size_t clips = 0;
    for (const auto& s : summary.sessions) {
        std::printf("%s offset %+d frames, mapping error %.2g px, %zu clips per view\n", s.id.c_str(), s.offset,
                    s.max_mapping_error_px, s.neck_clips);
        clips += s.neck_clips;
    }
    std::printf("%zu clips per view; split %zu train / %zu test sessions\n", clips, summary.split.train.size(),
                summary.split.test.size());
    return 0;
}

int cmd_train(const Options& o) {
    if (!o.seed) throw ConfigInvalid("--seed is required");
    const auto cfg = load_config(o);
    const auto split = workspace::read_split(o.data);
    const auto data = workspace::load_data(o.data, split.train, cfg.train.variant, cfg.max_clips, cfg);
    std::printf("training %s on %zu clips from %zu sessions\n", training::to_string(cfg.train.variant).c_str(),
                data.clips.size() + data.pairs.size(), split.train.size());
    const auto result = training::train(data, cfg.train);
    for (const auto& e : result.history) {
        std::printf("epoch %3d  heatmap %.5f  inbound %.5f  align %.5f  total %.5f  (%.1f s)\n", e.epoch, e.heatmap,
                    e.inbound, e.align, e.total, e.wall_s);
    }

    checkpoint::Checkpoint ckpt;
    ckpt.config = config::to_json(cfg);
    if (result.head) {
        ckpt.models.push_back({"head", *result.head});
        ckpt.models.push_back({"neck", result.primary});
    } else {
        ckpt.models.push_back({"model", result.primary});
    }
    const fs::path out = o.out;
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    checkpoint::save(ckpt, out);
    report::write_text(sibling(out, ".history.csv"), report::history_csv(result.history));
    report::write_text(sibling(out, ".timing.csv"), report::timing_csv(result.history));
    report::write_text(sibling(out, ".loss.svg"),
                       report::loss_curve_svg(result.history, "training loss, " + training::to_string(cfg.train.variant)));
    std::printf("wrote %s\n", out.c_str());
    return 0;
}

int cmd_eval(const Options& o) {
    std::vector<eval::MetricsReport> reports;
    const auto split = workspace::read_split(o.data);
    const auto& sessions = split.get(o.split);
    for (const auto& path : o.ckpts) {
        if (!fs::is_regular_file(path)) throw Error("checkpoint " + path + " not found");
        const auto ckpt = checkpoint::load(path);
        config::RunConfig cfg;
        try {
            cfg = config::run_config_from_json(ckpt.config);
        } catch (const ConfigInvalid& e) {
            throw CorruptCheckpoint(std::string("config echo: ") + e.what());
        }
        if (!o.config_path.empty()) cfg.eval = config::load_run_config(o.config_path).eval;
        const auto variant = cfg.train.variant;
        const auto& model = ckpt.find(variant == training::Variant::Colearn ? "neck" : "model");
        const auto data = workspace::load_data(o.data, sessions, training::Variant::Base, 0, cfg);
        auto rep = eval::evaluate(model.state.params, data.clips, cfg.train, cfg.eval, training::to_string(variant),
                                  variant == training::Variant::Aux);
        std::printf("%s: adaptive F1 %.4f (P %.4f, R %.4f) at threshold %.1f over %lld frames", rep.variant.c_str(),
                    rep.heatmap.score.f1, rep.heatmap.score.precision, rep.heatmap.score.recall, rep.heatmap.threshold,
                    rep.frames_evaluated);
        if (rep.classifier) std::printf("; in-view F1 %.4f", rep.classifier->score.f1);
        std::printf("\n");
        reports.push_back(std::move(rep));
    }
    report::write_metrics(o.report, reports);
    std::printf("wrote %s\n", (fs::path(o.report) / "metrics.csv").c_str());
    return 0;
}

int cmd_stats(const Options& o) {
    const auto cfg = load_config(o);
    const auto manifest = workspace::read_manifest(o.data);
    std::vector<annotation::AnnotatedSession> sessions;
    for (const auto& entry : manifest.sessions) {
        const auto rec = session_io::read_session(fs::path(o.data) / entry.id, false);
        annotation::AnnotatedSession a;
        a.session_id = entry.id;
        a.head_labels = annotation::label_stream(rec.head, cfg.thresholds);
        a.neck_labels = annotation::label_stream(rec.neck, cfg.thresholds);
        sessions.push_back(std::move(a));
    }
    const auto stats = eval::dataset_stats(sessions);
    report::write_stats(o.report, stats);
    std::printf("neck out-of-bound rate: %.1f%%\n", 100.0 * stats.neck.oob_rate);
    std::printf("head out-of-bound rate: %.1f%%\n", 100.0 * stats.head.oob_rate);
    std::printf("neck mean gaze: (%.3f, %.3f)\n", stats.neck.mean_x, stats.neck.mean_y);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic egocentric gaze benchmark: generate, annotate, train, evaluate"};
    app.require_subcommand(1);
    Options o;

    auto* gen = app.add_subcommand("generate", "Write synthetic head/neck recording sessions");
    gen->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    gen->add_option("--out", o.out, "Output data directory")->required();
    gen->add_option("--seed", o.seed, "Seed of the first session");
    gen->add_option("--sessions", o.sessions, "Number of sessions")->check(CLI::PositiveNumber);
    gen->add_option("--duration", o.duration_s, "Session length in seconds");

    auto* ann = app.add_subcommand("annotate", "Synchronize, label and segment sessions");
    ann->add_option("--data", o.data, "Data directory")->required();
    ann->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    ann->add_flag("--write-targets", o.write_targets, "Also write heatmap target tensors");

    auto* tr = app.add_subcommand("train", "Train a model variant");
    tr->add_option("--data", o.data, "Data directory")->required();
    tr->add_option("--variant", o.variant, "base, aux or colearn")->required();
    tr->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    tr->add_option("--out", o.out, "Checkpoint path")->required();
    tr->add_option("--seed", o.seed, "Training seed");
    tr->add_option("--epochs", o.epochs, "Epochs");
    tr->add_option("--batch-size", o.batch_size, "Batch size");
    tr->add_option("--lr", o.lr, "Learning rate");
    tr->add_option("--max-clips", o.max_clips, "Training clips drawn from the train split");

    auto* ev = app.add_subcommand("eval", "Evaluate checkpoints on a split");
    ev->add_option("--data", o.data, "Data directory")->required();
    ev->add_option("--ckpt", o.ckpts, "Checkpoint path (repeatable)")->required();
    ev->add_option("--split", o.split, "train or test");
    ev->add_option("--config", o.config_path, "JSON run config whose eval section overrides the checkpoint's")
        ->check(CLI::ExistingFile);
    ev->add_option("--report", o.report, "Report directory")->required();

    auto* st = app.add_subcommand("stats", "Dataset statistics");
    st->add_option("--data", o.data, "Data directory")->required();
    st->add_option("--config", o.config_path, "JSON run config")->check(CLI::ExistingFile);
    st->add_option("--report", o.report, "Report directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) return cmd_generate(o);
        if (ann->parsed()) return cmd_annotate(o);
        if (tr->parsed()) return cmd_train(o);
        if (ev->parsed()) return cmd_eval(o);
        if (st->parsed()) return cmd_stats(o);
    } catch (const ConfigInvalid& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
