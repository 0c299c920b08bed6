#include "gazebench/annotation.hpp"
#include "gazebench/errors.hpp"
#include "gazebench/eval.hpp"
#include "gazebench/rng.hpp"
#include "gazebench/synthworld.hpp"

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

using namespace gazebench;
using namespace gazebench::eval;
using annotation::GazeLabel;

namespace {

GazeSample at(double x, double y, GazeLabel label = GazeLabel::Fixation) {
    GazeSample s;
    s.x = x;
    s.y = y;
    s.label = label;
    return s;
}

} // namespace

TEST_CASE("eval frame selection keeps in-bounds fixations only") {
    const std::vector<GazeSample> sacc(4, at(0.5, 0.5, GazeLabel::Saccade));
    CHECK(select_eval_frames(sacc).empty());
    const std::vector<GazeSample> fix(4, at(0.5, 0.5));
    CHECK(select_eval_frames(fix).size() == 4);

    synth::SceneConfig c;
    c.duration_s = 20.0;
    c.render = false;
    const auto s = synth::generate_session(c);
    const auto labels = annotation::label_stream(s.neck);
    const auto brute = oracle::labels(s.neck, 0.05, 0.5);
    std::size_t want = 0;
    for (auto l : brute) want += l == GazeLabel::Fixation;
    CHECK(select_eval_frames(labels).size() == want);
}

TEST_CASE("ground-truth masks") {
    CHECK(gt_mask(at(0.5, 0.5), 64, 64, 0.0).count() == 1);
    CHECK(gt_mask(at(0.5, 0.5), 64, 64, 6.0).count() == 113);
    CHECK(oracle::lattice_disc(6) == 113);
    CHECK(gt_mask(at(0.0, 0.0), 64, 64, 6.0).count() < 113);
    const auto m = gt_mask(at(0.5, 0.5), 64, 64, 0.0);
    CHECK(m.at(32, 32) == 1);
    CHECK_THROWS_AS(gt_mask(at(0.5, 0.5), 0, 64, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(gt_mask(at(0.5, 0.5), 64, 64, -1.0), std::invalid_argument);
    EvalConfig cfg;
    CHECK(cfg.radius_for(3.0) == 6.0);
}

TEST_CASE("adaptive F1 on the 2x2 example") {
    Tensor pred({2, 2});
    pred[0] = 0.7;
    pred[1] = pred[2] = pred[3] = 0.1;
    Mask gt(2, 2);
    gt.at(0, 0) = 1;
    const std::vector<double> th{0.3, 0.9};
    const auto r = adaptive_f1(std::span<const Tensor>(&pred, 1), std::span<const Mask>(&gt, 1), th);
    CHECK(r.threshold == 0.3);  // both thresholds keep only the top-left pixel; tie goes low
    CHECK(r.score.f1 == 1.0);
    CHECK(r.sweep.tp[1] == 1);
    CHECK(r.sweep.fp[1] == 0);
    CHECK(r.sweep.fn[1] == 0);
}

TEST_CASE("a prediction equal to the mask scores F1 of one") {
    const auto m = gt_mask(at(0.3, 0.6), 16, 16, 3.0);
    Tensor pred({16, 16});
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = m.bits[i] / static_cast<double>(m.count());
    const std::vector<double> th{0.1, 0.5, 0.9};
    CHECK(adaptive_f1(std::span<const Tensor>(&pred, 1), std::span<const Mask>(&m, 1), th).score.f1 == 1.0);
}

TEST_CASE("adaptive F1 equals a nested-loop reference") {
    Rng rng(17);
    const EvalConfig cfg;
    for (int trial = 0; trial < 60; ++trial) {
        const int frames = static_cast<int>(rng.uniform_int(1, 4));
        const int h = static_cast<int>(rng.uniform_int(2, 8));
        const int w = static_cast<int>(rng.uniform_int(2, 8));
        const bool relative = trial % 2 == 0;
        std::vector<Tensor> preds;
        std::vector<Mask> masks;
        std::vector<std::vector<double>> bp;
        std::vector<std::vector<int>> bm;
        for (int f = 0; f < frames; ++f) {
            Tensor p({h, w});
            Mask m(h, w);
            std::vector<double> rp;
            std::vector<int> rm;
            for (int i = 0; i < h * w; ++i) {
                // coarse values make exact ties at thresholds likely
                p[static_cast<std::size_t>(i)] = static_cast<double>(rng.uniform_int(0, 10)) / 10.0;
                m.bits[static_cast<std::size_t>(i)] = rng.uniform() < 0.3;
                rp.push_back(p[static_cast<std::size_t>(i)]);
                rm.push_back(m.bits[static_cast<std::size_t>(i)]);
            }
            preds.push_back(p);
            masks.push_back(m);
            bp.push_back(rp);
            bm.push_back(rm);
        }
        const auto mode = relative ? ThresholdMode::Relative : ThresholdMode::Absolute;
        const auto got = adaptive_f1(preds, masks, cfg.thresholds, mode);
        const auto want = oracle::adaptive_f1(bp, bm, cfg.thresholds, relative);
        CHECK(got.sweep.tp == want.tp);
        CHECK(got.sweep.fp == want.fp);
        CHECK(got.sweep.fn == want.fn);
        CHECK(got.score.f1 == want.f1);
        CHECK(got.score.precision == want.precision);
        CHECK(got.score.recall == want.recall);
        CHECK(got.threshold == want.threshold);
        for (std::size_t k = 1; k < got.sweep.tp.size(); ++k) {
            CHECK(got.sweep.tp[k] <= got.sweep.tp[k - 1]);
            CHECK(got.sweep.fp[k] <= got.sweep.fp[k - 1]);
            CHECK(got.sweep.tp[k] + got.sweep.fn[k] == got.sweep.tp[0] + got.sweep.fn[0]);
        }
        if (got.score.precision + got.score.recall > 0) {
            const double p = got.score.precision, r = got.score.recall;
            CHECK(std::abs(got.score.f1 - 2 * p * r / (p + r)) < 1e-9);
        }
    }
}

TEST_CASE("adaptive F1 errors") {
    const std::vector<Tensor> none;
    const std::vector<Mask> no_masks;
    const std::vector<double> th{0.5};
    CHECK_THROWS_AS(adaptive_f1(none, no_masks, th), EmptyEvalSet);
    const std::vector<Tensor> one{Tensor({2, 2})};
    const std::vector<Mask> wrong{Mask(3, 2)};
    CHECK_THROWS_AS(adaptive_f1(one, wrong, th), ShapeMismatch);
    const std::vector<Mask> ok{Mask(2, 2)};
    const std::vector<double> bad{0.5, 0.4};
    CHECK_THROWS_AS(adaptive_f1(one, ok, bad), std::invalid_argument);
    const std::vector<double> out_of_range{0.0, 0.5};
    CHECK_THROWS_AS(adaptive_f1(one, ok, out_of_range), std::invalid_argument);
}

TEST_CASE("score from counts") {
    auto s = score_from_counts(0, 0, 0);
    CHECK(s.f1 == 0.0);
    CHECK(s.precision == 0.0);
    s = score_from_counts(3, 1, 2);
    CHECK(s.precision == 0.75);
    CHECK(s.recall == 0.6);
    CHECK(s.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
}

TEST_CASE("classifier metrics") {
    const std::vector<int> labels{1, 0, 1, 0};
    const std::vector<double> perfect{0.9, 0.1, 0.6, 0.4};
    CHECK(classifier_metrics(perfect, labels).score.f1 == 1.0);
    const std::vector<double> all_pos(4, 0.8);
    const auto m = classifier_metrics(all_pos, labels);
    CHECK(m.score.recall == 1.0);
    CHECK(m.score.precision == 0.5);
    // exactly at the threshold counts as positive
    const std::vector<double> edge{0.5, 0.5, 0.5, 0.5};
    CHECK(classifier_metrics(edge, labels).counts.tp == 2);

    Rng rng(4);
    std::vector<double> scores(200);
    std::vector<int> ys(200);
    long long tp = 0, fp = 0, fn = 0, tn = 0;
    for (std::size_t i = 0; i < 200; ++i) {
        scores[i] = rng.uniform();
        ys[i] = rng.uniform() < 0.6;
        const bool p = scores[i] >= 0.5;
        tp += p && ys[i];
        fp += p && !ys[i];
        fn += !p && ys[i];
        tn += !p && !ys[i];
    }
    const auto r = classifier_metrics(scores, ys);
    CHECK(r.counts.tp == tp);
    CHECK(r.counts.fp == fp);
    CHECK(r.counts.fn == fn);
    CHECK(r.counts.tn == tn);
}

TEST_CASE("pixel confusion") {
    Rng rng(6);
    std::vector<Mask> gts, inv, rnd;
    for (int f = 0; f < 3; ++f) {
        Mask g(5, 5), n(5, 5), r(5, 5);
        for (std::size_t i = 0; i < g.bits.size(); ++i) {
            g.bits[i] = rng.uniform() < 0.4;
            n.bits[i] = !g.bits[i];
            r.bits[i] = rng.uniform() < 0.5;
        }
        gts.push_back(g);
        inv.push_back(n);
        rnd.push_back(r);
    }
    const auto same = pixel_confusion(gts, gts);
    CHECK(same.rates[0][0] == 1.0);
    CHECK(same.rates[0][1] == 0.0);
    CHECK(same.rates[1][1] == 1.0);
    CHECK(same.rates[1][0] == 0.0);
    const auto anti = pixel_confusion(inv, gts);
    CHECK(anti.rates[0][1] == 1.0);
    CHECK(anti.rates[1][0] == 1.0);

    long long c[2][2] = {{0, 0}, {0, 0}};
    for (std::size_t f = 0; f < 3; ++f) {
        for (std::size_t i = 0; i < 25; ++i) c[gts[f].bits[i] ? 0 : 1][rnd[f].bits[i] ? 0 : 1]++;
    }
    const auto r = pixel_confusion(rnd, gts);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) CHECK(r.counts[i][j] == c[i][j]);
        CHECK(std::abs(r.rates[i][0] + r.rates[i][1] - 1.0) < 1e-6);
    }

    // no positive pixels at all: that row stays zero
    const std::vector<Mask> empty{Mask(2, 2)};
    const auto z = pixel_confusion(empty, empty);
    CHECK(z.rates[0][0] == 0.0);
    CHECK(z.rates[0][1] == 0.0);
    CHECK(z.rates[1][1] == 1.0);
}

TEST_CASE("view statistics") {
    std::vector<GazeSample> s(10, at(0.25, 0.75));
    auto v = view_stats(s);
    CHECK(v.oob_rate == 0.0);
    CHECK(v.mean_x == doctest::Approx(0.25));
    CHECK(v.mean_y == doctest::Approx(0.75));
    CHECK(v.histogram[12 * 16 + 4] == 10);

    for (int i = 0; i < 5; ++i) s[static_cast<std::size_t>(i)] = at(1.4, 0.5, GazeLabel::Truncated);
    CHECK(view_stats(s).oob_rate == 0.5);

    // untracked points are not valid and leave the rate alone
    s.push_back(at(0.5, 0.5, GazeLabel::Untracked));
    s.push_back(at(0.5, 0.5, GazeLabel::Untracked));
    v = view_stats(s);
    CHECK(v.oob_rate == 0.5);
    CHECK(v.untracked == 2);

    Rng rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = static_cast<int>(rng.uniform_int(1, 50));
        const int k = static_cast<int>(rng.uniform_int(0, n));
        std::vector<GazeSample> t;
        for (int i = 0; i < n; ++i) {
            t.push_back(i < k ? at(-0.2, 0.5, GazeLabel::Truncated)
                              : at(rng.uniform(0, 0.99), rng.uniform(0, 0.99), i % 3 ? GazeLabel::Fixation
                                                                                      : GazeLabel::Saccade));
        }
        CHECK(view_stats(t).oob_rate == static_cast<double>(k) / n);
    }
}

TEST_CASE("evaluate runs end to end on hand-built clips") {
    Rng rng(8);
    std::vector<training::TrainingClip> clips;
    for (int i = 0; i < 3; ++i) clips.push_back(fixture::clip(rng, annotation::View::Neck, 16, 16, 9));
    const auto cfg = fixture::small_config(training::Variant::Aux);
    const auto params = training::initial_params(cfg, annotation::View::Neck);
    const auto r = evaluate(params, clips, cfg, EvalConfig{}, "aux", true);
    CHECK(r.variant == "aux");
    CHECK(r.frames_evaluated + r.frames_skipped == 6);
    REQUIRE(r.classifier.has_value());
    const auto c = r.classifier->counts;
    CHECK(c.tp + c.fp + c.fn + c.tn == 6);
    CHECK(r.heatmap.sweep.thresholds.size() == 9);
    const auto again = evaluate(params, clips, cfg, EvalConfig{}, "aux", true);
    CHECK(again.heatmap.score.f1 == r.heatmap.score.f1);
    CHECK_FALSE(evaluate(params, clips, cfg, EvalConfig{}, "base", false).classifier.has_value());
}
