#include "gazebench/report.hpp"

#include "gazebench/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace gazebench::report {
namespace {

std::string fixed(double v, int digits = 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out += c;
        }
    }
    return out;
}

std::string svg_open(int w, int h) {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
           std::to_string(w) + "\" height=\"" + std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) +
           " " + std::to_string(h) + "\">\n<rect x=\"0\" y=\"0\" width=\"" + std::to_string(w) + "\" height=\"" +
           std::to_string(h) + "\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, int size = 12, const char* anchor = "middle") {
    return "<text x=\"" + fixed(x) + "\" y=\"" + fixed(y) + "\" font-family=\"sans-serif\" font-size=\"" +
           std::to_string(size) + "\" text-anchor=\"" + anchor + "\">" + escape(s) + "</text>\n";
}

// White to dark blue.
std::string shade(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int r = static_cast<int>(255.0 - t * (255.0 - 8.0));
    const int g = static_cast<int>(255.0 - t * (255.0 - 48.0));
    const int b = static_cast<int>(255.0 - t * (255.0 - 107.0));
    char buf[16];
    std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
    return buf;
}

void check_field(const std::string& s) {
    if (s.find_first_of(",\"\n\r") != std::string::npos) {
        throw FormatError("CSV field may not contain commas, quotes or newlines: " + s);
    }
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw FormatError("bad number '" + s + "'");
    return v;
}

} // namespace

std::vector<MetricRow> metric_rows(const eval::MetricsReport& r) {
    std::vector<MetricRow> rows;
    const double tau = r.heatmap.threshold;
    const auto& v = r.variant;
    rows.push_back({"adaptive_f1", v, r.heatmap.score.f1, tau});
    rows.push_back({"precision", v, r.heatmap.score.precision, tau});
    rows.push_back({"recall", v, r.heatmap.score.recall, tau});
    const auto& sw = r.heatmap.sweep;
    for (std::size_t k = 0; k < sw.thresholds.size(); ++k) {
        rows.push_back({"f1_sweep", v, eval::score_from_counts(sw.tp[k], sw.fp[k], sw.fn[k]).f1, sw.thresholds[k]});
    }
    rows.push_back({"confusion_gt_pos_pred_pos", v, r.confusion.rates[0][0], tau});
    rows.push_back({"confusion_gt_pos_pred_neg", v, r.confusion.rates[0][1], tau});
    rows.push_back({"confusion_gt_neg_pred_pos", v, r.confusion.rates[1][0], tau});
    rows.push_back({"confusion_gt_neg_pred_neg", v, r.confusion.rates[1][1], tau});
    if (r.classifier) {
        const auto& c = *r.classifier;
        rows.push_back({"classifier_f1", v, c.score.f1, c.threshold});
        rows.push_back({"classifier_precision", v, c.score.precision, c.threshold});
        rows.push_back({"classifier_recall", v, c.score.recall, c.threshold});
    }
    rows.push_back({"frames_evaluated", v, static_cast<double>(r.frames_evaluated), std::nullopt});
    rows.push_back({"frames_skipped", v, static_cast<double>(r.frames_skipped), std::nullopt});
    return rows;
}

std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_csv(std::span<const MetricRow> rows) {
    std::string out = std::string(kMetricsHeader) + "\n";
    for (const auto& r : rows) {
        check_field(r.metric);
        check_field(r.variant);
        out += r.metric + "," + r.variant + "," + format_number(r.value) + "," +
               (r.threshold ? format_number(*r.threshold) : std::string()) + "\n";
    }
    return out;
}

std::vector<MetricRow> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader) throw FormatError("missing metrics header");
    std::vector<MetricRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto comma = line.find(',', start);
            fields.push_back(line.substr(start, comma - start));
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (fields.size() != 4) throw FormatError("metrics row needs 4 fields: " + line);
        MetricRow r{fields[0], fields[1], parse_double(fields[2]), std::nullopt};
        if (!fields[3].empty()) r.threshold = parse_double(fields[3]);
        rows.push_back(std::move(r));
    }
    return rows;
}

std::string confusion_svg(const eval::Confusion& c, const std::string& title) {
    const int cell = 110;
    const int x0 = 130;
    const int y0 = 60;
    std::string s = svg_open(x0 + 2 * cell + 30, y0 + 2 * cell + 60);
    s += text(x0 + cell, 24, title, 14);
    s += text(x0 + cell, y0 - 10, "predicted", 12);
    const char* names[2] = {"gaze", "background"};
    for (int r = 0; r < 2; ++r) {
        s += text(x0 - 8, y0 + r * cell + cell / 2.0 + 4, names[r], 12, "end");
        for (int col = 0; col < 2; ++col) {
            const double rate = c.rates[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)];
            s += "<rect x=\"" + std::to_string(x0 + col * cell) + "\" y=\"" + std::to_string(y0 + r * cell) +
                 "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
                 shade(rate) + "\" stroke=\"black\"/>\n";
            s += text(x0 + col * cell + cell / 2.0, y0 + r * cell + cell / 2.0 + 4, fixed(rate, 3), 14);
        }
    }
    for (int col = 0; col < 2; ++col) {
        s += text(x0 + col * cell + cell / 2.0, y0 + 2 * cell + 18, names[col], 12);
    }
    s += text(x0 + cell, y0 + 2 * cell + 40, "rows: ground truth", 11);
    s += "</svg>\n";
    return s;
}

std::string histogram_svg(const eval::ViewStats& stats, const std::string& title) {
    const int cell = 16;
    const int n = eval::kHistogramBins;
    const int x0 = 20;
    const int y0 = 40;
    std::string s = svg_open(x0 * 2 + n * cell, y0 + n * cell + 40);
    s += text(x0 + n * cell / 2.0, 24, title, 14);
    const long long peak = std::max<long long>(1, *std::max_element(stats.histogram.begin(), stats.histogram.end()));
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const double t = static_cast<double>(stats.histogram[static_cast<std::size_t>(y * n + x)]) /
                             static_cast<double>(peak);
            s += "<rect x=\"" + std::to_string(x0 + x * cell) + "\" y=\"" + std::to_string(y0 + y * cell) +
                 "\" width=\"" + std::to_string(cell) + "\" height=\"" + std::to_string(cell) + "\" fill=\"" +
                 shade(t) + "\"/>\n";
        }
    }
    s += "<rect x=\"" + std::to_string(x0) + "\" y=\"" + std::to_string(y0) + "\" width=\"" +
         std::to_string(n * cell) + "\" height=\"" + std::to_string(n * cell) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    s += "<circle cx=\"" + fixed(x0 + stats.mean_x * n * cell) + "\" cy=\"" + fixed(y0 + stats.mean_y * n * cell) +
         "\" r=\"4\" fill=\"red\"/>\n";
    s += text(x0 + n * cell / 2.0, y0 + n * cell + 24,
              "out of bound " + fixed(100.0 * stats.oob_rate, 1) + "%, mean (" + fixed(stats.mean_x, 3) + ", " +
                  fixed(stats.mean_y, 3) + ")",
              12);
    s += "</svg>\n";
    return s;
}

std::string loss_curve_svg(std::span<const training::EpochStats> history, const std::string& title) {
    const int w = 480;
    const int h = 300;
    const int left = 50;
    const int right = 110;
    const int top = 40;
    const int bottom = 40;
    std::string s = svg_open(w, h);
    s += text(w / 2.0, 24, title, 14);
    s += "<rect x=\"" + std::to_string(left) + "\" y=\"" + std::to_string(top) + "\" width=\"" +
         std::to_string(w - left - right) + "\" height=\"" + std::to_string(h - top - bottom) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
    double peak = 0.0;
    for (const auto& e : history) peak = std::max({peak, e.heatmap, e.inbound, e.align, e.total});
    if (peak <= 0.0) peak = 1.0;
    const double pw = w - left - right;
    const double ph = h - top - bottom;
    struct Series {
        const char* name;
        const char* color;
        double training::EpochStats::*field;
    };
    const Series series[] = {{"heatmap", "#1f77b4", &training::EpochStats::heatmap},
                             {"inbound", "#ff7f0e", &training::EpochStats::inbound},
                             {"align", "#2ca02c", &training::EpochStats::align},
                             {"total", "#000000", &training::EpochStats::total}};
    int legend = 0;
    for (const auto& ser : series) {
        std::string pts;
        for (std::size_t i = 0; i < history.size(); ++i) {
            const double x = left + (history.size() > 1 ? pw * static_cast<double>(i) / (history.size() - 1) : pw / 2);
            const double y = top + ph * (1.0 - history[i].*ser.field / peak);
            if (!pts.empty()) pts += ' ';
            pts += fixed(x) + "," + fixed(y);
        }
        if (!pts.empty()) {
            s += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1.5\"/>\n";
        }
        s += "<line x1=\"" + std::to_string(w - right + 10) + "\" y1=\"" + std::to_string(top + 10 + legend * 18) +
             "\" x2=\"" + std::to_string(w - right + 30) + "\" y2=\"" + std::to_string(top + 10 + legend * 18) +
             "\" stroke=\"" + ser.color + "\" stroke-width=\"2\"/>\n";
        s += text(w - right + 36, top + 14 + legend * 18, ser.name, 11, "start");
        ++legend;
    }
    s += text(left, h - 14, "epoch 1", 11, "start");
    s += text(w - right, h - 14, "epoch " + std::to_string(history.size()), 11, "end");
    s += text(left - 4, top + 10, fixed(peak, 3), 10, "end");
    s += text(left - 4, h - bottom, "0", 10, "end");
    s += "</svg>\n";
    return s;
}

nlohmann::json stats_json(const eval::DatasetStats& stats) {
    auto view = [](const eval::ViewStats& v) {
        nlohmann::json hist = nlohmann::json::array();
        for (int y = 0; y < eval::kHistogramBins; ++y) {
            nlohmann::json row = nlohmann::json::array();
            for (int x = 0; x < eval::kHistogramBins; ++x) {
                row.push_back(v.histogram[static_cast<std::size_t>(y * eval::kHistogramBins + x)]);
            }
            hist.push_back(row);
        }
        return nlohmann::json{{"fixation", v.fixation},   {"saccade", v.saccade},
                              {"truncated", v.truncated}, {"untracked", v.untracked},
                              {"valid", v.valid()},       {"out_of_bound_rate", v.oob_rate},
                              {"mean_x", v.mean_x},       {"mean_y", v.mean_y},
                              {"histogram", hist}};
    };
    return {{"head", view(stats.head)}, {"neck", view(stats.neck)}};
}

std::string history_csv(std::span<const training::EpochStats> history) {
    std::string out = "epoch,heatmap,inbound,align,total\n";
    for (const auto& e : history) {
        out += std::to_string(e.epoch) + "," + format_number(e.heatmap) + "," + format_number(e.inbound) + "," +
               format_number(e.align) + "," + format_number(e.total) + "\n";
    }
    return out;
}

std::string timing_csv(std::span<const training::EpochStats> history) {
    std::string out = "epoch,wall_s\n";
    for (const auto& e : history) out += std::to_string(e.epoch) + "," + fixed(e.wall_s, 3) + "\n";
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_metrics(const std::filesystem::path& dir, std::span<const eval::MetricsReport> reports) {
    std::vector<MetricRow> rows;
    for (const auto& r : reports) {
        const auto more = metric_rows(r);
        rows.insert(rows.end(), more.begin(), more.end());
    }
    write_text(dir / "metrics.csv", format_csv(rows));
    for (const auto& r : reports) {
        write_text(dir / "figures" / ("confusion_" + r.variant + ".svg"),
                   confusion_svg(r.confusion, "pixel confusion, " + r.variant));
    }
}

void write_stats(const std::filesystem::path& dir, const eval::DatasetStats& stats) {
    write_text(dir / "stats.json", stats_json(stats).dump(2) + "\n");
    write_text(dir / "figures" / "gaze_hist_head.svg", histogram_svg(stats.head, "gaze distribution, head view"));
    write_text(dir / "figures" / "gaze_hist_neck.svg", histogram_svg(stats.neck, "gaze distribution, neck view"));
}

} // namespace gazebench::report
