#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <string>

#include "flowplan/bench.hpp"
#include "io_util.hpp"

namespace flowplan {

namespace {

constexpr std::array<const char*, 6> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

struct Series {
    std::string label;
    std::vector<double> x, mean, ci;
};

struct Chart {
    double width = 640, height = 420;
    double left = 70, right = 20, top = 40, bottom = 50;
    double x0 = 0, x1 = 1, y0 = 0, y1 = 1;

    double px(double x) const { return left + (x - x0) / (x1 - x0) * (width - left - right); }
    double py(double y) const { return height - bottom - (y - y0) / (y1 - y0) * (height - top - bottom); }
};

std::string line_chart(const std::string& title, const std::string& ylabel, const std::vector<Series>& series) {
    Chart c;
    bool any = false;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            if (!any) {
                xmin = xmax = s.x[i];
                ymin = s.mean[i] - s.ci[i];
                ymax = s.mean[i] + s.ci[i];
                any = true;
            }
            xmin = std::min(xmin, s.x[i]);
            xmax = std::max(xmax, s.x[i]);
            ymin = std::min(ymin, s.mean[i] - s.ci[i]);
            ymax = std::max(ymax, s.mean[i] + s.ci[i]);
        }
    if (xmax <= xmin) xmax = xmin + 1;
    if (ymax <= ymin) {
        ymin -= 0.5;
        ymax += 0.5;
    }
    const double pad = 0.05 * (ymax - ymin);
    c.x0 = xmin, c.x1 = xmax, c.y0 = ymin - pad, c.y1 = ymax + pad;

    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(c.width) + "\" height=\"" +
                      fmt(c.height) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg += "<text x=\"" + fmt(c.width / 2) + "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + title + "</text>\n";
    svg += "<line x1=\"" + fmt(c.left) + "\" y1=\"" + fmt(c.height - c.bottom) + "\" x2=\"" + fmt(c.width - c.right) +
           "\" y2=\"" + fmt(c.height - c.bottom) + "\" stroke=\"black\"/>\n";
    svg += "<line x1=\"" + fmt(c.left) + "\" y1=\"" + fmt(c.top) + "\" x2=\"" + fmt(c.left) + "\" y2=\"" +
           fmt(c.height - c.bottom) + "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = c.x0 + (c.x1 - c.x0) * k / 5.0, yv = c.y0 + (c.y1 - c.y0) * k / 5.0;
        svg += "<text x=\"" + fmt(c.px(xv)) + "\" y=\"" + fmt(c.height - c.bottom + 18) +
               "\" text-anchor=\"middle\">" + tick_label(xv) + "</text>\n";
        svg += "<text x=\"" + fmt(c.left - 6) + "\" y=\"" + fmt(c.py(yv) + 4) + "\" text-anchor=\"end\">" +
               tick_label(yv) + "</text>\n";
        svg += "<line x1=\"" + fmt(c.left) + "\" y1=\"" + fmt(c.py(yv)) + "\" x2=\"" + fmt(c.width - c.right) +
               "\" y2=\"" + fmt(c.py(yv)) + "\" stroke=\"#eeeeee\"/>\n";
    }
    svg += "<text x=\"" + fmt(c.width / 2) + "\" y=\"" + fmt(c.height - 10) + "\" text-anchor=\"middle\">nodes</text>\n";
    svg += "<text x=\"16\" y=\"" + fmt(c.height / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " +
           fmt(c.height / 2) + ")\">" + ylabel + "</text>\n";

    for (std::size_t s = 0; s < series.size(); ++s) {
        const auto& sr = series[s];
        const char* color = kPalette[s % kPalette.size()];
        if (sr.x.empty()) continue;
        std::string band, line;
        for (std::size_t i = 0; i < sr.x.size(); ++i)
            band += fmt(c.px(sr.x[i])) + "," + fmt(c.py(sr.mean[i] + sr.ci[i])) + " ";
        for (std::size_t i = sr.x.size(); i-- > 0;)
            band += fmt(c.px(sr.x[i])) + "," + fmt(c.py(sr.mean[i] - sr.ci[i])) + " ";
        for (std::size_t i = 0; i < sr.x.size(); ++i)
            line += fmt(c.px(sr.x[i])) + "," + fmt(c.py(sr.mean[i])) + " ";
        band.pop_back();
        line.pop_back();
        svg += "<polygon points=\"" + band + "\" fill=\"" + color + "\" fill-opacity=\"0.2\" stroke=\"none\"/>\n";
        svg += "<polyline points=\"" + line + "\" fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\"/>\n";
        const double ly = c.top + 8 + 16.0 * static_cast<double>(s);
        svg += "<line x1=\"" + fmt(c.width - c.right - 150) + "\" y1=\"" + fmt(ly) + "\" x2=\"" +
               fmt(c.width - c.right - 130) + "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color +
               "\" stroke-width=\"2\"/>\n";
        svg += "<text x=\"" + fmt(c.width - c.right - 125) + "\" y=\"" + fmt(ly + 4) + "\">" + sr.label + "</text>\n";
    }
    svg += "</svg>\n";
    return svg;
}

std::string circle(double cx, double cy, double r, const std::string& style) {
    return "<circle cx=\"" + fmt(cx) + "\" cy=\"" + fmt(cy) + "\" r=\"" + fmt(r) + "\" " + style + "/>\n";
}

}  // namespace

void emit_plots(const ExperimentResult& result, const std::filesystem::path& dir) {
    struct Metric {
        const char* file;
        const char* title;
        double AggregateRow::*mean;
        double AggregateRow::*ci;
    };
    const std::array<Metric, 4> metrics = {{
        {"cost.svg", "Cost", &AggregateRow::cost_mean, &AggregateRow::cost_ci95},
        {"invalid_connections.svg", "Invalid connections", &AggregateRow::invconn_mean, &AggregateRow::invconn_ci95},
        {"invalid_obstacles.svg", "Invalid obstacles", &AggregateRow::invobs_mean, &AggregateRow::invobs_ci95},
        {"time.svg", "Time (s)", &AggregateRow::time_mean, &AggregateRow::time_ci95},
    }};
    for (const auto& m : metrics) {
        std::vector<Series> series;
        for (const auto& row : result.aggregate) {
            const std::string label = std::string(to_string(row.planner)) + " " + std::string(to_string(row.sampler));
            if (series.empty() || series.back().label != label) series.push_back({label, {}, {}, {}});
            const double mu = row.*m.mean, ci = row.*m.ci;
            if (!std::isfinite(mu) || !std::isfinite(ci)) continue;
            series.back().x.push_back(static_cast<double>(row.nodes));
            series.back().mean.push_back(mu);
            series.back().ci.push_back(ci);
        }
        detail::write_file(dir / m.file, line_chart(m.title, m.title, series));
    }
    detail::write_file(dir / "plot_data.csv", aggregate_csv(result.aggregate));
}

void emit_conditioning_gallery(const std::vector<GalleryPanel>& panels, const Environment& env, const Config& q_init,
                               const Config& q_target, const std::filesystem::path& dir) {
    constexpr double kPanel = 240, kPad = 20, kTitle = 24;
    const double width = kPad + static_cast<double>(panels.size()) * (kPanel + kPad);
    const double height = kTitle + kPanel + 2 * kPad;
    std::string svg = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(width) + "\" height=\"" +
                      fmt(height) + "\" font-family=\"sans-serif\" font-size=\"13\">\n";
    svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    for (std::size_t k = 0; k < panels.size(); ++k) {
        const double ox = kPad + static_cast<double>(k) * (kPanel + kPad), oy = kPad + kTitle;
        const auto X = [&](double x) { return ox + x * kPanel; };
        const auto Y = [&](double y) { return oy + (1.0 - y) * kPanel; };
        svg += "<text x=\"" + fmt(ox + kPanel / 2) + "\" y=\"" + fmt(kPad + 12) + "\" text-anchor=\"middle\">" +
               panels[k].name + "</text>\n";
        svg += "<rect x=\"" + fmt(ox) + "\" y=\"" + fmt(oy) + "\" width=\"" + fmt(kPanel) + "\" height=\"" +
               fmt(kPanel) + "\" fill=\"none\" stroke=\"black\"/>\n";
        for (const auto& o : env.obstacles())
            svg += circle(X(o.center.x), Y(o.center.y), o.radius * kPanel, "fill=\"#999999\"");

        const auto draw = [&](const Config& q, const std::string& color, double opacity, double width_px) {
            if (env.robot() == RobotKind::Point2) {
                svg += circle(X(q[0]), Y(q[1]), width_px + 1.0,
                              "fill=\"" + color + "\" fill-opacity=\"" + fmt(opacity) + "\"");
                return;
            }
            const auto links = forward_kinematics(q);
            for (std::size_t arm = 0; arm < links.size(); arm += 2) {
                std::string pts = fmt(X(links[arm].a.x)) + "," + fmt(Y(links[arm].a.y));
                for (std::size_t l = arm; l < std::min(arm + 2, links.size()); ++l)
                    pts += " " + fmt(X(links[l].b.x)) + "," + fmt(Y(links[l].b.y));
                svg += "<polyline points=\"" + pts + "\" fill=\"none\" stroke=\"" + color + "\" stroke-opacity=\"" +
                       fmt(opacity) + "\" stroke-width=\"" + fmt(width_px) + "\"/>\n";
            }
        };
        for (const auto& q : panels[k].configs) draw(q, "#1f77b4", 0.35, 1.0);
        const bool show_init = panels[k].name == "full" || panels[k].name == "init_only";
        const bool show_target = panels[k].name == "full" || panels[k].name == "target_only";
        if (show_init) draw(q_init, "#2ca02c", 1.0, 2.5);
        if (show_target) draw(q_target, "#d62728", 1.0, 2.5);

        std::string csv;
        for (const auto& q : panels[k].configs) {
            for (std::size_t j = 0; j < q.size(); ++j) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.10g", q[j]);
                csv += (j ? "," : "") + std::string(buf);
            }
            csv += "\n";
        }
        std::string header;
        for (std::size_t j = 0; j < q_init.size(); ++j) header += (j ? ",q" : "q") + std::to_string(j);
        detail::write_file(dir / ("gallery_" + panels[k].name + ".csv"), header + "\n" + csv);
    }
    svg += "</svg>\n";
    detail::write_file(dir / "gallery.svg", svg);
}

}  // namespace flowplan
