#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "softtopk/bench.hpp"

namespace softtopk {

namespace {

constexpr double kWidth = 1000;
constexpr double kHeight = 600;
constexpr double kLeft = 75;
constexpr double kRight = 745;
constexpr double kTop = 50;
constexpr double kBottom = 535;

const char* const kPalette[10] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
const char* const kDashes[3] = {"", "6 3", "2 2"};

std::string xml_escape(const std::string& s) {
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

std::string fmt2(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return b;
}

std::string fmtg(double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%g", v);
    return b;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct Series {
    std::string label;
    std::vector<std::pair<double, double>> pts;  // sorted by x
};

void write_chart(const std::string& path, const std::string& title, const std::string& x_label,
                 const std::string& y_label, bool log_y, const std::vector<Series>& series) {
    double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
    std::set<double> xticks_all;
    for (const Series& s : series) {
        for (auto [x, y] : s.pts) {
            xmin = std::min(xmin, x);
            xmax = std::max(xmax, x);
            ymin = std::min(ymin, y);
            ymax = std::max(ymax, y);
            xticks_all.insert(x);
        }
    }
    if (!(xmin < xmax)) xmax = xmin * 2;
    if (log_y) {
        double lo = std::floor(std::log10(ymin));
        double hi = std::ceil(std::log10(ymax));
        if (hi <= lo) hi = lo + 1;
        ymin = std::pow(10.0, lo);
        ymax = std::pow(10.0, hi);
    } else {
        double pad = (ymax - ymin) * 0.05;
        if (pad <= 0) pad = 0.05;
        ymin -= pad;
        ymax += pad;
    }

    const double lxmin = std::log(xmin), lxmax = std::log(xmax);
    auto px = [&](double x) { return kLeft + (std::log(x) - lxmin) / (lxmax - lxmin) * (kRight - kLeft); };
    auto py = [&](double y) {
        const double t = log_y ? (std::log(y) - std::log(ymin)) / (std::log(ymax) - std::log(ymin))
                               : (y - ymin) / (ymax - ymin);
        return kBottom - t * (kBottom - kTop);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
        << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
        << "\" fill=\"#ffffff\"/>\n"
        << "<text x=\"" << fmt2((kLeft + kRight) / 2) << "\" y=\"28\" text-anchor=\"middle\" "
        << "font-family=\"sans-serif\" font-size=\"16\">" << xml_escape(title) << "</text>\n";

    // x ticks: the distinct data abscissae, thinned if crowded
    std::vector<double> xticks(xticks_all.begin(), xticks_all.end());
    const std::size_t xstride = xticks.size() > 12 ? (xticks.size() + 11) / 12 : 1;
    for (std::size_t i = 0; i < xticks.size(); i += xstride) {
        const double x = px(xticks[i]);
        svg << "<line x1=\"" << fmt2(x) << "\" y1=\"" << fmt2(kTop) << "\" x2=\"" << fmt2(x)
            << "\" y2=\"" << fmt2(kBottom) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt2(x) << "\" y=\"" << fmt2(kBottom + 18)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
            << fmtg(xticks[i]) << "</text>\n";
    }

    std::vector<double> yticks;
    if (log_y) {
        const int lo = static_cast<int>(std::llround(std::log10(ymin)));
        const int hi = static_cast<int>(std::llround(std::log10(ymax)));
        const int stride = (hi - lo) > 9 ? (hi - lo + 8) / 9 : 1;
        for (int e = lo; e <= hi; e += stride) yticks.push_back(std::pow(10.0, e));
    } else {
        const double raw = (ymax - ymin) / 5.0;
        const double mag = std::pow(10.0, std::floor(std::log10(raw)));
        const double norm = raw / mag;
        const double step = mag * (norm < 1.5 ? 1.0 : norm < 3.5 ? 2.0 : norm < 7.5 ? 5.0 : 10.0);
        for (double v = std::ceil(ymin / step) * step; v <= ymax + step * 1e-9; v += step)
            yticks.push_back(v);
    }
    for (double v : yticks) {
        const double y = py(v);
        svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(y) << "\" x2=\"" << fmt2(kRight)
            << "\" y2=\"" << fmt2(y) << "\" stroke=\"#e0e0e0\" stroke-width=\"1\"/>\n"
            << "<text x=\"" << fmt2(kLeft - 6) << "\" y=\"" << fmt2(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmtg(v)
            << "</text>\n";
    }

    svg << "<rect x=\"" << fmt2(kLeft) << "\" y=\"" << fmt2(kTop) << "\" width=\""
        << fmt2(kRight - kLeft) << "\" height=\"" << fmt2(kBottom - kTop)
        << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n"
        << "<text x=\"" << fmt2((kLeft + kRight) / 2) << "\" y=\"" << fmt2(kHeight - 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(x_label) << "</text>\n"
        << "<text transform=\"translate(22 " << fmt2((kTop + kBottom) / 2)
        << ") rotate(-90)\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
        << xml_escape(y_label) << "</text>\n";

    for (std::size_t i = 0; i < series.size(); ++i) {
        const char* color = kPalette[i % 10];
        const char* dash = kDashes[(i / 10) % 3];
        svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
        if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
        svg << " points=\"";
        for (auto [x, y] : series[i].pts) svg << fmt2(px(x)) << "," << fmt2(py(y)) << " ";
        svg << "\"/>\n";
        for (auto [x, y] : series[i].pts)
            svg << "<circle cx=\"" << fmt2(px(x)) << "\" cy=\"" << fmt2(py(y))
                << "\" r=\"2.4\" fill=\"" << color << "\"/>\n";
    }

    const std::size_t rows_per_col = static_cast<std::size_t>((kBottom - kTop) / 16);
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double lx = kRight + 10 + static_cast<double>(i / rows_per_col) * 120;
        const double ly = kTop + 8 + static_cast<double>(i % rows_per_col) * 16;
        const char* color = kPalette[i % 10];
        const char* dash = kDashes[(i / 10) % 3];
        svg << "<line x1=\"" << fmt2(lx) << "\" y1=\"" << fmt2(ly) << "\" x2=\"" << fmt2(lx + 14)
            << "\" y2=\"" << fmt2(ly) << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
        if (dash[0] != '\0') svg << " stroke-dasharray=\"" << dash << "\"";
        svg << "/>\n<text x=\"" << fmt2(lx + 18) << "\" y=\"" << fmt2(ly + 3.5)
            << "\" font-family=\"sans-serif\" font-size=\"10\">" << xml_escape(series[i].label)
            << "</text>\n";
    }
    svg << "</svg>\n";

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << svg.str();
    f.flush();
    if (!f) throw IoError("write to '" + path + "' failed");
}

}  // namespace

void emit_charts(const std::vector<BenchRecord>& records, const std::string& path_prefix) {
    std::set<std::size_t> distinct_n;
    for (const BenchRecord& r : records) distinct_n.insert(r.n);
    if (distinct_n.size() < 2)
        throw SizeError("charts require records spanning at least 2 distinct n values (got " +
                        std::to_string(distinct_n.size()) + ")");

    // (algo, k) -> n -> repeat samples
    std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, std::vector<double>>> times;
    std::map<std::pair<std::string, std::size_t>, std::map<std::size_t, std::vector<double>>> quality;
    for (const BenchRecord& r : records) {
        const auto key = std::make_pair(to_string(r.algo), r.k);
        times[key][r.n].push_back(r.wall_time_s);
        quality[key][r.n].push_back(r.nccs_mean);
    }

    auto build = [](const auto& grouped, bool use_median) {
        std::vector<Series> out;
        for (const auto& [key, by_n] : grouped) {
            Series s;
            s.label = key.first + " k=" + std::to_string(key.second);
            for (const auto& [n, samples] : by_n) {
                double v;
                if (use_median) {
                    v = median(samples);
                } else {
                    v = 0.0;
                    for (double q : samples) v += q;
                    v /= static_cast<double>(samples.size());
                }
                s.pts.emplace_back(static_cast<double>(n), v);
            }
            out.push_back(std::move(s));
        }
        return out;
    };

    write_chart(path_prefix + "time_vs_n.svg", "Forward wall time per batch vs n", "n",
                "seconds per batch (median of repeats)", true, build(times, true));
    write_chart(path_prefix + "nccs_vs_n.svg", "Approximation quality vs n", "n",
                "nCCS (batch mean)", false, build(quality, false));
}

}  // namespace softtopk
