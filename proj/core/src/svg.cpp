#include "lstmctl/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace lstmctl {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string svg_line_plot(const std::string& title, const Vector& x, const std::vector<SvgSeries>& series,
                          const std::string& x_label, const std::string& y_label) {
    constexpr double W = 900, H = 360, L = 70, R = 150, T = 36, B = 46;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (double v : x)
        if (std::isfinite(v)) x0 = std::min(x0, v), x1 = std::max(x1, v);
    for (const SvgSeries& s : series)
        for (double v : s.y)
            if (std::isfinite(v)) y0 = std::min(y0, v), y1 = std::max(y1, v);
    if (!(x1 > x0)) x0 = 0, x1 = 1;
    if (!std::isfinite(y0)) y0 = 0, y1 = 1;
    if (!(y1 > y0)) y0 -= 0.5, y1 += 0.5;
    const double pad = 0.05 * (y1 - y0);
    y0 -= pad;
    y1 += pad;

    auto px = [&](double v) { return L + (v - x0) / (x1 - x0) * (W - L - R); };
    auto py = [&](double v) { return H - B - (v - y0) / (y1 - y0) * (H - T - B); };

    std::string s;
    s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(W) + "\" height=\"" + num(H) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s += "<text x=\"" + num(W / 2) + "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" + escape(title) +
         "</text>\n";
    s += "<rect x=\"" + num(L) + "\" y=\"" + num(T) + "\" width=\"" + num(W - L - R) + "\" height=\"" +
         num(H - T - B) + "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int i = 0; i <= 4; ++i) {
        const double yv = y0 + (y1 - y0) * i / 4.0, xv = x0 + (x1 - x0) * i / 4.0;
        s += "<line x1=\"" + num(L) + "\" x2=\"" + num(W - R) + "\" y1=\"" + num(py(yv)) + "\" y2=\"" +
             num(py(yv)) + "\" stroke=\"#ddd\"/>\n";
        s += "<text x=\"" + num(L - 6) + "\" y=\"" + num(py(yv) + 4) + "\" text-anchor=\"end\">" + tick(yv) +
             "</text>\n";
        s += "<text x=\"" + num(px(xv)) + "\" y=\"" + num(H - B + 16) + "\" text-anchor=\"middle\">" + tick(xv) +
             "</text>\n";
    }
    s += "<text x=\"" + num((L + W - R) / 2) + "\" y=\"" + num(H - 8) + "\" text-anchor=\"middle\">" +
         escape(x_label) + "</text>\n";
    if (!y_label.empty())
        s += "<text transform=\"translate(16," + num((T + H - B) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
             escape(y_label) + "</text>\n";

    for (std::size_t k = 0; k < series.size(); ++k) {
        const SvgSeries& ser = series[k];
        std::string d;
        bool pen = false;
        const std::size_t n = std::min(x.size(), ser.y.size());
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(ser.y[i]) || !std::isfinite(x[i])) {
                pen = false;
                continue;
            }
            if (pen && ser.step) d += "H" + num(px(x[i])) + " ";
            d += (pen ? "L" : "M") + num(px(x[i])) + " " + num(py(ser.y[i])) + " ";
            pen = true;
        }
        s += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + ser.color + "\" stroke-width=\"1.4\"/>\n";
        const double ly = T + 14 + 18.0 * static_cast<double>(k);
        s += "<line x1=\"" + num(W - R + 10) + "\" x2=\"" + num(W - R + 30) + "\" y1=\"" + num(ly) + "\" y2=\"" +
             num(ly) + "\" stroke=\"" + ser.color + "\" stroke-width=\"2\"/>\n";
        s += "<text x=\"" + num(W - R + 36) + "\" y=\"" + num(ly + 4) + "\">" + escape(ser.name) + "</text>\n";
    }
    s += "</svg>\n";
    return s;
}

}  // namespace lstmctl
