#include "dld/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dld {

namespace {

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string coord(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

/// Tick spacing of 1, 2 or 5 times a power of ten giving about `target` ticks.
double tick_step(double span, int target) {
    const double raw = span / target;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    const double r = raw / mag;
    return (r < 1.5 ? 1.0 : r < 3.5 ? 2.0 : r < 7.5 ? 5.0 : 10.0) * mag;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"};

}  // namespace

std::string svg_line_plot(const std::string& title, const std::string& xlabel, const std::string& ylabel,
                          const std::vector<SvgSeries>& series, bool equal_aspect) {
    const double W = 640, H = 480, left = 70, right = 150, top = 40, bottom = 60;
    double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
    for (const SvgSeries& s : series)
        for (std::size_t k = 0; k < std::min(s.x.size(), s.y.size()); ++k) {
            if (!std::isfinite(s.x[k]) || !std::isfinite(s.y[k])) continue;
            x0 = std::min(x0, s.x[k]);
            x1 = std::max(x1, s.x[k]);
            y0 = std::min(y0, s.y[k]);
            y1 = std::max(y1, s.y[k]);
        }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 - x0 < 1e-12) x0 -= 0.5, x1 += 0.5;
    if (y1 - y0 < 1e-12) y0 -= 0.5, y1 += 0.5;
    const double pw = W - left - right, ph = H - top - bottom;
    if (equal_aspect) {
        const double scale = std::max((x1 - x0) / pw, (y1 - y0) / ph);
        const double cx = 0.5 * (x0 + x1), cy = 0.5 * (y0 + y1);
        x0 = cx - 0.5 * scale * pw, x1 = cx + 0.5 * scale * pw;
        y0 = cy - 0.5 * scale * ph, y1 = cy + 0.5 * scale * ph;
    } else {
        const double pad = 0.05 * (y1 - y0);
        y0 -= pad;
        y1 += pad;
    }
    auto px = [&](double x) { return left + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) { return top + (1.0 - (y - y0) / (y1 - y0)) * ph; };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << escape(title) << "</text>\n";
    s << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"black\"/>\n";
    const double sx = tick_step(x1 - x0, 6), sy = tick_step(y1 - y0, 6);
    for (double t = std::ceil(x0 / sx) * sx; t <= x1 + 1e-9 * sx; t += sx) {
        s << "<line x1=\"" << coord(px(t)) << "\" y1=\"" << top + ph << "\" x2=\"" << coord(px(t)) << "\" y2=\""
          << top + ph + 5 << "\" stroke=\"black\"/><text x=\"" << coord(px(t)) << "\" y=\"" << top + ph + 18
          << "\" text-anchor=\"middle\">" << num(std::abs(t) < 1e-12 * sx ? 0.0 : t) << "</text>\n";
    }
    for (double t = std::ceil(y0 / sy) * sy; t <= y1 + 1e-9 * sy; t += sy) {
        s << "<line x1=\"" << left - 5 << "\" y1=\"" << coord(py(t)) << "\" x2=\"" << left << "\" y2=\""
          << coord(py(t)) << "\" stroke=\"black\"/><text x=\"" << left - 8 << "\" y=\"" << coord(py(t) + 4)
          << "\" text-anchor=\"end\">" << num(std::abs(t) < 1e-12 * sy ? 0.0 : t) << "</text>\n";
    }
    s << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">" << escape(xlabel)
      << "</text>\n";
    s << "<text transform=\"translate(18," << top + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(ylabel) << "</text>\n";
    s << "<clipPath id=\"plot\"><rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
      << "\"/></clipPath>\n";
    for (std::size_t k = 0; k < series.size(); ++k) {
        const SvgSeries& se = series[k];
        const char* color = kColors[k % (sizeof kColors / sizeof *kColors)];
        s << "<polyline clip-path=\"url(#plot)\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < std::min(se.x.size(), se.y.size()); ++i) {
            if (!std::isfinite(se.x[i]) || !std::isfinite(se.y[i])) continue;
            s << coord(px(se.x[i])) << ',' << coord(py(se.y[i])) << ' ';
        }
        s << "\"/>\n";
        if (se.markers)
            for (std::size_t i = 0; i < std::min(se.x.size(), se.y.size()); ++i)
                if (std::isfinite(se.x[i]) && std::isfinite(se.y[i]))
                    s << "<circle cx=\"" << coord(px(se.x[i])) << "\" cy=\"" << coord(py(se.y[i])) << "\" r=\"2.5\" fill=\""
                      << color << "\"/>\n";
        const double ly = top + 14 + 18.0 * static_cast<double>(k);
        s << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly - 4 << "\" x2=\"" << left + pw + 30 << "\" y2=\""
          << ly - 4 << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << left + pw + 35 << "\" y=\""
          << ly << "\">" << escape(se.name) << "</text>\n";
    }
    s << "</svg>\n";
    return s.str();
}

}  // namespace dld
