#include "trackae/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "trackae/common.hpp"

namespace trackae {
namespace {

constexpr int kWidth = 900;
constexpr int kPanelHeight = 280;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 20;
constexpr int kMarginTop = 40;
constexpr int kPanelGap = 50;

struct Scale {
    double lo, hi;
    double map(double v, double y0, double h) const {
        const double span = hi - lo;
        const double t = span > 0.0 ? (v - lo) / span : 0.5;
        return y0 + h - t * h;
    }
};

Scale fit(const std::vector<double>& a, const std::vector<double>& b) {
    double lo = 1e300, hi = -1e300;
    for (double v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double pad = std::max(1.0, 0.05 * (hi - lo));
    return {lo - pad, hi + pad};
}

void polyline(std::ostringstream& out, const std::vector<double>& vals, const Scale& sc,
              double y0, double h, const char* color) {
    out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const double plot_w = kWidth - kMarginLeft - kMarginRight;
    const std::size_t n = vals.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double x = kMarginLeft + plot_w * static_cast<double>(i) / static_cast<double>(n - 1);
        out << x << ',' << sc.map(vals[i], y0, h) << ' ';
    }
    out << "\"/>\n";
}

void panel(std::ostringstream& out, const std::string& label, const std::vector<double>& orig,
           const std::vector<double>& recon, double y0) {
    const double h = kPanelHeight - 60;
    const Scale sc = fit(orig, recon);
    out << "  <rect x=\"" << kMarginLeft << "\" y=\"" << y0 << "\" width=\""
        << (kWidth - kMarginLeft - kMarginRight) << "\" height=\"" << h
        << "\" fill=\"none\" stroke=\"#999\"/>\n";
    out << "  <text x=\"" << kMarginLeft << "\" y=\"" << (y0 - 8)
        << "\" font-family=\"sans-serif\" font-size=\"14\">" << label << "</text>\n";
    out << "  <text x=\"6\" y=\"" << (y0 + 14) << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << static_cast<long>(sc.hi) << "</text>\n";
    out << "  <text x=\"6\" y=\"" << (y0 + h) << "\" font-family=\"sans-serif\" font-size=\"11\">"
        << static_cast<long>(sc.lo) << "</text>\n";
    polyline(out, orig, sc, y0, h, "#cc2222");
    polyline(out, recon, sc, y0, h, "#2244cc");
}

} // namespace

std::string render_track_svg(const std::string& flight_id, const FeatureSeries& original,
                             const FeatureSeries& reconstruction, double mae,
                             std::optional<double> delta) {
    const int height = kMarginTop + 2 * kPanelHeight + kPanelGap;
    std::ostringstream out;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << height << "\" viewBox=\"0 0 " << kWidth << ' ' << height << "\">\n";
    out << "  <text x=\"" << kMarginLeft << "\" y=\"20\" font-family=\"sans-serif\" font-size=\"15\">"
        << flight_id << "  mae=" << mae;
    if (delta) out << "  threshold=" << *delta;
    out << "  (red: original, blue: reconstruction)</text>\n";
    panel(out, "altitude [ft]", original.alt_ft, reconstruction.alt_ft, kMarginTop + 20);
    panel(out, "ground speed [kts]", original.gs_kts, reconstruction.gs_kts,
          kMarginTop + kPanelHeight + kPanelGap);
    out << "</svg>\n";
    return out.str();
}

void write_track_svg(const std::string& path, const std::string& flight_id,
                     const FeatureSeries& original, const FeatureSeries& reconstruction,
                     double mae, std::optional<double> delta) {
    std::ofstream f(path);
    if (!f) throw io_error("cannot open svg for writing: " + path);
    f << render_track_svg(flight_id, original, reconstruction, mae, delta);
    if (!f) throw io_error("svg write failed: " + path);
}

} // namespace trackae
