#include "trackae/anomaly.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include "trackae/common.hpp"
#include "trackae/csv.hpp"

namespace trackae {

double calibrate_threshold(const std::vector<double>& train_maes, const ThresholdPolicy& policy) {
    if (train_maes.empty()) throw std::invalid_argument("calibrate_threshold: empty MAE set");
    if (policy.method == ThresholdPolicy::Method::max_train_mae)
        return *std::max_element(train_maes.begin(), train_maes.end());
    if (!(policy.q > 0.0 && policy.q <= 1.0))
        throw std::invalid_argument("calibrate_threshold: quantile q must be in (0,1]");
    std::vector<double> sorted = train_maes;
    std::sort(sorted.begin(), sorted.end());
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::ceil(policy.q * n)); // 1-based
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    return sorted[idx - 1];
}

double score(const Autoencoder& model, const FeatureSeries& normalized) {
    const Tensor x = feature_to_tensor(normalized, model.config().input_length);
    return ad::mae_eval(x, model.reconstruct(x));
}

bool detect(double score_mae, std::optional<double> delta) {
    if (!delta) throw std::invalid_argument("detect: threshold uncalibrated");
    return score_mae > *delta;
}

const char* to_string(AnomalyCategory c) {
    switch (c) {
        case AnomalyCategory::non_notable: return "non_notable";
        case AnomalyCategory::ground_track: return "ground_track";
        case AnomalyCategory::point_altitude: return "point_altitude";
        case AnomalyCategory::point_speed: return "point_speed";
        case AnomalyCategory::missing_altitude: return "missing_altitude";
        case AnomalyCategory::non_standard_operation: return "non_standard_operation";
        case AnomalyCategory::risky_operation: return "risky_operation";
        case AnomalyCategory::large_time_gap: return "large_time_gap";
        case AnomalyCategory::unclassified: return "unclassified";
    }
    return "?";
}

std::optional<AnomalyCategory> anomaly_category_from_string(const std::string& s) {
    for (auto c : {AnomalyCategory::non_notable, AnomalyCategory::ground_track,
                   AnomalyCategory::point_altitude, AnomalyCategory::point_speed,
                   AnomalyCategory::missing_altitude, AnomalyCategory::non_standard_operation,
                   AnomalyCategory::risky_operation, AnomalyCategory::large_time_gap,
                   AnomalyCategory::unclassified})
        if (s == to_string(c)) return c;
    return std::nullopt;
}

namespace {

// A short spike: a rate excursion beyond `limit` into a point, undone with the
// opposite sign within the next two samples.
template <typename Getter>
bool has_point_spike(const Track& t, double limit, Getter get) {
    const auto& pts = t.points;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const auto v0 = get(pts[i]);
        const auto v1 = get(pts[i + 1]);
        if (!v0 || !v1) continue;
        const double dt = pts[i + 1].t - pts[i].t;
        if (dt <= 0.0) continue;
        const double rate_in = (*v1 - *v0) / dt;
        if (std::abs(rate_in) <= limit) continue;
        for (std::size_t j = i + 1; j < std::min(i + 3, pts.size() - 1); ++j) {
            const auto a = get(pts[j]);
            const auto b = get(pts[j + 1]);
            if (!a || !b) continue;
            const double dt2 = pts[j + 1].t - pts[j].t;
            if (dt2 <= 0.0) continue;
            const double rate_out = (*b - *a) / dt2;
            if (std::abs(rate_out) > limit && rate_out * rate_in < 0.0) return true;
        }
    }
    return false;
}

double horizontal_extent_nm(const Track& t) {
    double lat_lo = 90.0, lat_hi = -90.0, lon_lo = 180.0, lon_hi = -180.0;
    for (const auto& p : t.points) {
        lat_lo = std::min(lat_lo, p.lat);
        lat_hi = std::max(lat_hi, p.lat);
        lon_lo = std::min(lon_lo, p.lon);
        lon_hi = std::max(lon_hi, p.lon);
    }
    return haversine_nm(LatLon{lat_lo, lon_lo}, LatLon{lat_hi, lon_hi});
}

double airborne_duration_s(const Track& t, double field_elev, double agl_gate) {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < t.points.size(); ++i) {
        const auto& a = t.points[i];
        if (a.alt_ft && *a.alt_ft - field_elev > agl_gate) total += t.points[i + 1].t - a.t;
    }
    return total;
}

} // namespace

AnomalyClass classify_anomaly(const Track& track, const Track& segment,
                              const AirportConfig& airport, const ClassifierConfig& cfg) {
    const auto& pts = segment.points;
    const double field_elev =
        pts.empty() ? 0.0
                    : airport.nearest_elev_ft(LatLon{pts.back().lat, pts.back().lon});

    // (1) known patterns
    if (track.is_helicopter) return {AnomalyCategory::non_notable, "helicopter"};
    if (internal_origin(track, airport)) return {AnomalyCategory::non_notable, "internal_origin"};

    // (2) data-assembly issues outrank sensor noise
    for (const auto& [i, gap] : time_gaps(segment))
        if (gap > cfg.gap_notable_s) return {AnomalyCategory::large_time_gap, {}};

    // (3)
    if (!pts.empty() &&
        longest_missing_alt_run(segment) >=
            static_cast<std::size_t>(std::ceil(cfg.missing_alt_frac * static_cast<double>(pts.size()))))
        return {AnomalyCategory::missing_altitude, {}};

    // (4)
    double max_agl = -1e18;
    bool any_alt = false;
    for (const auto& p : pts)
        if (p.alt_ft) {
            any_alt = true;
            max_agl = std::max(max_agl, *p.alt_ft - field_elev);
        }
    if (any_alt && max_agl < cfg.ground_agl_ft) return {AnomalyCategory::ground_track, {}};

    // (5) / (6)
    if (has_point_spike(segment, cfg.spike_climb_fpm / 60.0,
                        [](const TrackPoint& p) { return p.alt_ft; }))
        return {AnomalyCategory::point_altitude, {}};
    if (has_point_spike(segment, cfg.spike_accel_kts_s,
                        [](const TrackPoint& p) { return p.gs_kts; }))
        return {AnomalyCategory::point_speed, {}};

    // (7)
    if (!pts.empty() && horizontal_extent_nm(segment) < cfg.risky_extent_nm && any_alt &&
        max_agl > cfg.risky_alt_agl_ft)
        return {AnomalyCategory::risky_operation, {}};

    // (8)
    if (any_alt && airborne_duration_s(segment, field_elev, cfg.airborne_agl_ft) < cfg.nonstd_airborne_s)
        return {AnomalyCategory::non_standard_operation, {}};

    return {AnomalyCategory::unclassified, {}};
}

SummaryStats summarize(const std::vector<AnomalyReport>& reports) {
    SummaryStats s;
    s.total = reports.size();
    for (const auto& r : reports) {
        if (!r.is_anomaly) continue;
        ++s.anomalies;
        s.by_category[r.taxonomy ? to_string(*r.taxonomy) : "unclassified"]++;
        s.by_helicopter[r.is_helicopter]++;
        s.by_weight_class[to_string(r.weight_class)]++;
    }
    s.pct_anomalous =
        s.total == 0 ? 0.0 : 100.0 * static_cast<double>(s.anomalies) / static_cast<double>(s.total);
    return s;
}

void write_report_csv(std::ostream& out, const std::vector<AnomalyReport>& reports) {
    out << "flight_id,mae,is_anomaly,category,weight_class,is_helicopter\n";
    for (const auto& r : reports)
        out << r.flight_id << ',' << csv::fmt(r.mae) << ',' << (r.is_anomaly ? '1' : '0') << ','
            << (r.taxonomy ? to_string(*r.taxonomy) : "") << ',' << to_string(r.weight_class) << ','
            << (r.is_helicopter ? '1' : '0') << "\n";
}

std::vector<AnomalyReport> read_report_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) ||
        std::string(csv::trim(line)) != "flight_id,mae,is_anomaly,category,weight_class,is_helicopter")
        throw io_error("report csv: malformed header");
    std::vector<AnomalyReport> out;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (cells.size() != 6) throw io_error("report csv: expected 6 fields: " + line);
        AnomalyReport r;
        r.flight_id = cells[0];
        const auto mae = csv::parse_double(cells[1]);
        if (!mae) throw io_error("report csv: bad mae cell: " + line);
        r.mae = *mae;
        r.is_anomaly = cells[2] == "1";
        if (!cells[3].empty()) r.taxonomy = anomaly_category_from_string(cells[3]);
        r.weight_class = weight_class_from_string(cells[4]);
        r.is_helicopter = cells[5] == "1";
        out.push_back(std::move(r));
    }
    return out;
}

} // namespace trackae
