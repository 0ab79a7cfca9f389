#include "trackae/geo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>

#include "trackae/common.hpp"
#include "trackae/csv.hpp"

namespace trackae {
namespace {

constexpr double kDeg2Rad = 3.14159265358979323846 / 180.0;

const char* kTrackHeader =
    "flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,"
    "is_military_or_uas,weight_class,missed_approach";

std::string opt_cell(const std::optional<double>& v) { return v ? csv::fmt(*v) : std::string{}; }

} // namespace

double haversine_nm(const LatLon& a, const LatLon& b) {
    const double lat1 = a.lat * kDeg2Rad;
    const double lat2 = b.lat * kDeg2Rad;
    const double dlat = (b.lat - a.lat) * kDeg2Rad;
    const double dlon = (b.lon - a.lon) * kDeg2Rad;
    const double s1 = std::sin(dlat / 2.0);
    const double s2 = std::sin(dlon / 2.0);
    const double h = s1 * s1 + std::cos(lat1) * std::cos(lat2) * s2 * s2;
    return 2.0 * kEarthRadiusNm * std::asin(std::min(1.0, std::sqrt(h)));
}

const char* to_string(WeightClass w) {
    switch (w) {
        case WeightClass::small: return "small";
        case WeightClass::large: return "large";
        case WeightClass::heavy: return "heavy";
        default: return "unknown";
    }
}

WeightClass weight_class_from_string(const std::string& s) {
    if (s == "small") return WeightClass::small;
    if (s == "large") return WeightClass::large;
    if (s == "heavy") return WeightClass::heavy;
    return WeightClass::unknown;
}

double AirportConfig::distance_nm(const LatLon& p) const {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& th : thresholds)
        best = std::min(best, haversine_nm(p, LatLon{th.lat, th.lon}));
    return best;
}

double AirportConfig::nearest_elev_ft(const LatLon& p) const {
    double best = std::numeric_limits<double>::infinity();
    double elev = 0.0;
    for (const auto& th : thresholds) {
        const double d = haversine_nm(p, LatLon{th.lat, th.lon});
        if (d < best) {
            best = d;
            elev = th.elev_ft;
        }
    }
    return elev;
}

ParseResult parse_tracks(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw io_error("track csv: missing header");
    if (std::string(csv::trim(line)) != kTrackHeader)
        throw io_error("track csv: malformed header: " + line);

    struct Pending {
        Track track;
        bool first_row = true;
    };
    std::map<std::string, Pending> flights;
    ParseResult result;

    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        const std::string ref = std::to_string(line_no);
        if (cells.size() != 12) {
            result.rejects.push_back({"row", ref, "expected 12 fields, got " + std::to_string(cells.size())});
            continue;
        }
        const std::string& fid = cells[0];
        if (fid.empty()) {
            result.rejects.push_back({"row", ref, "empty flight_id"});
            continue;
        }
        const auto t = csv::parse_double(cells[1]);
        const auto lat = csv::parse_double(cells[2]);
        const auto lon = csv::parse_double(cells[3]);
        if (!t || !lat || !lon || *lat < -90.0 || *lat > 90.0 || *lon < -180.0 || *lon > 180.0) {
            result.rejects.push_back({"row", ref, "unparsable or out-of-range t/lat/lon"});
            continue;
        }
        TrackPoint pt;
        pt.t = *t;
        pt.lat = *lat;
        pt.lon = *lon;
        pt.alt_ft = csv::parse_double(cells[4]);
        pt.gs_kts = csv::parse_double(cells[5]);
        pt.course_deg = csv::parse_double(cells[6]);

        auto& pending = flights[fid];
        if (pending.first_row) {
            pending.first_row = false;
            pending.track.flight_id = fid;
            pending.track.aircraft_type = cells[7];
            pending.track.is_helicopter = cells[8] == "1";
            pending.track.is_military_or_uas = cells[9] == "1";
            pending.track.weight_class = weight_class_from_string(cells[10]);
            pending.track.missed_approach = cells[11] == "1";
        }
        pending.track.points.push_back(pt);
    }

    for (auto& [fid, pending] : flights) {
        auto& pts = pending.track.points;
        std::stable_sort(pts.begin(), pts.end(),
                         [](const TrackPoint& a, const TrackPoint& b) { return a.t < b.t; });
        bool monotonic = true;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (!(pts[i].t > pts[i - 1].t)) {
                monotonic = false;
                break;
            }
        if (!monotonic) {
            result.rejects.push_back({"track", fid, "non-monotonic time"});
            continue;
        }
        result.tracks.push_back(std::move(pending.track));
    }
    // Map iteration is already flight_id-ordered; tie-break on first timestamp.
    std::stable_sort(result.tracks.begin(), result.tracks.end(), [](const Track& a, const Track& b) {
        if (a.flight_id != b.flight_id) return a.flight_id < b.flight_id;
        return a.points.front().t < b.points.front().t;
    });
    return result;
}

void write_tracks_csv(std::ostream& out, const std::vector<Track>& tracks) {
    out << kTrackHeader << "\n";
    for (const auto& tr : tracks)
        for (const auto& p : tr.points) {
            out << tr.flight_id << ',' << csv::fmt(p.t) << ',' << csv::fmt(p.lat) << ','
                << csv::fmt(p.lon) << ',' << opt_cell(p.alt_ft) << ',' << opt_cell(p.gs_kts) << ','
                << opt_cell(p.course_deg) << ',' << tr.aircraft_type << ','
                << (tr.is_helicopter ? '1' : '0') << ',' << (tr.is_military_or_uas ? '1' : '0')
                << ',' << to_string(tr.weight_class) << ',' << (tr.missed_approach ? '1' : '0')
                << "\n";
        }
}

std::optional<Track> clip_terminal(const Track& track, const AirportConfig& airport) {
    if (track.points.empty()) return std::nullopt;
    const double r = airport.terminal_radius_nm;
    // Walk backwards from the last point while inside the radius.
    std::size_t start = track.points.size();
    for (std::size_t i = track.points.size(); i-- > 0;) {
        const auto& p = track.points[i];
        if (airport.distance_nm(LatLon{p.lat, p.lon}) <= r)
            start = i;
        else
            break;
    }
    if (start == track.points.size()) return std::nullopt; // last point outside
    Track out = track;
    out.points.assign(track.points.begin() + static_cast<std::ptrdiff_t>(start), track.points.end());
    return out;
}

std::vector<std::pair<std::size_t, double>> time_gaps(const Track& track) {
    std::vector<std::pair<std::size_t, double>> gaps;
    if (track.points.size() < 2) return gaps;
    gaps.reserve(track.points.size() - 1);
    for (std::size_t i = 0; i + 1 < track.points.size(); ++i)
        gaps.emplace_back(i, track.points[i + 1].t - track.points[i].t);
    return gaps;
}

namespace {

// "key = value" with optional inline "{ k = v, ... }" blocks.
std::pair<std::string, std::string> split_kv(std::string_view line) {
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw io_error("airport config: expected key = value: " + std::string(line));
    return {std::string(csv::trim(line.substr(0, eq))), std::string(csv::trim(line.substr(eq + 1)))};
}

std::string unquote(std::string_view s) {
    s = csv::trim(s);
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
    return std::string(s);
}

RunwayThreshold parse_threshold_block(std::string_view body) {
    RunwayThreshold th;
    bool have_lat = false, have_lon = false, have_elev = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= body.size(); ++i) {
        if (i == body.size() || body[i] == ',') {
            const auto item = csv::trim(body.substr(start, i - start));
            start = i + 1;
            if (item.empty()) continue;
            auto [k, v] = split_kv(item);
            if (k == "runway_id") th.runway_id = unquote(v);
            else if (k == "lat") { th.lat = csv::parse_double(v).value_or(1e9); have_lat = true; }
            else if (k == "lon") { th.lon = csv::parse_double(v).value_or(1e9); have_lon = true; }
            else if (k == "elev_ft") { th.elev_ft = csv::parse_double(v).value_or(0.0); have_elev = true; }
            else throw io_error("airport config: unknown threshold key: " + k);
        }
    }
    if (!have_lat || !have_lon || !have_elev || std::abs(th.lat) > 90.0 || std::abs(th.lon) > 180.0 ||
        !std::isfinite(th.elev_ft))
        throw io_error("airport config: invalid threshold block");
    return th;
}

} // namespace

AirportConfig parse_airport_config(std::istream& in) {
    AirportConfig cfg;
    std::string line;
    while (std::getline(in, line)) {
        auto sv = csv::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto [k, v] = split_kv(sv);
        if (k == "airport_code") {
            cfg.airport_code = unquote(v);
        } else if (k == "terminal_radius_nm") {
            const auto r = csv::parse_double(v);
            if (!r || *r <= 0.0) throw io_error("airport config: terminal_radius_nm must be > 0");
            cfg.terminal_radius_nm = *r;
        } else if (k == "threshold") {
            auto body = csv::trim(v);
            if (body.size() < 2 || body.front() != '{' || body.back() != '}')
                throw io_error("airport config: threshold must be a { ... } block");
            cfg.thresholds.push_back(parse_threshold_block(body.substr(1, body.size() - 2)));
        } else {
            throw io_error("airport config: unknown key: " + k);
        }
    }
    if (cfg.airport_code.empty()) throw io_error("airport config: missing airport_code");
    if (cfg.thresholds.empty()) throw io_error("airport config: at least one threshold required");
    return cfg;
}

AirportConfig load_airport_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw io_error("cannot open airport config: " + path);
    return parse_airport_config(f);
}

void write_airport_config(std::ostream& out, const AirportConfig& cfg) {
    out << "airport_code = " << cfg.airport_code << "\n";
    out << "terminal_radius_nm = " << csv::fmt(cfg.terminal_radius_nm) << "\n";
    for (const auto& th : cfg.thresholds)
        out << "threshold = { runway_id = " << th.runway_id << ", lat = " << csv::fmt(th.lat)
            << ", lon = " << csv::fmt(th.lon) << ", elev_ft = " << csv::fmt(th.elev_ft) << " }\n";
}

} // namespace trackae
