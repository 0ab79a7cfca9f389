#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace trackae {

// Mean spherical earth radius in nautical miles. Ellipsoidal geodesy is
// pointless at terminal-area scale.
inline constexpr double kEarthRadiusNm = 3440.065;

struct LatLon {
    double lat = 0.0; // degrees, [-90, 90]
    double lon = 0.0; // degrees, [-180, 180]
};

// Great-circle distance in nautical miles.
double haversine_nm(const LatLon& a, const LatLon& b);

enum class WeightClass { small, large, heavy, unknown };

const char* to_string(WeightClass w);
WeightClass weight_class_from_string(const std::string& s);

struct TrackPoint {
    double t = 0.0; // epoch seconds
    double lat = 0.0;
    double lon = 0.0;
    std::optional<double> alt_ft;     // MSL
    std::optional<double> gs_kts;     // ground speed
    std::optional<double> course_deg; // [0, 360)
};

struct Track {
    std::string flight_id;
    std::string aircraft_type;
    bool is_helicopter = false;
    bool is_military_or_uas = false;
    WeightClass weight_class = WeightClass::unknown;
    bool missed_approach = false;
    std::vector<TrackPoint> points; // strictly increasing t
};

struct RunwayThreshold {
    std::string runway_id;
    double lat = 0.0;
    double lon = 0.0;
    double elev_ft = 0.0;
};

struct AirportConfig {
    std::string airport_code;
    double terminal_radius_nm = 40.0;
    std::vector<RunwayThreshold> thresholds; // non-empty

    // Distance from a point to the nearest configured threshold.
    double distance_nm(const LatLon& p) const;
    // Elevation of the threshold nearest to p.
    double nearest_elev_ft(const LatLon& p) const;
};

// Parses the key/value airport config format:
//   airport_code = KAAA
//   terminal_radius_nm = 40
//   threshold = { runway_id = 08L, lat = 36.08, lon = -115.15, elev_ft = 2000 }
AirportConfig parse_airport_config(std::istream& in);
AirportConfig load_airport_config(const std::string& path);
void write_airport_config(std::ostream& out, const AirportConfig& cfg);

struct RejectRecord {
    std::string scope; // "row" or "track"
    std::string ref;   // line number or flight_id
    std::string reason;
};

struct ParseResult {
    std::vector<Track> tracks;         // ordered by (flight_id, first t)
    std::vector<RejectRecord> rejects; // tracks and rows that failed validation
};

// Track CSV schema:
// flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,
// is_military_or_uas,weight_class,missed_approach
// Empty alt/gs/course cells mean missing; booleans are 0/1.
// Throws io_error on a malformed header. Rows with unparsable lat/lon go to
// the rejects list; flights with non-strictly-increasing timestamps are
// rejected whole.
ParseResult parse_tracks(std::istream& in);
void write_tracks_csv(std::ostream& out, const std::vector<Track>& tracks);

// Final contiguous run of points within terminal_radius_nm of the nearest
// threshold, ending at the last point. nullopt when the flight does not end
// inside the terminal area.
std::optional<Track> clip_terminal(const Track& track, const AirportConfig& airport);

// (index i, t[i+1]-t[i]) for consecutive point pairs; empty for < 2 points.
std::vector<std::pair<std::size_t, double>> time_gaps(const Track& track);

} // namespace trackae
