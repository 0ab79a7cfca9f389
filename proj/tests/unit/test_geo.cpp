#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <sstream>

#include "trackae/common.hpp"
#include "trackae/geo.hpp"
#include "trackae/rng.hpp"

using namespace trackae;

namespace {

Track make_track(const std::string& id, std::vector<TrackPoint> pts) {
    Track t;
    t.flight_id = id;
    t.aircraft_type = "A320";
    t.weight_class = WeightClass::large;
    t.points = std::move(pts);
    return t;
}

TrackPoint pt(double t, double lat, double lon, std::optional<double> alt = 5000.0,
              std::optional<double> gs = 180.0) {
    TrackPoint p;
    p.t = t;
    p.lat = lat;
    p.lon = lon;
    p.alt_ft = alt;
    p.gs_kts = gs;
    return p;
}

AirportConfig simple_airport(double lat = 0.0, double lon = 0.0, double radius = 40.0) {
    AirportConfig a;
    a.airport_code = "KTST";
    a.terminal_radius_nm = radius;
    a.thresholds.push_back({"09", lat, lon, 1000.0});
    return a;
}

} // namespace

TEST_CASE("haversine: reference values") {
    CHECK(haversine_nm({0, 0}, {0, 0}) == 0.0);
    // one degree of latitude = R*pi/180
    CHECK(haversine_nm({0, 0}, {1, 0}) == doctest::Approx(60.04).epsilon(0.0002));
    // antipodal = R*pi
    CHECK(haversine_nm({0, 0}, {0, 180}) == doctest::Approx(10807.3).epsilon(1e-5));
}

TEST_CASE("haversine: symmetry and triangle inequality") {
    CounterRng rng(31337);
    for (int it = 0; it < 300; ++it) {
        const LatLon a{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        const LatLon b{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        const LatLon c{rng.uniform(-90, 90), rng.uniform(-180, 180)};
        CHECK(haversine_nm(a, b) == haversine_nm(b, a));
        CHECK(haversine_nm(a, b) >= 0.0);
        CHECK(haversine_nm(a, c) <= haversine_nm(a, b) + haversine_nm(b, c) + 1e-9);
    }
}

TEST_CASE("parse_tracks: empty input") {
    std::istringstream in(
        "flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,"
        "is_military_or_uas,weight_class,missed_approach\n");
    const auto r = parse_tracks(in);
    CHECK(r.tracks.empty());
    CHECK(r.rejects.empty());
}

TEST_CASE("parse_tracks: minimal well-formed flight") {
    std::istringstream in(
        "flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,"
        "is_military_or_uas,weight_class,missed_approach\n"
        "F1,0,10,20,5000,180,270,A320,0,0,large,0\n"
        "F1,4,10.01,20,4900,179,270,A320,0,0,large,0\n"
        "F1,8,10.02,20,,179,,A320,0,0,large,0\n");
    const auto r = parse_tracks(in);
    REQUIRE(r.tracks.size() == 1);
    CHECK(r.rejects.empty());
    const auto& t = r.tracks[0];
    CHECK(t.flight_id == "F1");
    REQUIRE(t.points.size() == 3);
    CHECK(t.points[2].t == 8.0);
    CHECK_FALSE(t.points[2].alt_ft.has_value()); // empty cell means missing
    CHECK(t.points[2].gs_kts == 179.0);
    CHECK_FALSE(t.points[2].course_deg.has_value());
}

TEST_CASE("parse_tracks: equal timestamps reject the flight") {
    std::istringstream in(
        "flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,"
        "is_military_or_uas,weight_class,missed_approach\n"
        "F1,5,10,20,5000,180,270,A320,0,0,large,0\n"
        "F1,5,10.01,20,4900,179,270,A320,0,0,large,0\n");
    const auto r = parse_tracks(in);
    CHECK(r.tracks.empty());
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].reason == "non-monotonic time");
    CHECK(r.rejects[0].ref == "F1");
}

TEST_CASE("parse_tracks: malformed header is fatal, bad rows are not") {
    std::istringstream bad("not,a,header\nF1,0,10,20,,,,A320,0,0,large,0\n");
    CHECK_THROWS_AS(parse_tracks(bad), io_error);

    std::istringstream rows(
        "flight_id,t,lat,lon,alt_ft,gs_kts,course_deg,aircraft_type,is_helicopter,"
        "is_military_or_uas,weight_class,missed_approach\n"
        "F1,0,95,20,5000,180,270,A320,0,0,large,0\n" // lat out of range
        "F1,4,10,20,5000,180,270,A320,0,0,large,0\n");
    const auto r = parse_tracks(rows);
    REQUIRE(r.tracks.size() == 1);
    CHECK(r.tracks[0].points.size() == 1);
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].scope == "row");
}

TEST_CASE("track csv round-trip preserves values") {
    CounterRng rng(404);
    std::vector<Track> tracks;
    for (int i = 0; i < 12; ++i) {
        char idb[8];
        std::snprintf(idb, sizeof(idb), "RT%02d", i);
        Track t = make_track(idb, {});
        t.is_helicopter = rng.next_double() < 0.3;
        t.is_military_or_uas = rng.next_double() < 0.2;
        t.missed_approach = rng.next_double() < 0.2;
        t.weight_class = static_cast<WeightClass>(rng.next_below(4));
        double tt = rng.uniform(0, 1e9);
        for (int k = 0; k < 8; ++k) {
            TrackPoint p = pt(tt, rng.uniform(-89, 89), rng.uniform(-179, 179));
            if (rng.next_double() < 0.25) p.alt_ft.reset();
            else p.alt_ft = rng.uniform(-500, 45000);
            if (rng.next_double() < 0.25) p.gs_kts.reset();
            else p.gs_kts = rng.uniform(0, 600);
            if (rng.next_double() < 0.5) p.course_deg = rng.uniform(0, 359.9);
            else p.course_deg.reset();
            t.points.push_back(p);
            tt += rng.uniform(1, 10);
        }
        tracks.push_back(std::move(t));
    }
    std::ostringstream out;
    write_tracks_csv(out, tracks);
    std::istringstream in(out.str());
    const auto r = parse_tracks(in);
    CHECK(r.rejects.empty());
    REQUIRE(r.tracks.size() == tracks.size());
    for (std::size_t i = 0; i < tracks.size(); ++i) {
        const auto& a = tracks[i];
        const auto& b = r.tracks[i];
        CHECK(a.flight_id == b.flight_id);
        CHECK(a.is_helicopter == b.is_helicopter);
        CHECK(a.is_military_or_uas == b.is_military_or_uas);
        CHECK(a.missed_approach == b.missed_approach);
        CHECK(a.weight_class == b.weight_class);
        REQUIRE(a.points.size() == b.points.size());
        for (std::size_t k = 0; k < a.points.size(); ++k) {
            CHECK(a.points[k].t == b.points[k].t);
            CHECK(a.points[k].lat == b.points[k].lat);
            CHECK(a.points[k].lon == b.points[k].lon);
            CHECK(a.points[k].alt_ft == b.points[k].alt_ft);
            CHECK(a.points[k].gs_kts == b.points[k].gs_kts);
            CHECK(a.points[k].course_deg == b.points[k].course_deg);
        }
    }
    // serialize -> parse -> serialize is byte-stable
    std::ostringstream out2;
    write_tracks_csv(out2, r.tracks);
    CHECK(out.str() == out2.str());
}

TEST_CASE("clip_terminal: containment cases") {
    const auto airport = simple_airport();
    // ~1 deg lon at equator is ~60 NM
    Track outside = make_track("OUT", {pt(0, 0, 2.0), pt(4, 0, 2.1)});
    CHECK_FALSE(clip_terminal(outside, airport).has_value());

    Track inside = make_track("IN", {pt(0, 0, 0.3), pt(4, 0, 0.2), pt(8, 0, 0.1)});
    const auto seg = clip_terminal(inside, airport);
    REQUIRE(seg.has_value());
    CHECK(seg->points.size() == 3);

    // enters, leaves, re-enters: only the final inside-run is kept
    Track wobble = make_track("WOB", {pt(0, 0, 0.5), pt(4, 0, 1.5), pt(8, 0, 0.4),
                                      pt(12, 0, 0.2), pt(16, 0, 0.05)});
    const auto seg2 = clip_terminal(wobble, airport);
    REQUIRE(seg2.has_value());
    REQUIRE(seg2->points.size() == 3);
    CHECK(seg2->points[0].t == 8.0);
    CHECK(seg2->points.back().t == 16.0);
}

TEST_CASE("clip_terminal: output is a suffix of the input") {
    const auto airport = simple_airport();
    CounterRng rng(777);
    for (int it = 0; it < 100; ++it) {
        Track t = make_track("S" + std::to_string(it), {});
        double tt = 0;
        const std::size_t n = 2 + rng.next_below(30);
        for (std::size_t k = 0; k < n; ++k) {
            t.points.push_back(pt(tt, 0, rng.uniform(-1.2, 1.2)));
            tt += rng.uniform(1, 5);
        }
        const auto seg = clip_terminal(t, airport);
        if (!seg) {
            CHECK(airport.distance_nm({t.points.back().lat, t.points.back().lon}) >
                  airport.terminal_radius_nm);
            continue;
        }
        REQUIRE(!seg->points.empty());
        CHECK(seg->points.back().t == t.points.back().t);
        const std::size_t offset = t.points.size() - seg->points.size();
        for (std::size_t k = 0; k < seg->points.size(); ++k) {
            CHECK(seg->points[k].t == t.points[offset + k].t);
            CHECK(airport.distance_nm({seg->points[k].lat, seg->points[k].lon}) <=
                  airport.terminal_radius_nm);
        }
        // the point before the kept run (if any) is outside
        if (offset > 0)
            CHECK(airport.distance_nm({t.points[offset - 1].lat, t.points[offset - 1].lon}) >
                  airport.terminal_radius_nm);
    }
}

TEST_CASE("time_gaps") {
    Track t = make_track("G", {pt(0, 0, 0), pt(4, 0, 0), pt(8, 0, 0)});
    const auto g = time_gaps(t);
    REQUIRE(g.size() == 2);
    CHECK(g[0] == std::pair<std::size_t, double>{0, 4.0});
    CHECK(g[1] == std::pair<std::size_t, double>{1, 4.0});

    Track big = make_track("B", {pt(0, 0, 0), pt(4, 0, 0), pt(3700, 0, 0)});
    const auto g2 = time_gaps(big);
    REQUIRE(g2.size() == 2);
    CHECK(g2[1].second == doctest::Approx(3696.0));

    Track single = make_track("S", {pt(0, 0, 0)});
    CHECK(time_gaps(single).empty());
}

TEST_CASE("airport config: parse, nearest threshold, round-trip") {
    std::istringstream in(
        "# test airport\n"
        "airport_code = KTST\n"
        "terminal_radius_nm = 40\n"
        "threshold = { runway_id = 08L, lat = 36.08, lon = -115.15, elev_ft = 2000 }\n"
        "threshold = { runway_id = 26R, lat = 36.5, lon = -115.15, elev_ft = 2100 }\n");
    const auto cfg = parse_airport_config(in);
    CHECK(cfg.airport_code == "KTST");
    CHECK(cfg.terminal_radius_nm == 40.0);
    REQUIRE(cfg.thresholds.size() == 2);
    CHECK(cfg.nearest_elev_ft({36.1, -115.15}) == 2000.0);
    CHECK(cfg.nearest_elev_ft({36.49, -115.15}) == 2100.0);
    // nearest-threshold distance is the min over thresholds
    CHECK(cfg.distance_nm({36.08, -115.15}) == 0.0);

    std::ostringstream out;
    write_airport_config(out, cfg);
    std::istringstream in2(out.str());
    const auto cfg2 = parse_airport_config(in2);
    CHECK(cfg2.thresholds.size() == 2);
    CHECK(cfg2.thresholds[1].elev_ft == 2100.0);

    std::istringstream bad("airport_code = X\n");
    CHECK_THROWS_AS(parse_airport_config(bad), io_error);
    std::istringstream bad2("airport_code = X\nterminal_radius_nm = -1\n");
    CHECK_THROWS_AS(parse_airport_config(bad2), io_error);
}
