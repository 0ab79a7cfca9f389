#include <doctest.h>

#include <set>
#include <sstream>

#include "trackae/features.hpp"
#include "trackae/synthgen.hpp"

using namespace trackae;

TEST_CASE("gen_nominal: zero noise gives a nonincreasing altitude profile") {
    AirportProfile profile;
    profile.noise_alt_ft = 0.0;
    profile.noise_speed_kts = 0.0;
    const auto tracks = gen_nominal(profile, 5, 7);
    for (const auto& t : tracks) {
        REQUIRE(t.points.size() > 30);
        for (std::size_t i = 1; i < t.points.size(); ++i) {
            CHECK(*t.points[i].alt_ft <= *t.points[i - 1].alt_ft);
            CHECK(*t.points[i].gs_kts <= *t.points[i - 1].gs_kts + 1e-9);
        }
    }
}

TEST_CASE("gen_nominal: deterministic, distinct ids") {
    AirportProfile profile;
    const auto a = gen_nominal(profile, 100, 123);
    const auto b = gen_nominal(profile, 100, 123);
    std::ostringstream sa, sb;
    write_tracks_csv(sa, a);
    write_tracks_csv(sb, b);
    CHECK(sa.str() == sb.str()); // byte-for-byte reproducible

    std::set<std::string> ids;
    for (const auto& t : a) ids.insert(t.flight_id);
    CHECK(ids.size() == 100);
}

TEST_CASE("gen_nominal: geometry contract against the haversine oracle") {
    AirportProfile profile;
    const auto airport = synth_airport_config(profile);
    const auto& th = airport.thresholds.front();
    const auto tracks = gen_nominal(profile, 20, 99);
    for (const auto& t : tracks) {
        for (const auto& p : t.points)
            CHECK(haversine_nm({p.lat, p.lon}, {th.lat, th.lon}) <= 40.0);
        const auto& last = t.points.back();
        CHECK(haversine_nm({last.lat, last.lon}, {th.lat, th.lon}) <= 1.0);
    }
}

TEST_CASE("gen_nominal: zero-noise tracks pass the preliminary-normal filter") {
    AirportProfile profile;
    profile.noise_alt_ft = 0.0;
    profile.noise_speed_kts = 0.0;
    const auto airport = synth_airport_config(profile);
    for (const auto& t : gen_nominal(profile, 50, 5)) {
        const auto seg = clip_terminal(t, airport);
        REQUIRE(seg.has_value());
        const auto v = label_preliminary_normal(*seg, {}, airport);
        if (!v.normal()) {
            for (auto r : v.reasons) MESSAGE(to_string(r));
        }
        CHECK(v.normal());
    }
}

TEST_CASE("gen_nominal: validates the profile") {
    AirportProfile bad;
    bad.entry_alt_ft = bad.field_elev_ft; // not above the field
    CHECK_THROWS_AS(gen_nominal(bad, 1, 1), std::invalid_argument);
    AirportProfile bad2;
    bad2.final_speed_kts = bad2.entry_speed_kts + 10;
    CHECK_THROWS_AS(gen_nominal(bad2, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(gen_nominal({}, 0, 1), std::invalid_argument);
}

TEST_CASE("inject: every type changes the track and is labeled by id suffix") {
    AirportProfile profile;
    const auto bases = gen_nominal(profile, 7, 31);
    std::size_t bi = 0;
    for (const auto type : kAllInjectionTypes) {
        const auto& base = bases[bi++];
        const Track t = inject(base, {type, 17, profile.field_elev_ft});
        CHECK(t.flight_id != base.flight_id);
        CHECK(t.flight_id.starts_with(base.flight_id));
        bool differs = t.points.size() != base.points.size();
        if (!differs)
            for (std::size_t i = 0; i < t.points.size(); ++i)
                if (t.points[i].t != base.points[i].t || t.points[i].alt_ft != base.points[i].alt_ft ||
                    t.points[i].gs_kts != base.points[i].gs_kts ||
                    t.points[i].lat != base.points[i].lat || t.points[i].lon != base.points[i].lon) {
                    differs = true;
                    break;
                }
        CHECK(differs);
    }
}

TEST_CASE("inject: type-specific guarantees") {
    AirportProfile profile;
    const auto bases = gen_nominal(profile, 4, 77);

    const Track gap = inject(bases[0], {InjectionType::large_time_gap, 3, 2000.0});
    double max_gap = 0;
    for (const auto& [i, g] : time_gaps(gap)) max_gap = std::max(max_gap, g);
    CHECK(max_gap >= 3600.0);

    const Track risky = inject(bases[1], {InjectionType::risky_operation, 3, profile.field_elev_ft});
    double max_alt = 0;
    for (const auto& p : risky.points) max_alt = std::max(max_alt, p.alt_ft.value_or(0));
    CHECK(max_alt == 51000.0);

    const Track miss = inject(bases[2], {InjectionType::missing_altitude, 3, 2000.0});
    const std::size_t run = longest_missing_alt_run(miss);
    CHECK(run >= miss.points.size() / 4);
    CHECK(run <= miss.points.size() / 2 + 1);
    CHECK(miss.points.front().alt_ft.has_value()); // resample endpoints stay usable
    CHECK(miss.points.back().alt_ft.has_value());

    const Track nonstd = inject(bases[3], {InjectionType::non_standard_operation, 3, 2000.0});
    CHECK(nonstd.points.back().t - nonstd.points.front().t < 300.0);
}

TEST_CASE("labels csv round-trip") {
    std::vector<GroundTruthLabel> labels{{"A", "nominal"}, {"B-GT", "ground_track"}};
    std::ostringstream out;
    write_labels_csv(out, labels);
    std::istringstream in(out.str());
    const auto back = read_labels_csv(in);
    REQUIRE(back.size() == 2);
    CHECK(back[1].flight_id == "B-GT");
    CHECK(back[1].injected_type == "ground_track");
}
