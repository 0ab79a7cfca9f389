#include "trackae/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "trackae/common.hpp"
#include "trackae/csv.hpp"
#include "trackae/rng.hpp"

namespace trackae {
namespace {

constexpr double kDeg2Rad = 3.14159265358979323846 / 180.0;
constexpr double kStartDistNm = 39.8; // just inside the 40 NM boundary
constexpr double kEndDistNm = 0.05;
constexpr double kBaseEpoch = 1.7e9;

// Step-down descent: glideslope final, then alternating level segments and
// step descents up to the entry altitude, the way terminal arrivals get
// cleared down through altitude restrictions.
struct DescentShape {
    double entry_speed;
    double final_speed;
    std::vector<std::pair<double, double>> breakpoints; // (distance, AGL), ascending d

    void build(double entry_agl, double level_agl, double level_len, double gs_grad,
               double step_height, double step_grad, CounterRng& rng) {
        breakpoints.clear();
        breakpoints.emplace_back(0.0, 0.0);
        double d = level_agl / gs_grad;
        double agl = level_agl;
        breakpoints.emplace_back(d, agl);
        while (agl + step_height < entry_agl - 500.0 && d < kStartDistNm - 6.0) {
            const double len = level_len + rng.uniform(-1.0, 1.0);
            d += len;
            breakpoints.emplace_back(d, agl); // level segment
            const double rise = step_height + rng.uniform(-200.0, 200.0);
            d += rise / step_grad;
            agl += rise;
            breakpoints.emplace_back(d, agl); // step descent (in arrival order)
        }
        breakpoints.emplace_back(kStartDistNm, entry_agl);
    }

    double agl_at(double d) const {
        if (d <= 0.0) return 0.0;
        for (std::size_t i = 1; i < breakpoints.size(); ++i) {
            const auto& [d1, a1] = breakpoints[i];
            if (d <= d1) {
                const auto& [d0, a0] = breakpoints[i - 1];
                const double w = d1 > d0 ? (d - d0) / (d1 - d0) : 0.0;
                return a0 + w * (a1 - a0);
            }
        }
        return breakpoints.back().second;
    }

    double speed_at(double d) const {
        const double mid = final_speed + 0.4 * (entry_speed - final_speed);
        if (d <= 4.0) return final_speed;
        if (d <= 12.0) return final_speed + (mid - final_speed) * (d - 4.0) / 8.0;
        return mid + (entry_speed - mid) * (d - 12.0) / (kStartDistNm - 12.0);
    }
};

} // namespace

AirportConfig synth_airport_config(const AirportProfile& profile) {
    AirportConfig cfg;
    cfg.airport_code = profile.airport_code;
    cfg.terminal_radius_nm = 40.0;
    const std::uint64_t h = hash_str(profile.airport_code);
    RunwayThreshold th;
    th.runway_id = "09";
    th.lat = 33.0 + static_cast<double>(h % 500) / 100.0;       // [33, 38)
    th.lon = -118.0 + static_cast<double>((h >> 16) % 900) / 100.0; // [-118, -109)
    th.elev_ft = profile.field_elev_ft;
    cfg.thresholds.push_back(th);
    return cfg;
}

std::vector<Track> gen_nominal(const AirportProfile& profile, std::size_t n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_nominal: n must be >= 1");
    if (!(profile.entry_alt_ft > profile.field_elev_ft))
        throw std::invalid_argument("gen_nominal: entry_alt must exceed field elevation");
    if (!(profile.entry_speed_kts > profile.final_speed_kts && profile.final_speed_kts > 0.0))
        throw std::invalid_argument("gen_nominal: need entry_speed > final_speed > 0");

    const AirportConfig airport = synth_airport_config(profile);
    const auto& th = airport.thresholds.front();
    const double lon_per_nm = 1.0 / (60.0 * std::cos(th.lat * kDeg2Rad));

    std::vector<Track> tracks;
    tracks.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CounterRng rng(mix_key(seed, i));
        DescentShape shape;
        const double entry_agl =
            profile.entry_alt_ft +
            rng.uniform(-profile.entry_alt_jitter_ft, profile.entry_alt_jitter_ft) -
            profile.field_elev_ft;
        const double level_agl =
            profile.level_agl_ft +
            rng.uniform(-profile.level_agl_jitter_ft, profile.level_agl_jitter_ft);
        if (entry_agl <= level_agl + 1000.0)
            throw std::invalid_argument("gen_nominal: entry altitude too close to level segment");
        shape.entry_speed = profile.entry_speed_kts +
                            rng.uniform(-profile.entry_speed_jitter_kts, profile.entry_speed_jitter_kts);
        shape.final_speed = profile.final_speed_kts +
                            rng.uniform(-profile.final_speed_jitter_kts, profile.final_speed_jitter_kts);
        shape.build(entry_agl, level_agl, profile.level_length_nm, profile.glideslope_ft_per_nm,
                    profile.step_height_ft, profile.step_grad_ft_per_nm, rng);

        Track tr;
        char id[32];
        std::snprintf(id, sizeof(id), "SYN%05zu", i);
        tr.flight_id = profile.airport_code + "-" + id;
        static const char* kTypes[] = {"A320", "B738", "E175", "CRJ9", "A321"};
        tr.aircraft_type = kTypes[rng.next_below(5)];
        tr.weight_class = rng.next_double() < 0.15 ? WeightClass::small : WeightClass::large;

        double t = kBaseEpoch + static_cast<double>(i) * 4000.0;
        double d = kStartDistNm;
        const double lo = std::max(1.0, profile.sample_interval_s - 1.0);
        const double hi = std::clamp(profile.sample_interval_s, lo, 4.0);
        // Fused surveillance noise is strongly correlated point to point; an
        // AR(1) process keeps the stated marginal sigma without injecting
        // spike-like sample-to-sample jumps.
        constexpr double kNoiseRho = 0.8;
        const double innov = std::sqrt(1.0 - kNoiseRho * kNoiseRho);
        double noise_alt = rng.normal();
        double noise_gs = rng.normal();
        for (;;) {
            TrackPoint p;
            p.t = t;
            p.lat = th.lat;
            p.lon = th.lon + d * lon_per_nm;
            p.alt_ft = profile.field_elev_ft + shape.agl_at(d) + noise_alt * profile.noise_alt_ft;
            p.gs_kts = std::max(0.0, shape.speed_at(d) + noise_gs * profile.noise_speed_kts);
            p.course_deg = 270.0;
            tr.points.push_back(p);
            if (d <= kEndDistNm) break;
            const double v = shape.speed_at(d);
            const double dt = rng.uniform(lo, hi);
            t += dt;
            d = std::max(kEndDistNm, d - v * dt / 3600.0);
            noise_alt = kNoiseRho * noise_alt + innov * rng.normal();
            noise_gs = kNoiseRho * noise_gs + innov * rng.normal();
        }
        tracks.push_back(std::move(tr));
    }
    return tracks;
}

const char* to_string(InjectionType t) {
    switch (t) {
        case InjectionType::ground_track: return "ground_track";
        case InjectionType::point_altitude: return "point_altitude";
        case InjectionType::point_speed: return "point_speed";
        case InjectionType::missing_altitude: return "missing_altitude";
        case InjectionType::non_standard_operation: return "non_standard_operation";
        case InjectionType::risky_operation: return "risky_operation";
        case InjectionType::large_time_gap: return "large_time_gap";
    }
    return "?";
}

namespace {

const char* suffix_of(InjectionType t) {
    switch (t) {
        case InjectionType::ground_track: return "GT";
        case InjectionType::point_altitude: return "PA";
        case InjectionType::point_speed: return "PS";
        case InjectionType::missing_altitude: return "MA";
        case InjectionType::non_standard_operation: return "NS";
        case InjectionType::risky_operation: return "RO";
        case InjectionType::large_time_gap: return "TG";
    }
    return "XX";
}

} // namespace

Track inject(const Track& base, const InjectionSpec& spec) {
    if (base.points.size() < 8) throw std::invalid_argument("inject: base track too short");
    Track out = base;
    out.flight_id = base.flight_id + "-" + suffix_of(spec.type);
    CounterRng rng(mix_key(spec.seed, hash_str(out.flight_id)));
    const std::size_t n = out.points.size();

    switch (spec.type) {
        case InjectionType::ground_track: {
            // Unassembled surface fragment: on the field the whole time.
            for (auto& p : out.points) {
                p.alt_ft = spec.field_elev_ft + rng.uniform(0.0, 100.0);
                p.gs_kts = rng.uniform(5.0, 25.0);
            }
            break;
        }
        case InjectionType::point_altitude: {
            const std::size_t i = 2 + rng.next_below(n - 6);
            const double mag = rng.uniform(5000.0, 15000.0);
            const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
            for (std::size_t k = i; k < i + 2; ++k)
                if (out.points[k].alt_ft) *out.points[k].alt_ft += sign * mag;
            break;
        }
        case InjectionType::point_speed: {
            const std::size_t i = 2 + rng.next_below(n - 6);
            const double mag = rng.uniform(250.0, 400.0);
            const double sign = rng.next_double() < 0.5 ? -1.0 : 1.0;
            for (std::size_t k = i; k < i + 2; ++k)
                if (out.points[k].gs_kts) *out.points[k].gs_kts += sign * mag;
            break;
        }
        case InjectionType::missing_altitude: {
            const double frac = rng.uniform(0.28, 0.5);
            const auto w = static_cast<std::size_t>(std::lround(frac * static_cast<double>(n)));
            const std::size_t max_start = n - w - 1;
            const std::size_t start = 1 + rng.next_below(max_start);
            for (std::size_t k = start; k < start + w; ++k) out.points[k].alt_ft.reset();
            break;
        }
        case InjectionType::non_standard_operation: {
            // Keep only the final few minutes: a fragment with no cruise
            // portion that lands almost immediately.
            const double keep_s = rng.uniform(180.0, 260.0);
            const double t_end = out.points.back().t;
            std::vector<TrackPoint> kept;
            for (const auto& p : out.points)
                if (p.t >= t_end - keep_s) kept.push_back(p);
            out.points = std::move(kept);
            break;
        }
        case InjectionType::risky_operation: {
            // Tight orbit near the field climbing to the service ceiling.
            const double lat0 = out.points.front().lat;
            const double lon_per_nm = 1.0 / (60.0 * std::cos(lat0 * kDeg2Rad));
            // Base tracks fly along +lon from the threshold; recover it.
            const double thr_lon = out.points.back().lon - kEndDistNm * lon_per_nm;
            const double center_d = 2.5, orbit_r = 1.2;
            const double t0 = out.points.front().t;
            const double dur = out.points.back().t - t0;
            const double alt_start = spec.field_elev_ft + 5000.0;
            const double alt_peak = 51000.0;
            std::size_t apex = 0;
            double apex_w = -1.0;
            for (std::size_t k = 0; k < n; ++k) {
                auto& p = out.points[k];
                const double phase = 2.0 * 3.14159265358979323846 *
                                     static_cast<double>(k) / 40.0;
                p.lat = lat0 + orbit_r * std::sin(phase) / 60.0;
                p.lon = thr_lon + (center_d + orbit_r * std::cos(phase)) * lon_per_nm;
                const double u = (p.t - t0) / dur;
                const double w = u < 0.5 ? u / 0.5 : (1.0 - u) / 0.5;
                p.alt_ft = alt_start + (alt_peak - alt_start) * w;
                p.gs_kts = 160.0 + rng.normal() * 5.0;
                if (w > apex_w) {
                    apex_w = w;
                    apex = k;
                }
            }
            out.points[apex].alt_ft = alt_peak;
            break;
        }
        case InjectionType::large_time_gap: {
            const std::size_t cut = n * 2 / 5 + rng.next_below(n / 5);
            for (std::size_t k = cut; k < n; ++k) out.points[k].t += 3600.0;
            break;
        }
    }
    return out;
}

void write_labels_csv(std::ostream& out, const std::vector<GroundTruthLabel>& labels) {
    out << "flight_id,injected_type\n";
    for (const auto& l : labels) out << l.flight_id << ',' << l.injected_type << "\n";
}

std::vector<GroundTruthLabel> read_labels_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || std::string(csv::trim(line)) != "flight_id,injected_type")
        throw io_error("labels csv: malformed header");
    std::vector<GroundTruthLabel> out;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (cells.size() != 2) throw io_error("labels csv: expected 2 fields: " + line);
        out.push_back({cells[0], cells[1]});
    }
    return out;
}

} // namespace trackae
