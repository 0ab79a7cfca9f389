#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trackae/geo.hpp"

namespace trackae {

// Synthetic nominal arrival family: straight-in approach from just inside
// 40 NM, stepped down through level altitude segments onto a 3-degree final,
// speed bleeding from entry to final approach speed. Constants are plausible
// defaults, not measured values.
struct AirportProfile {
    std::string airport_code = "KSRC";
    double field_elev_ft = 2000.0;
    double entry_alt_ft = 11000.0; // MSL at the 40 NM boundary
    double entry_alt_jitter_ft = 1500.0;
    double entry_speed_kts = 250.0;
    double entry_speed_jitter_kts = 20.0;
    double final_speed_kts = 135.0;
    double final_speed_jitter_kts = 10.0;
    double noise_alt_ft = 150.0;
    double noise_speed_kts = 4.0;
    double sample_interval_s = 4.0; // per-step draw in [interval-1, interval], clamped to [1,4]
    double level_agl_ft = 3000.0;   // lowest level segment, where the glideslope captures
    double level_agl_jitter_ft = 300.0;
    double level_length_nm = 4.0;
    double glideslope_ft_per_nm = 318.0;
    double step_height_ft = 2000.0;     // altitude restriction spacing
    double step_grad_ft_per_nm = 500.0; // descent gradient between restrictions
};

// Single-threshold airport matching the profile, terminal radius 40 NM.
AirportConfig synth_airport_config(const AirportProfile& profile);

// n nominal arrivals, deterministic in (profile, n, seed). With zero noise the
// altitude channel is nonincreasing along each track; every point lies inside
// the terminal radius and the last point is within 1 NM of the threshold.
std::vector<Track> gen_nominal(const AirportProfile& profile, std::size_t n, std::uint64_t seed);

enum class InjectionType {
    ground_track,
    point_altitude,
    point_speed,
    missing_altitude,
    non_standard_operation,
    risky_operation,
    large_time_gap,
};

const char* to_string(InjectionType t);
inline constexpr InjectionType kAllInjectionTypes[] = {
    InjectionType::ground_track,        InjectionType::point_altitude,
    InjectionType::point_speed,         InjectionType::missing_altitude,
    InjectionType::non_standard_operation, InjectionType::risky_operation,
    InjectionType::large_time_gap,
};

struct InjectionSpec {
    InjectionType type = InjectionType::point_altitude;
    std::uint64_t seed = 0;
    double field_elev_ft = 0.0; // reference elevation for ground/risky profiles
};

// Applies the labeled deformation to a nominal base track. The result carries
// a new flight_id ("<base>-<code>") and differs from the base in at least one
// point.
Track inject(const Track& base, const InjectionSpec& spec);

struct GroundTruthLabel {
    std::string flight_id;
    std::string injected_type;
};

void write_labels_csv(std::ostream& out, const std::vector<GroundTruthLabel>& labels);
std::vector<GroundTruthLabel> read_labels_csv(std::istream& in);

} // namespace trackae
