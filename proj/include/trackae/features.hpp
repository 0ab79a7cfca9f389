#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "trackae/geo.hpp"

namespace trackae {

// Preliminary-normal filter rules. A track failing any enabled rule is
// flagged and excluded from training.
struct FilterRuleSet {
    bool exclude_helicopters = true;
    bool exclude_military_uas = true;
    bool exclude_missed_approach = true;
    double max_gap_s = 12.0;
    std::size_t min_points = 30;
    double max_alt_ft = 60000.0;
    double max_gs_kts = 700.0;
    bool exclude_internal_origin = true;
    // Data completeness: a track with a long missing-altitude run cannot
    // inform a 2-channel model and is itself an anomaly class.
    double max_missing_alt_frac = 0.25;
};

enum class FilterReason {
    helicopter,
    military_uas,
    missed_approach,
    large_gap,
    too_short,
    alt_bound,
    speed_bound,
    internal_origin,
    missing_data,
};

const char* to_string(FilterReason r);

struct FilterVerdict {
    std::vector<FilterReason> reasons; // complete set of fired rules
    bool normal() const { return reasons.empty(); }
};

// Tracks first seen well inside the terminal area never completed an arrival
// from the boundary: internal-airport departures and mid-air fragments alike.
// The filter flags both. The classifier's non-notable "internal origin" class
// additionally requires a near-ground start (a real departure); airborne
// fragments fall through to the non-standard-operation rule.
inline constexpr double kInternalOriginRadiusFrac = 0.875;
inline constexpr double kInternalOriginAglFt = 1000.0;
bool starts_inside_terminal(const Track& track, const AirportConfig& airport);
bool internal_origin(const Track& track, const AirportConfig& airport);

// Longest run of consecutive points with missing altitude.
std::size_t longest_missing_alt_run(const Track& track);

FilterVerdict label_preliminary_normal(const Track& track, const FilterRuleSet& rules,
                                       const AirportConfig& airport);

// Raised when a channel has no present values to interpolate from.
struct unresamplable_error : std::runtime_error {
    explicit unresamplable_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Fixed-length 2-channel feature input, channel order [altitude, speed].
struct FeatureSeries {
    std::string flight_id;
    std::vector<double> alt_ft;
    std::vector<double> gs_kts;

    std::size_t length() const { return alt_ft.size(); }
};

// Resamples a clipped segment onto `l` points equally spaced in distance to
// the nearest threshold, from the first point's distance down to the last's.
// Interior missing values are linearly imputed over time; boundary-missing
// values take the nearest present value.
FeatureSeries resample(const Track& segment, std::size_t l, const AirportConfig& airport);

struct NormStats {
    std::array<double, 2> mean{0.0, 0.0}; // [altitude, speed]
    std::array<double, 2> stdev{1.0, 1.0};
};

inline constexpr double kStdFloor = 1e-6;

// Per-channel mean and population std pooled over all samples and positions.
NormStats fit_norm_stats(const std::vector<FeatureSeries>& train);

FeatureSeries apply_norm(const FeatureSeries& s, const NormStats& stats);
FeatureSeries invert_norm(const FeatureSeries& s, const NormStats& stats);

struct SplitSpec {
    double train_fraction = 0.8; // in (0,1)
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<FeatureSeries> train;
    std::vector<FeatureSeries> test;
};

// Deterministic partition keyed on (flight_id, seed); |train| = round(f*n).
Split split_train_test(const std::vector<FeatureSeries>& dataset, const SplitSpec& spec);

// FeatureSeries CSV: header flight_id,idx,alt,gs with length() rows per flight.
void write_features_csv(std::ostream& out, const std::vector<FeatureSeries>& series);
std::vector<FeatureSeries> read_features_csv(std::istream& in);

} // namespace trackae
