#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "trackae/features.hpp"
#include "trackae/geo.hpp"
#include "trackae/model.hpp"

namespace trackae {

struct ThresholdPolicy {
    enum class Method { max_train_mae, quantile };
    Method method = Method::max_train_mae;
    double q = 1.0; // order-statistic level for quantile, in (0,1]
};

// max method: delta = max of the MAEs. quantile(q): 1-based order statistic
// at index ceil(q*n) of the sorted MAEs.
double calibrate_threshold(const std::vector<double>& train_maes, const ThresholdPolicy& policy);

// Scores one normalized series: mae(X, reconstruct(X)), eval mode.
double score(const Autoencoder& model, const FeatureSeries& normalized);

// Strictly greater than the calibrated threshold.
bool detect(double score_mae, std::optional<double> delta);

enum class AnomalyCategory {
    non_notable,
    ground_track,
    point_altitude,
    point_speed,
    missing_altitude,
    non_standard_operation,
    risky_operation,
    large_time_gap,
    unclassified,
};

const char* to_string(AnomalyCategory c);
std::optional<AnomalyCategory> anomaly_category_from_string(const std::string& s);

struct AnomalyClass {
    AnomalyCategory category = AnomalyCategory::unclassified;
    std::string detail; // reason text for non_notable, empty otherwise
};

// Rule constants, calibrated to separate the synthetic injectors cleanly;
// all are plain anecdotes in production data and should be retuned there.
struct ClassifierConfig {
    double gap_notable_s = 300.0;
    double missing_alt_frac = 0.25;    // of segment points
    double ground_agl_ft = 200.0;      // max altitude above field
    double spike_climb_fpm = 10000.0;  // |climb rate| for point altitude spikes
    double spike_accel_kts_s = 50.0;   // |acceleration| for point speed spikes
    double risky_extent_nm = 5.0;
    double risky_alt_agl_ft = 20000.0;
    double nonstd_airborne_s = 300.0;
    double airborne_agl_ft = 50.0; // altitude above field that counts as airborne
};

// First matching rule in fixed priority order wins; total over flagged tracks.
AnomalyClass classify_anomaly(const Track& track, const Track& segment,
                              const AirportConfig& airport, const ClassifierConfig& cfg = {});

struct AnomalyReport {
    std::string flight_id;
    double mae = 0.0;
    bool is_anomaly = false;
    std::optional<AnomalyCategory> taxonomy; // present only when is_anomaly
    WeightClass weight_class = WeightClass::unknown;
    bool is_helicopter = false;
};

struct SummaryStats {
    std::size_t total = 0;
    std::size_t anomalies = 0;
    double pct_anomalous = 0.0;
    std::map<std::string, std::size_t> by_category;     // over anomalies
    std::map<bool, std::size_t> by_helicopter;          // over anomalies
    std::map<std::string, std::size_t> by_weight_class; // over anomalies
};

SummaryStats summarize(const std::vector<AnomalyReport>& reports);

// AnomalyReport CSV: flight_id,mae,is_anomaly,category,weight_class,is_helicopter
void write_report_csv(std::ostream& out, const std::vector<AnomalyReport>& reports);
std::vector<AnomalyReport> read_report_csv(std::istream& in);

} // namespace trackae
