#include "trackae/features.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "trackae/common.hpp"
#include "trackae/csv.hpp"
#include "trackae/rng.hpp"

namespace trackae {

const char* to_string(FilterReason r) {
    switch (r) {
        case FilterReason::helicopter: return "helicopter";
        case FilterReason::military_uas: return "military_uas";
        case FilterReason::missed_approach: return "missed_approach";
        case FilterReason::large_gap: return "large_gap";
        case FilterReason::too_short: return "too_short";
        case FilterReason::alt_bound: return "alt_bound";
        case FilterReason::speed_bound: return "speed_bound";
        case FilterReason::internal_origin: return "internal_origin";
        case FilterReason::missing_data: return "missing_data";
    }
    return "?";
}

std::size_t longest_missing_alt_run(const Track& track) {
    std::size_t best = 0, run = 0;
    for (const auto& p : track.points) {
        run = p.alt_ft ? 0 : run + 1;
        best = std::max(best, run);
    }
    return best;
}

bool starts_inside_terminal(const Track& track, const AirportConfig& airport) {
    if (track.points.empty()) return false;
    const auto& first = track.points.front();
    return airport.distance_nm(LatLon{first.lat, first.lon}) <=
           kInternalOriginRadiusFrac * airport.terminal_radius_nm;
}

bool internal_origin(const Track& track, const AirportConfig& airport) {
    if (!starts_inside_terminal(track, airport)) return false;
    const auto& first = track.points.front();
    const LatLon p{first.lat, first.lon};
    for (const auto& pt : track.points) {
        if (!pt.alt_ft) continue;
        return *pt.alt_ft - airport.nearest_elev_ft(p) < kInternalOriginAglFt;
    }
    return false;
}

FilterVerdict label_preliminary_normal(const Track& track, const FilterRuleSet& rules,
                                       const AirportConfig& airport) {
    FilterVerdict v;
    if (rules.exclude_helicopters && track.is_helicopter)
        v.reasons.push_back(FilterReason::helicopter);
    if (rules.exclude_military_uas && track.is_military_or_uas)
        v.reasons.push_back(FilterReason::military_uas);
    if (rules.exclude_missed_approach && track.missed_approach)
        v.reasons.push_back(FilterReason::missed_approach);

    bool large_gap = false;
    for (const auto& [i, gap] : time_gaps(track))
        if (gap > rules.max_gap_s) {
            large_gap = true;
            break;
        }
    if (large_gap) v.reasons.push_back(FilterReason::large_gap);

    if (track.points.size() < rules.min_points) v.reasons.push_back(FilterReason::too_short);

    bool alt_bad = false, gs_bad = false;
    for (const auto& p : track.points) {
        // Sanity bounds are two-sided: negative altitude below any field or a
        // negative ground speed is as impossible as an excessive one.
        if (p.alt_ft && (*p.alt_ft > rules.max_alt_ft || *p.alt_ft < -1000.0)) alt_bad = true;
        if (p.gs_kts && (*p.gs_kts > rules.max_gs_kts || *p.gs_kts < 0.0)) gs_bad = true;
    }
    if (alt_bad) v.reasons.push_back(FilterReason::alt_bound);
    if (gs_bad) v.reasons.push_back(FilterReason::speed_bound);

    if (rules.exclude_internal_origin && starts_inside_terminal(track, airport))
        v.reasons.push_back(FilterReason::internal_origin);

    if (!track.points.empty() &&
        static_cast<double>(longest_missing_alt_run(track)) >
            rules.max_missing_alt_frac * static_cast<double>(track.points.size()))
        v.reasons.push_back(FilterReason::missing_data);
    return v;
}

namespace {

// Missing-value imputation: interior gaps are linear in time, boundary gaps
// take the nearest present value.
std::vector<double> impute_channel(const Track& segment, const char* channel,
                                   const std::optional<double> TrackPoint::*field) {
    const auto& pts = segment.points;
    std::vector<double> out(pts.size());
    std::vector<std::size_t> present;
    for (std::size_t i = 0; i < pts.size(); ++i)
        if (pts[i].*field) present.push_back(i);
    if (present.empty())
        throw unresamplable_error(std::string("resample: channel '") + channel +
                                  "' has no present values for flight " + segment.flight_id);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (pts[i].*field) {
            out[i] = *(pts[i].*field);
            continue;
        }
        auto it = std::lower_bound(present.begin(), present.end(), i);
        if (it == present.begin()) {
            out[i] = *(pts[present.front()].*field);
        } else if (it == present.end()) {
            out[i] = *(pts[present.back()].*field);
        } else {
            const std::size_t hi = *it, lo = *(it - 1);
            const double t0 = pts[lo].t, t1 = pts[hi].t;
            const double v0 = *(pts[lo].*field), v1 = *(pts[hi].*field);
            const double w = t1 > t0 ? (pts[i].t - t0) / (t1 - t0) : 0.0;
            out[i] = v0 + w * (v1 - v0);
        }
    }
    return out;
}

// First-crossing interpolation of (d[i], v[i]) at query distance q, sweeping a
// persistent cursor. Distances are expected to be mostly decreasing.
double interp_at(const std::vector<double>& d, const std::vector<double>& v, double q,
                 std::size_t& cursor) {
    const std::size_t n = d.size();
    while (cursor + 1 < n && d[cursor + 1] > q) ++cursor;
    if (cursor + 1 >= n) return v.back();
    const double d0 = d[cursor], d1 = d[cursor + 1];
    if (d0 == d1) return v[cursor];
    double w = (d0 - q) / (d0 - d1);
    w = std::clamp(w, 0.0, 1.0);
    return v[cursor] + w * (v[cursor + 1] - v[cursor]);
}

} // namespace

FeatureSeries resample(const Track& segment, std::size_t l, const AirportConfig& airport) {
    if (l < 2) throw std::invalid_argument("resample: L must be >= 2, got " + std::to_string(l));
    if (segment.points.size() < 2)
        throw std::invalid_argument("resample: segment needs >= 2 points, flight " + segment.flight_id);

    const auto alt = impute_channel(segment, "altitude", &TrackPoint::alt_ft);
    const auto gs = impute_channel(segment, "speed", &TrackPoint::gs_kts);

    std::vector<double> dist(segment.points.size());
    for (std::size_t i = 0; i < segment.points.size(); ++i)
        dist[i] = airport.distance_nm(LatLon{segment.points[i].lat, segment.points[i].lon});

    FeatureSeries fs;
    fs.flight_id = segment.flight_id;
    fs.alt_ft.resize(l);
    fs.gs_kts.resize(l);
    const double d_first = dist.front(), d_last = dist.back();
    std::size_t cur_a = 0, cur_g = 0;
    for (std::size_t k = 0; k < l; ++k) {
        const double q = d_first + (d_last - d_first) * static_cast<double>(k) /
                                       static_cast<double>(l - 1);
        fs.alt_ft[k] = interp_at(dist, alt, q, cur_a);
        fs.gs_kts[k] = interp_at(dist, gs, q, cur_g);
    }
    return fs;
}

NormStats fit_norm_stats(const std::vector<FeatureSeries>& train) {
    if (train.empty()) throw std::invalid_argument("fit_norm_stats: empty training set");
    NormStats st;
    double sum[2] = {0, 0}, sumsq[2] = {0, 0};
    std::size_t n = 0;
    for (const auto& s : train) {
        for (double v : s.alt_ft) {
            sum[0] += v;
            sumsq[0] += v * v;
        }
        for (double v : s.gs_kts) {
            sum[1] += v;
            sumsq[1] += v * v;
        }
        n += s.length();
    }
    if (n == 0) throw std::invalid_argument("fit_norm_stats: zero-length series");
    for (int c = 0; c < 2; ++c) {
        st.mean[c] = sum[c] / static_cast<double>(n);
        const double var = std::max(0.0, sumsq[c] / static_cast<double>(n) - st.mean[c] * st.mean[c]);
        st.stdev[c] = std::max(std::sqrt(var), kStdFloor);
    }
    return st;
}

FeatureSeries apply_norm(const FeatureSeries& s, const NormStats& st) {
    FeatureSeries out = s;
    for (auto& v : out.alt_ft) v = (v - st.mean[0]) / st.stdev[0];
    for (auto& v : out.gs_kts) v = (v - st.mean[1]) / st.stdev[1];
    return out;
}

FeatureSeries invert_norm(const FeatureSeries& s, const NormStats& st) {
    FeatureSeries out = s;
    for (auto& v : out.alt_ft) v = v * st.stdev[0] + st.mean[0];
    for (auto& v : out.gs_kts) v = v * st.stdev[1] + st.mean[1];
    return out;
}

Split split_train_test(const std::vector<FeatureSeries>& dataset, const SplitSpec& spec) {
    if (dataset.empty()) throw std::invalid_argument("split_train_test: empty dataset");
    if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0))
        throw std::invalid_argument("split_train_test: train_fraction must be in (0,1)");

    // Rank by a seeded hash of the flight id; membership depends only on the
    // id set, never on dataset order.
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> h(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        h[i] = mix_key(hash_str(dataset[i].flight_id), spec.seed);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (h[a] != h[b]) return h[a] < h[b];
        return dataset[a].flight_id < dataset[b].flight_id;
    });

    const auto n_train = static_cast<std::size_t>(
        std::llround(spec.train_fraction * static_cast<double>(dataset.size())));
    Split split;
    for (std::size_t r = 0; r < order.size(); ++r)
        (r < n_train ? split.train : split.test).push_back(dataset[order[r]]);
    return split;
}

void write_features_csv(std::ostream& out, const std::vector<FeatureSeries>& series) {
    out << "flight_id,idx,alt,gs\n";
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.length(); ++i)
            out << s.flight_id << ',' << i << ',' << csv::fmt(s.alt_ft[i]) << ','
                << csv::fmt(s.gs_kts[i]) << "\n";
}

std::vector<FeatureSeries> read_features_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || std::string(csv::trim(line)) != "flight_id,idx,alt,gs")
        throw io_error("features csv: malformed header");
    std::vector<FeatureSeries> out;
    while (std::getline(in, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (cells.size() != 4) throw io_error("features csv: expected 4 fields: " + line);
        const auto alt = csv::parse_double(cells[2]);
        const auto gs = csv::parse_double(cells[3]);
        if (!alt || !gs) throw io_error("features csv: bad numeric cell: " + line);
        if (out.empty() || out.back().flight_id != cells[0]) {
            out.emplace_back();
            out.back().flight_id = cells[0];
        }
        out.back().alt_ft.push_back(*alt);
        out.back().gs_kts.push_back(*gs);
    }
    return out;
}

} // namespace trackae
