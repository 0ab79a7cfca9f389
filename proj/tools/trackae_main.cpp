// trackae: flight-track anomaly detection toolkit.
//
// Pipeline: synth -> ingest -> train -> calibrate -> detect -> classify ->
// report, plus transfer learning between airports, SVG track plots and
// numerical self-checks.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "trackae/anomaly.hpp"
#include "trackae/common.hpp"
#include "trackae/csv.hpp"
#include "trackae/diagnostics.hpp"
#include "trackae/features.hpp"
#include "trackae/geo.hpp"
#include "trackae/kernels.hpp"
#include "trackae/model.hpp"
#include "trackae/rng.hpp"
#include "trackae/svg.hpp"
#include "trackae/synthgen.hpp"
#include "trackae/transfer.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace trackae;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

struct RunConfig {
    FilterRuleSet filter;
    ModelConfig model;
    TrainOptions train_opt;
    SplitSpec split{0.8, 1};
    ThresholdPolicy threshold;
    ClassifierConfig classifier;
    AirportProfile profile;
};

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

void load_layers(const json& j, const char* key, std::vector<ConvLayerSpec>& out) {
    if (!j.contains(key)) return;
    out.clear();
    for (const auto& l : j.at(key))
        out.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>(), l.at(2).get<int>()});
}

RunConfig load_run_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty()) return cfg;
    std::ifstream f(path);
    if (!f) throw io_error("cannot open config: " + path);
    json j;
    try {
        j = json::parse(f, nullptr, true, /*ignore_comments=*/true);
    } catch (const json::exception& e) {
        throw io_error(std::string("config parse error: ") + e.what());
    }
    if (j.contains("filter")) {
        const auto& jf = j.at("filter");
        get_if(jf, "exclude_helicopters", cfg.filter.exclude_helicopters);
        get_if(jf, "exclude_military_uas", cfg.filter.exclude_military_uas);
        get_if(jf, "exclude_missed_approach", cfg.filter.exclude_missed_approach);
        get_if(jf, "max_gap_s", cfg.filter.max_gap_s);
        get_if(jf, "min_points", cfg.filter.min_points);
        get_if(jf, "max_alt_ft", cfg.filter.max_alt_ft);
        get_if(jf, "max_gs_kts", cfg.filter.max_gs_kts);
        get_if(jf, "exclude_internal_origin", cfg.filter.exclude_internal_origin);
        get_if(jf, "max_missing_alt_frac", cfg.filter.max_missing_alt_frac);
    }
    if (j.contains("model")) {
        const auto& jm = j.at("model");
        get_if(jm, "input_length", cfg.model.input_length);
        get_if(jm, "input_channels", cfg.model.input_channels);
        load_layers(jm, "encoder", cfg.model.encoder);
        load_layers(jm, "decoder", cfg.model.decoder);
        get_if(jm, "dropout_rate", cfg.model.dropout_rate);
        get_if(jm, "seed", cfg.model.seed);
    }
    if (j.contains("train")) {
        const auto& jt = j.at("train");
        get_if(jt, "epochs", cfg.train_opt.epochs);
        get_if(jt, "batch_size", cfg.train_opt.batch_size);
        get_if(jt, "lr", cfg.train_opt.lr);
        get_if(jt, "seed", cfg.train_opt.seed);
    }
    if (j.contains("split")) {
        const auto& js = j.at("split");
        get_if(js, "train_fraction", cfg.split.train_fraction);
        get_if(js, "seed", cfg.split.seed);
    }
    if (j.contains("threshold")) {
        const auto& jt = j.at("threshold");
        std::string method = "max";
        get_if(jt, "method", method);
        if (method == "max") cfg.threshold.method = ThresholdPolicy::Method::max_train_mae;
        else if (method == "quantile") cfg.threshold.method = ThresholdPolicy::Method::quantile;
        else throw io_error("config: unknown threshold method: " + method);
        get_if(jt, "q", cfg.threshold.q);
    }
    if (j.contains("classifier")) {
        const auto& jc = j.at("classifier");
        get_if(jc, "gap_notable_s", cfg.classifier.gap_notable_s);
        get_if(jc, "missing_alt_frac", cfg.classifier.missing_alt_frac);
        get_if(jc, "ground_agl_ft", cfg.classifier.ground_agl_ft);
        get_if(jc, "spike_climb_fpm", cfg.classifier.spike_climb_fpm);
        get_if(jc, "spike_accel_kts_s", cfg.classifier.spike_accel_kts_s);
        get_if(jc, "risky_extent_nm", cfg.classifier.risky_extent_nm);
        get_if(jc, "risky_alt_agl_ft", cfg.classifier.risky_alt_agl_ft);
        get_if(jc, "nonstd_airborne_s", cfg.classifier.nonstd_airborne_s);
        get_if(jc, "airborne_agl_ft", cfg.classifier.airborne_agl_ft);
    }
    if (j.contains("synth")) {
        const auto& js = j.at("synth");
        get_if(js, "airport_code", cfg.profile.airport_code);
        get_if(js, "field_elev_ft", cfg.profile.field_elev_ft);
        get_if(js, "entry_alt_ft", cfg.profile.entry_alt_ft);
        get_if(js, "entry_alt_jitter_ft", cfg.profile.entry_alt_jitter_ft);
        get_if(js, "entry_speed_kts", cfg.profile.entry_speed_kts);
        get_if(js, "entry_speed_jitter_kts", cfg.profile.entry_speed_jitter_kts);
        get_if(js, "final_speed_kts", cfg.profile.final_speed_kts);
        get_if(js, "final_speed_jitter_kts", cfg.profile.final_speed_jitter_kts);
        get_if(js, "noise_alt_ft", cfg.profile.noise_alt_ft);
        get_if(js, "noise_speed_kts", cfg.profile.noise_speed_kts);
        get_if(js, "sample_interval_s", cfg.profile.sample_interval_s);
        get_if(js, "level_agl_ft", cfg.profile.level_agl_ft);
        get_if(js, "level_length_nm", cfg.profile.level_length_nm);
    }
    return cfg;
}

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw io_error("cannot open for writing: " + p.string());
    return f;
}

std::ifstream open_in(const fs::path& p) {
    std::ifstream f(p);
    if (!f) throw io_error("cannot open: " + p.string());
    return f;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw io_error("cannot create output dir " + p.string() + ": " + ec.message());
}

// flags.csv: flight_id,reasons (';'-separated)
void write_flags_csv(std::ostream& out, const std::vector<std::pair<std::string, std::string>>& flags) {
    out << "flight_id,reasons\n";
    for (const auto& [id, r] : flags) out << id << ',' << r << "\n";
}

std::set<std::string> read_flagged_ids(const fs::path& p) {
    auto f = open_in(p);
    std::string line;
    if (!std::getline(f, line) || std::string(csv::trim(line)) != "flight_id,reasons")
        throw io_error("flags csv: malformed header: " + p.string());
    std::set<std::string> ids;
    while (std::getline(f, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (!cells.empty() && !cells[0].empty()) ids.insert(cells[0]);
    }
    return ids;
}

struct TrackMeta {
    std::string aircraft_type;
    bool is_helicopter = false;
    bool is_military_or_uas = false;
    WeightClass weight_class = WeightClass::unknown;
    bool missed_approach = false;
};

void write_meta_csv(std::ostream& out, const std::map<std::string, TrackMeta>& meta) {
    out << "flight_id,aircraft_type,is_helicopter,is_military_or_uas,weight_class,missed_approach\n";
    for (const auto& [id, m] : meta)
        out << id << ',' << m.aircraft_type << ',' << (m.is_helicopter ? '1' : '0') << ','
            << (m.is_military_or_uas ? '1' : '0') << ',' << to_string(m.weight_class) << ','
            << (m.missed_approach ? '1' : '0') << "\n";
}

std::map<std::string, TrackMeta> read_meta_csv(const fs::path& p) {
    auto f = open_in(p);
    std::string line;
    if (!std::getline(f, line) ||
        std::string(csv::trim(line)) !=
            "flight_id,aircraft_type,is_helicopter,is_military_or_uas,weight_class,missed_approach")
        throw io_error("meta csv: malformed header: " + p.string());
    std::map<std::string, TrackMeta> meta;
    while (std::getline(f, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (cells.size() != 6) throw io_error("meta csv: expected 6 fields: " + line);
        TrackMeta m;
        m.aircraft_type = cells[1];
        m.is_helicopter = cells[2] == "1";
        m.is_military_or_uas = cells[3] == "1";
        m.weight_class = weight_class_from_string(cells[4]);
        m.missed_approach = cells[5] == "1";
        meta[cells[0]] = m;
    }
    return meta;
}

std::vector<fs::path> collect_track_files(const std::vector<std::string>& inputs) {
    std::vector<fs::path> files;
    for (const auto& in : inputs) {
        fs::path p(in);
        if (fs::is_directory(p)) {
            for (const auto& e : fs::directory_iterator(p))
                if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
        } else {
            files.push_back(p);
        }
    }
    // Deterministic per-file batch order.
    std::sort(files.begin(), files.end());
    return files;
}

std::vector<FeatureSeries> load_features(const fs::path& p) {
    auto f = open_in(p);
    return read_features_csv(f);
}

// --- commands -------------------------------------------------------------

int cmd_synth(const RunConfig& cfg, std::uint64_t seed, const fs::path& out_dir, std::size_t n,
              std::size_t inject_per_type) {
    ensure_dir(out_dir);
    AirportProfile profile = cfg.profile;
    const AirportConfig airport = synth_airport_config(profile);

    std::vector<Track> tracks = gen_nominal(profile, n, seed);
    std::vector<GroundTruthLabel> labels;
    for (const auto& t : tracks) labels.push_back({t.flight_id, "nominal"});

    if (inject_per_type > 0) {
        // Fresh bases so injected tracks never duplicate a nominal id.
        const std::vector<Track> bases =
            gen_nominal(profile, inject_per_type * std::size(kAllInjectionTypes),
                        mix_key(seed, hash_str("inject_bases")));
        std::size_t bi = 0;
        for (const auto type : kAllInjectionTypes)
            for (std::size_t i = 0; i < inject_per_type; ++i, ++bi) {
                InjectionSpec spec{type, mix_key(seed, bi), profile.field_elev_ft};
                Track t = inject(bases[bi], spec);
                labels.push_back({t.flight_id, to_string(type)});
                tracks.push_back(std::move(t));
            }
    }

    {
        auto f = open_out(out_dir / "tracks.csv");
        write_tracks_csv(f, tracks);
    }
    {
        auto f = open_out(out_dir / "labels.csv");
        write_labels_csv(f, labels);
    }
    {
        auto f = open_out(out_dir / "airport.cfg");
        write_airport_config(f, airport);
    }
    std::cout << "synth: wrote " << tracks.size() << " tracks (" << n << " nominal) to "
              << out_dir.string() << "\n";
    return kExitOk;
}

int cmd_ingest(const RunConfig& cfg, const std::vector<std::string>& inputs,
               const std::string& airport_path, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const AirportConfig airport = load_airport_config(airport_path);
    const auto files = collect_track_files(inputs);
    if (files.empty()) {
        std::cerr << "ingest: no tracks\n";
        return kExitData;
    }

    std::vector<FeatureSeries> features;
    std::map<std::string, TrackMeta> meta;
    std::vector<std::pair<std::string, std::string>> flags;
    std::vector<RejectRecord> rejects;

    for (const auto& file : files) {
        ParseResult parsed;
        try {
            auto f = open_in(file);
            parsed = parse_tracks(f);
        } catch (const io_error& e) {
            rejects.push_back({"file", file.string(), e.what()});
            continue;
        }
        for (auto& r : parsed.rejects) {
            r.ref = file.filename().string() + ":" + r.ref;
            rejects.push_back(r);
        }
        for (const auto& track : parsed.tracks) {
            const auto segment = clip_terminal(track, airport);
            if (!segment) {
                rejects.push_back({"track", track.flight_id, "does not end in terminal area"});
                continue;
            }
            const auto verdict = label_preliminary_normal(*segment, cfg.filter, airport);
            if (!verdict.normal()) {
                std::string reasons;
                for (const auto r : verdict.reasons)
                    reasons += std::string(reasons.empty() ? "" : ";") + to_string(r);
                flags.emplace_back(track.flight_id, reasons);
            }
            try {
                features.push_back(resample(*segment, cfg.model.input_length, airport));
            } catch (const unresamplable_error& e) {
                rejects.push_back({"track", track.flight_id, e.what()});
                continue;
            } catch (const std::invalid_argument& e) {
                rejects.push_back({"track", track.flight_id, e.what()});
                continue;
            }
            TrackMeta m;
            m.aircraft_type = track.aircraft_type;
            m.is_helicopter = track.is_helicopter;
            m.is_military_or_uas = track.is_military_or_uas;
            m.weight_class = track.weight_class;
            m.missed_approach = track.missed_approach;
            meta[track.flight_id] = m;
        }
    }

    {
        auto f = open_out(out_dir / "features.csv");
        write_features_csv(f, features);
    }
    {
        auto f = open_out(out_dir / "meta.csv");
        write_meta_csv(f, meta);
    }
    {
        auto f = open_out(out_dir / "flags.csv");
        write_flags_csv(f, flags);
    }
    {
        auto f = open_out(out_dir / "rejects.csv");
        f << "scope,ref,reason\n";
        for (const auto& r : rejects) f << r.scope << ',' << r.ref << ',' << r.reason << "\n";
    }
    std::cout << "ingest: " << features.size() << " tracks resampled, " << flags.size()
              << " flagged, " << rejects.size() << " rejects\n";
    if (features.empty()) {
        std::cerr << "ingest: no tracks\n";
        return kExitData;
    }
    return kExitOk;
}

int cmd_train(RunConfig cfg, std::optional<std::uint64_t> seed, const fs::path& features_path,
              const std::string& flags_path, const fs::path& out_dir) {
    ensure_dir(out_dir);
    if (seed) {
        cfg.model.seed = *seed;
        cfg.train_opt.seed = *seed;
        cfg.split.seed = *seed;
    }
    auto all = load_features(features_path);
    std::set<std::string> flagged;
    if (!flags_path.empty()) flagged = read_flagged_ids(flags_path);

    std::vector<FeatureSeries> usable;
    for (auto& s : all)
        if (!flagged.count(s.flight_id)) usable.push_back(std::move(s));
    if (usable.empty()) {
        std::cerr << "train: no unflagged tracks\n";
        return kExitData;
    }

    const Split split = split_train_test(usable, cfg.split);
    Autoencoder model = Autoencoder::init(cfg.model);
    model.norm_stats = fit_norm_stats(split.train);

    std::vector<FeatureSeries> norm_train;
    norm_train.reserve(split.train.size());
    for (const auto& s : split.train) norm_train.push_back(apply_norm(s, model.norm_stats));

    const TrainReport report = train(model, norm_train, cfg.train_opt);
    save_checkpoint(model, (out_dir / "model.ckpt").string());

    {
        auto f = open_out(out_dir / "train_report.csv");
        f << "epoch,loss\n";
        for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
            f << (e + 1) << ',' << csv::fmt(report.epoch_losses[e]) << "\n";
    }
    {
        auto f = open_out(out_dir / "splits.csv");
        f << "flight_id,split\n";
        for (const auto& s : split.train) f << s.flight_id << ",train\n";
        for (const auto& s : split.test) f << s.flight_id << ",test\n";
    }
    std::cout << "train: " << split.train.size() << " train / " << split.test.size()
              << " test, final mae " << report.final_train_mae << " in " << report.wall_time_s
              << " s\n";
    return kExitOk;
}

std::map<std::string, std::string> read_splits(const fs::path& p) {
    auto f = open_in(p);
    std::string line;
    if (!std::getline(f, line) || std::string(csv::trim(line)) != "flight_id,split")
        throw io_error("splits csv: malformed header: " + p.string());
    std::map<std::string, std::string> out;
    while (std::getline(f, line)) {
        if (csv::trim(line).empty()) continue;
        auto cells = csv::split(std::string(csv::trim(line)));
        if (cells.size() == 2) out[cells[0]] = cells[1];
    }
    return out;
}

int cmd_calibrate(const RunConfig& cfg, const fs::path& features_path, const fs::path& splits_path,
                  const std::string& ckpt_path) {
    Autoencoder model = load_checkpoint(ckpt_path);
    const auto all = load_features(features_path);
    const auto splits = read_splits(splits_path);

    std::vector<double> maes;
    for (const auto& s : all) {
        const auto it = splits.find(s.flight_id);
        if (it == splits.end() || it->second != "train") continue;
        maes.push_back(score(model, apply_norm(s, model.norm_stats)));
    }
    if (maes.empty()) {
        std::cerr << "calibrate: no train-split tracks found in features\n";
        return kExitData;
    }
    model.delta = calibrate_threshold(maes, cfg.threshold);
    model.threshold_method = cfg.threshold.method == ThresholdPolicy::Method::max_train_mae
                                 ? "max"
                                 : "quantile:" + csv::fmt(cfg.threshold.q);
    save_checkpoint(model, ckpt_path);
    std::cout << "calibrate: delta = " << *model.delta << " (" << model.threshold_method << ", "
              << maes.size() << " train tracks)\n";
    return kExitOk;
}

int cmd_detect(const fs::path& features_path, const std::string& ckpt_path,
               const std::string& meta_path, const std::string& flags_path,
               const fs::path& out_dir) {
    ensure_dir(out_dir);
    const Autoencoder model = load_checkpoint(ckpt_path);
    if (!model.delta) throw std::invalid_argument("threshold uncalibrated; run calibrate first");
    const auto all = load_features(features_path);
    std::map<std::string, TrackMeta> meta;
    if (!meta_path.empty()) meta = read_meta_csv(meta_path);
    std::set<std::string> flagged;
    if (!flags_path.empty()) flagged = read_flagged_ids(flags_path);

    std::vector<AnomalyReport> reports;
    reports.reserve(all.size());
    for (const auto& s : all) {
        AnomalyReport r;
        r.flight_id = s.flight_id;
        r.mae = score(model, apply_norm(s, model.norm_stats));
        // Filter-flagged tracks are anomalies by labeling, whatever they score.
        r.is_anomaly = detect(r.mae, model.delta) || flagged.count(s.flight_id) > 0;
        if (const auto it = meta.find(s.flight_id); it != meta.end()) {
            r.weight_class = it->second.weight_class;
            r.is_helicopter = it->second.is_helicopter;
        }
        reports.push_back(std::move(r));
    }
    auto f = open_out(out_dir / "report.csv");
    write_report_csv(f, reports);
    const auto anomalies =
        std::count_if(reports.begin(), reports.end(), [](const auto& r) { return r.is_anomaly; });
    std::cout << "detect: " << anomalies << " / " << reports.size() << " anomalous (delta "
              << *model.delta << ")\n";
    return kExitOk;
}

int cmd_classify(const RunConfig& cfg, const fs::path& report_path,
                 const std::vector<std::string>& track_inputs, const std::string& airport_path) {
    const AirportConfig airport = load_airport_config(airport_path);
    std::vector<AnomalyReport> reports;
    {
        auto f = open_in(report_path);
        reports = read_report_csv(f);
    }
    std::map<std::string, Track> tracks;
    for (const auto& file : collect_track_files(track_inputs)) {
        auto f = open_in(file);
        for (auto& t : parse_tracks(f).tracks) tracks[t.flight_id] = std::move(t);
    }
    std::size_t classified = 0;
    for (auto& r : reports) {
        if (!r.is_anomaly) continue;
        const auto it = tracks.find(r.flight_id);
        if (it == tracks.end()) continue;
        const auto segment = clip_terminal(it->second, airport);
        const AnomalyClass cls =
            classify_anomaly(it->second, segment ? *segment : it->second, airport, cfg.classifier);
        r.taxonomy = cls.category;
        ++classified;
    }
    auto f = open_out(report_path);
    write_report_csv(f, reports);
    std::cout << "classify: " << classified << " anomalies classified\n";
    return kExitOk;
}

int cmd_report(const fs::path& report_path, const fs::path& out_dir, double near_band,
               const std::string& ckpt_path) {
    ensure_dir(out_dir);
    std::vector<AnomalyReport> reports;
    {
        auto f = open_in(report_path);
        reports = read_report_csv(f);
    }
    const SummaryStats s = summarize(reports);

    std::ostringstream text;
    text << "tracks: " << s.total << "\n";
    text << "anomalous: " << s.anomalies << " (" << s.pct_anomalous << "%)\n";
    text << "by category:\n";
    for (const auto& [k, v] : s.by_category) text << "  " << k << ": " << v << "\n";
    text << "by is_helicopter:\n";
    for (const auto& [k, v] : s.by_helicopter)
        text << "  " << (k ? "helicopter" : "not_helicopter") << ": " << v << "\n";
    text << "by weight_class:\n";
    for (const auto& [k, v] : s.by_weight_class) text << "  " << k << ": " << v << "\n";

    std::cout << text.str();
    {
        auto f = open_out(out_dir / "summary.txt");
        f << text.str();
    }
    {
        auto f = open_out(out_dir / "breakdown.csv");
        f << "view,key,count\n";
        f << "overall,total," << s.total << "\n";
        f << "overall,anomalous," << s.anomalies << "\n";
        for (const auto& [k, v] : s.by_category) f << "category," << k << ',' << v << "\n";
        for (const auto& [k, v] : s.by_helicopter)
            f << "is_helicopter," << (k ? "1" : "0") << ',' << v << "\n";
        for (const auto& [k, v] : s.by_weight_class) f << "weight_class," << k << ',' << v << "\n";
    }
    if (near_band > 0.0) {
        if (ckpt_path.empty())
            throw std::invalid_argument("--near-threshold requires --checkpoint for the threshold");
        const Autoencoder model = load_checkpoint(ckpt_path);
        if (!model.delta) throw std::invalid_argument("threshold uncalibrated; run calibrate first");
        auto f = open_out(out_dir / "near_threshold.csv");
        f << "flight_id,mae,mae_minus_delta\n";
        for (const auto& r : reports)
            if (std::abs(r.mae - *model.delta) < near_band)
                f << r.flight_id << ',' << csv::fmt(r.mae) << ','
                  << csv::fmt(r.mae - *model.delta) << "\n";
    }
    return kExitOk;
}

int cmd_transfer(const RunConfig& cfg, std::optional<std::uint64_t> seed,
                 const std::string& source_ckpt, const fs::path& features_path,
                 const std::string& flags_path, const fs::path& out_dir, bool compare,
                 double loss_target, const std::vector<std::string>& freeze_names,
                 bool no_freeze) {
    ensure_dir(out_dir);
    auto all = load_features(features_path);
    std::set<std::string> flagged;
    if (!flags_path.empty()) flagged = read_flagged_ids(flags_path);
    std::vector<FeatureSeries> usable;
    for (auto& s : all)
        if (!flagged.count(s.flight_id)) usable.push_back(std::move(s));
    if (usable.empty()) {
        std::cerr << "transfer: no unflagged target tracks\n";
        return kExitData;
    }

    TransferSpec spec;
    spec.source_checkpoint = source_ckpt;
    if (no_freeze)
        spec.freeze_layer_names = std::vector<std::string>{};
    else if (!freeze_names.empty())
        spec.freeze_layer_names = freeze_names;
    spec.epochs = cfg.train_opt.epochs;
    spec.batch_size = cfg.train_opt.batch_size;
    spec.lr = cfg.train_opt.lr;
    spec.seed = seed ? *seed : cfg.train_opt.seed;

    if (compare) {
        if (!(loss_target > 0.0))
            throw std::invalid_argument("transfer --compare requires --loss-target > 0");
        const TransferReport report = compare_transfer(spec, usable, loss_target);
        {
            auto f = open_out(out_dir / "transfer_report.csv");
            write_transfer_csv(f, report);
        }
        std::cout << "transfer: fine-tune reached " << loss_target << " at epoch "
                  << report.finetune_epochs_to_target << ", scratch at epoch "
                  << report.scratch_epochs_to_target << ", speedup "
                  << report.speedup_ratio << "x\n";
        return kExitOk;
    }

    auto [model, report] = fine_tune(spec, usable);
    save_checkpoint(model, (out_dir / "model_target.ckpt").string());
    {
        auto f = open_out(out_dir / "finetune_report.csv");
        f << "epoch,loss\n";
        for (std::size_t e = 0; e < report.epoch_losses.size(); ++e)
            f << (e + 1) << ',' << csv::fmt(report.epoch_losses[e]) << "\n";
    }
    std::cout << "transfer: fine-tuned " << report.epochs_run << " epochs, final mae "
              << report.final_train_mae << "\n";
    return kExitOk;
}

int cmd_plot(const fs::path& features_path, const std::string& ckpt_path,
             const std::string& flight_id, const fs::path& out_dir) {
    ensure_dir(out_dir);
    const Autoencoder model = load_checkpoint(ckpt_path);
    const auto all = load_features(features_path);
    const FeatureSeries* found = nullptr;
    for (const auto& s : all)
        if (s.flight_id == flight_id) {
            found = &s;
            break;
        }
    if (!found) {
        std::cerr << "plot: unknown flight_id: " << flight_id << "\n";
        return kExitData;
    }
    const FeatureSeries norm = apply_norm(*found, model.norm_stats);
    const Tensor x = feature_to_tensor(norm, model.config().input_length);
    const Tensor rec = model.reconstruct(x);
    const double mae = ad::mae_eval(x, rec);

    FeatureSeries rec_series;
    rec_series.flight_id = flight_id;
    rec_series.alt_ft.assign(rec.row(0, 0), rec.row(0, 0) + rec.dim(2));
    rec_series.gs_kts.assign(rec.row(0, 1), rec.row(0, 1) + rec.dim(2));
    const FeatureSeries rec_phys = invert_norm(rec_series, model.norm_stats);

    const fs::path out = out_dir / (flight_id + ".svg");
    write_track_svg(out.string(), flight_id, *found, rec_phys, mae, model.delta);
    std::cout << "plot: wrote " << out.string() << "\n";
    return kExitOk;
}

int cmd_check(std::uint64_t seed, bool corrupt) {
    const auto results = run_self_checks(seed, corrupt);
    bool all_pass = true;
    double worst = 0.0;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << r.name << "  max_err=" << r.max_err
                  << "  limit=" << r.limit << "\n";
        all_pass = all_pass && r.pass;
        worst = std::max(worst, r.max_err);
    }
    if (!all_pass) {
        std::cerr << "check: failed, max observed error " << worst << "\n";
        return kExitNumeric;
    }
    std::cout << "check: all passed (kernels: " << kern::active().name << ")\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"flight-track anomaly detection autoencoder toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "override all seeds");
    app.add_option("--out", out_dir, "output directory");

    // synth
    auto* synth = app.add_subcommand("synth", "generate synthetic tracks with labeled anomalies");
    std::size_t synth_n = 100, synth_inject = 0;
    synth->add_option("--n", synth_n, "nominal track count");
    synth->add_option("--inject-per-type", synth_inject, "injected anomalies per type");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "parse, clip, filter and resample track csv files");
    std::vector<std::string> ingest_inputs;
    std::string airport_path;
    ingest->add_option("--tracks", ingest_inputs, "track csv files or directories")->required();
    ingest->add_option("--airport", airport_path, "airport config file")->required();

    // train
    auto* train_cmd = app.add_subcommand("train", "train the autoencoder on unflagged tracks");
    std::string features_path, flags_path;
    train_cmd->add_option("--features", features_path, "features csv")->required();
    train_cmd->add_option("--flags", flags_path, "flags csv (flagged tracks excluded)");

    // calibrate
    auto* calib = app.add_subcommand("calibrate", "set the detection threshold from train MAEs");
    std::string calib_features, calib_splits, calib_ckpt;
    calib->add_option("--features", calib_features, "features csv")->required();
    calib->add_option("--splits", calib_splits, "splits csv from train")->required();
    calib->add_option("--checkpoint", calib_ckpt, "model checkpoint (updated in place)")->required();

    // detect
    auto* detect_cmd = app.add_subcommand("detect", "score tracks and write the anomaly report");
    std::string det_features, det_ckpt, det_meta, det_flags;
    detect_cmd->add_option("--features", det_features, "features csv")->required();
    detect_cmd->add_option("--checkpoint", det_ckpt, "calibrated model checkpoint")->required();
    detect_cmd->add_option("--meta", det_meta, "meta csv for weight class / helicopter columns");
    detect_cmd->add_option("--flags", det_flags, "flags csv; flagged tracks are reported anomalous");

    // classify
    auto* classify_cmd = app.add_subcommand("classify", "assign taxonomy classes to anomalies");
    std::string cls_report, cls_airport;
    std::vector<std::string> cls_tracks;
    classify_cmd->add_option("--report", cls_report, "report csv (updated in place)")->required();
    classify_cmd->add_option("--tracks", cls_tracks, "track csv files or directories")->required();
    classify_cmd->add_option("--airport", cls_airport, "airport config file")->required();

    // report
    auto* report_cmd = app.add_subcommand("report", "summarize an anomaly report");
    std::string rep_report, rep_ckpt;
    double rep_band = 0.0;
    report_cmd->add_option("--report", rep_report, "report csv")->required();
    report_cmd->add_option("--near-threshold", rep_band, "list tracks with |mae-delta| < band");
    report_cmd->add_option("--checkpoint", rep_ckpt, "checkpoint (for the threshold value)");

    // transfer
    auto* transfer_cmd = app.add_subcommand("transfer", "fine-tune a source model on a target airport");
    std::string tr_source, tr_features, tr_flags;
    bool tr_compare = false;
    double tr_loss_target = 0.0;
    std::vector<std::string> tr_freeze;
    transfer_cmd->add_option("--source-checkpoint", tr_source, "source model")->required();
    transfer_cmd->add_option("--features", tr_features, "target airport features csv")->required();
    transfer_cmd->add_option("--flags", tr_flags, "target flags csv");
    transfer_cmd->add_flag("--compare", tr_compare, "also run the from-scratch arm");
    transfer_cmd->add_option("--loss-target", tr_loss_target, "epochs-to-target loss level");
    transfer_cmd->add_option("--freeze", tr_freeze, "parameter names to freeze (default: first layer)");
    bool tr_no_freeze = false;
    transfer_cmd->add_flag("--no-freeze", tr_no_freeze, "freeze nothing");

    // plot
    auto* plot_cmd = app.add_subcommand("plot", "svg of original vs reconstructed channels");
    std::string plot_features, plot_ckpt, plot_id;
    plot_cmd->add_option("--features", plot_features, "features csv")->required();
    plot_cmd->add_option("--checkpoint", plot_ckpt, "model checkpoint")->required();
    plot_cmd->add_option("--flight-id", plot_id, "flight to plot")->required();

    // check
    auto* check_cmd = app.add_subcommand("check", "numerical self-checks");
    bool check_corrupt = false;
    check_cmd->add_flag("--corrupt-backward", check_corrupt,
                        "perturb one analytic gradient (negative control)");

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_run_config(config_path);
        const fs::path out(out_dir);
        if (*synth) return cmd_synth(cfg, seed.value_or(1), out, synth_n, synth_inject);
        if (*ingest) return cmd_ingest(cfg, ingest_inputs, airport_path, out);
        if (*train_cmd) return cmd_train(cfg, seed, features_path, flags_path, out);
        if (*calib) return cmd_calibrate(cfg, calib_features, calib_splits, calib_ckpt);
        if (*detect_cmd) return cmd_detect(det_features, det_ckpt, det_meta, det_flags, out);
        if (*classify_cmd) return cmd_classify(cfg, cls_report, cls_tracks, cls_airport);
        if (*report_cmd) return cmd_report(rep_report, out, rep_band, rep_ckpt);
        if (*transfer_cmd)
            return cmd_transfer(cfg, seed, tr_source, tr_features, tr_flags, out, tr_compare,
                                tr_loss_target, tr_freeze, tr_no_freeze);
        if (*plot_cmd) return cmd_plot(plot_features, plot_ckpt, plot_id, out);
        if (*check_cmd) return cmd_check(seed.value_or(1), check_corrupt);
    } catch (const numeric_error& e) {
        std::cerr << "numerical abort: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const unresamplable_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const io_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
