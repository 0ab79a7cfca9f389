#include "trackae/transfer.hpp"

#include <ostream>

#include "trackae/csv.hpp"

namespace trackae {
namespace {

bool same_architecture(const ModelConfig& a, const ModelConfig& b) {
    auto layers_eq = [](const std::vector<ConvLayerSpec>& x, const std::vector<ConvLayerSpec>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i].filters != y[i].filters || x[i].kernel != y[i].kernel ||
                x[i].stride != y[i].stride)
                return false;
        return true;
    };
    return a.input_length == b.input_length && a.input_channels == b.input_channels &&
           layers_eq(a.encoder, b.encoder) && layers_eq(a.decoder, b.decoder);
}

std::size_t epochs_to_target(const TrainReport& r, double loss_target, std::size_t budget) {
    for (std::size_t e = 0; e < r.epoch_losses.size(); ++e)
        if (r.epoch_losses[e] <= loss_target) return e + 1;
    return budget + 1;
}

std::vector<FeatureSeries> normalize_all(const std::vector<FeatureSeries>& raw,
                                         const NormStats& stats) {
    std::vector<FeatureSeries> out;
    out.reserve(raw.size());
    for (const auto& s : raw) out.push_back(apply_norm(s, stats));
    return out;
}

} // namespace

std::pair<Autoencoder, TrainReport> fine_tune(const TransferSpec& spec,
                                              const std::vector<FeatureSeries>& raw_target_train) {
    if (raw_target_train.empty()) throw std::invalid_argument("fine_tune: empty target set");
    Autoencoder model = load_checkpoint(spec.source_checkpoint);
    if (spec.expected_config && !same_architecture(model.config(), *spec.expected_config))
        throw std::invalid_argument("fine_tune: checkpoint architecture does not match expected config");

    model.norm_stats = fit_norm_stats(raw_target_train);
    model.delta.reset(); // source threshold is meaningless for the target airport
    model.freeze(spec.freeze_layer_names ? *spec.freeze_layer_names : model.first_layer_names());

    TrainOptions opt{spec.epochs, spec.batch_size, spec.lr, spec.seed};
    TrainReport report = train(model, normalize_all(raw_target_train, model.norm_stats), opt);
    return {std::move(model), std::move(report)};
}

TransferReport compare_transfer(const TransferSpec& spec,
                                const std::vector<FeatureSeries>& raw_target_train,
                                double loss_target) {
    TransferReport out;
    out.loss_target = loss_target;

    auto [tuned, tune_report] = fine_tune(spec, raw_target_train);
    out.fine_tune = tune_report;

    // Scratch arm: same architecture, data, normalization and hyperparameters.
    ModelConfig cfg = tuned.config();
    cfg.seed = spec.seed;
    Autoencoder scratch = Autoencoder::init(cfg);
    scratch.norm_stats = fit_norm_stats(raw_target_train);
    TrainOptions opt{spec.epochs, spec.batch_size, spec.lr, spec.seed};
    out.from_scratch = train(scratch, normalize_all(raw_target_train, scratch.norm_stats), opt);

    out.finetune_epochs_to_target = epochs_to_target(out.fine_tune, loss_target, spec.epochs);
    out.scratch_epochs_to_target = epochs_to_target(*out.from_scratch, loss_target, spec.epochs);
    out.speedup_ratio = static_cast<double>(out.scratch_epochs_to_target) /
                        static_cast<double>(out.finetune_epochs_to_target);
    return out;
}

void write_transfer_csv(std::ostream& out, const TransferReport& report) {
    out << "epoch,finetune_loss,scratch_loss\n";
    const std::size_t n = std::max(report.fine_tune.epoch_losses.size(),
                                   report.from_scratch ? report.from_scratch->epoch_losses.size() : 0);
    for (std::size_t e = 0; e < n; ++e) {
        out << (e + 1) << ',';
        if (e < report.fine_tune.epoch_losses.size()) out << csv::fmt(report.fine_tune.epoch_losses[e]);
        out << ',';
        if (report.from_scratch && e < report.from_scratch->epoch_losses.size())
            out << csv::fmt(report.from_scratch->epoch_losses[e]);
        out << "\n";
    }
}

} // namespace trackae
