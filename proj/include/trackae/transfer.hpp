#pragma once

#include <optional>
#include <string>
#include <vector>

#include "trackae/model.hpp"

namespace trackae {

struct TransferSpec {
    std::string source_checkpoint;
    // nullopt: freeze the first encoder convolution. Empty list: freeze
    // nothing (control experiments).
    std::optional<std::vector<std::string>> freeze_layer_names;
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
    // When set, the checkpoint architecture must match.
    std::optional<ModelConfig> expected_config;
};

struct TransferReport {
    TrainReport fine_tune;
    std::optional<TrainReport> from_scratch;
    std::size_t finetune_epochs_to_target = 0; // budget+1 when never reached
    std::size_t scratch_epochs_to_target = 0;
    double speedup_ratio = 1.0;
    double loss_target = 0.0;
};

// Loads the source model, recomputes norm stats from the raw target features
// (field elevation and speeds shift between airports; reusing source stats
// would conflate normalization shift with transfer benefit), freezes the
// requested layers and trains the rest.
std::pair<Autoencoder, TrainReport> fine_tune(const TransferSpec& spec,
                                              const std::vector<FeatureSeries>& raw_target_train);

// Runs the fine-tune arm and a from-scratch arm on identical data and
// hyperparameters, and measures epochs until the mean epoch loss first drops
// to loss_target (budget+1 when never reached within spec.epochs).
TransferReport compare_transfer(const TransferSpec& spec,
                                const std::vector<FeatureSeries>& raw_target_train,
                                double loss_target);

// epoch,finetune_loss,scratch_loss side by side (empty cell when an arm ran
// fewer epochs).
void write_transfer_csv(std::ostream& out, const TransferReport& report);

} // namespace trackae
