#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "trackae/adam.hpp"
#include "trackae/autodiff.hpp"
#include "trackae/features.hpp"
#include "trackae/tensor.hpp"

namespace trackae {

struct ConvLayerSpec {
    std::size_t filters = 0;
    std::size_t kernel = 0;
    int stride = 1;
};

// Stride-2 Conv1D encoder mirrored by a Conv1DTranspose decoder whose last
// layer projects linearly back to the input channels. The defaults give a
// [8, L/8] bottleneck for L = 256: 256 latent elements against 512 inputs.
struct ModelConfig {
    std::size_t input_length = 256;
    std::size_t input_channels = 2;
    std::vector<ConvLayerSpec> encoder{{32, 7, 2}, {16, 7, 2}, {8, 7, 2}};
    std::vector<ConvLayerSpec> decoder{{16, 7, 2}, {32, 7, 2}, {2, 7, 2}};
    double dropout_rate = 0.2;
    std::uint64_t seed = 1;

    // Throws std::invalid_argument when the decoder cannot reproduce the
    // input shape or the bottleneck fails to compress.
    void validate() const;

    // (channels, length) of the bottleneck.
    std::pair<std::size_t, std::size_t> bottleneck_shape() const;
};

struct TrainOptions {
    std::size_t epochs = 50;
    std::size_t batch_size = 32;
    double lr = 1e-3;
    std::uint64_t seed = 1;
};

struct TrainReport {
    std::vector<double> epoch_losses; // mean train-mode loss per epoch
    double wall_time_s = 0.0;
    std::size_t epochs_run = 0;
    double final_train_mae = 0.0; // eval-mode MAE over the training set
};

class Autoencoder {
public:
    // He-style fan-in scaled uniform weights, zero biases; deterministic in
    // config.seed.
    static Autoencoder init(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    std::vector<Parameter>& params() { return params_; }
    const std::vector<Parameter>& params() const { return params_; }

    // Marks the named parameters frozen, everything else trainable. Unknown
    // names throw with the list of valid ones.
    void freeze(const std::vector<std::string>& names);
    // Parameter names of the first encoder convolution (the transfer target).
    std::vector<std::string> first_layer_names() const;

    Tensor encode(const Tensor& x) const;
    Tensor decode(const Tensor& z) const;
    Tensor reconstruct(const Tensor& x) const; // decode(encode(x)), dropout off

    struct ForwardNodes {
        ad::Tape::NodeId out;
        std::vector<ad::Tape::NodeId> param_nodes; // indexed like params()
    };
    ForwardNodes forward(ad::Tape& tape, ad::Tape::NodeId x, ad::DropMode mode,
                         std::uint64_t dropout_key) const;

    NormStats norm_stats;
    std::optional<double> delta;         // calibrated MAE threshold
    std::string threshold_method = "max";

private:
    ModelConfig cfg_;
    std::vector<Parameter> params_;
};

// [B, 2, L] batch from feature series; every series must have length
// expected_l.
Tensor features_to_tensor(const std::vector<FeatureSeries>& batch, std::size_t expected_l);
Tensor feature_to_tensor(const FeatureSeries& s, std::size_t expected_l);

// Adam over seeded shuffled mini-batches, minimizing reconstruction MAE.
// Parameters update in place. Throws numeric_error on a non-finite loss.
TrainReport train(Autoencoder& model, const std::vector<FeatureSeries>& normalized_train,
                  const TrainOptions& opt);

// Eval-mode reconstruction MAE averaged over the set (per-element).
double mean_reconstruction_mae(const Autoencoder& model,
                               const std::vector<FeatureSeries>& normalized);

// Versioned binary checkpoint: text manifest (config, parameter names/shapes,
// norm stats, optional threshold) followed by raw little-endian doubles.
// Round-trips parameters, norm stats and threshold bitwise.
void save_checkpoint(const Autoencoder& model, const std::string& path);
Autoencoder load_checkpoint(const std::string& path);

} // namespace trackae
