#include "trackae/model.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "trackae/common.hpp"
#include "trackae/kernels.hpp"
#include "trackae/rng.hpp"

namespace trackae {
namespace {

using json = nlohmann::json;

struct ShapeFlow {
    std::size_t channels;
    std::size_t length;
};

ShapeFlow encoder_flow(const ModelConfig& cfg) {
    ShapeFlow s{cfg.input_channels, cfg.input_length};
    for (const auto& l : cfg.encoder) {
        s.length = ad::conv1d_geom(s.length, l.kernel, l.stride, ad::Pad::same).l_out;
        s.channels = l.filters;
    }
    return s;
}

std::string hexd(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

double unhexd(const std::string& s) {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (!end || *end != '\0') throw io_error("checkpoint: bad double literal: " + s);
    return v;
}

} // namespace

void ModelConfig::validate() const {
    auto fail = [](const std::string& msg) { throw std::invalid_argument("invalid config: " + msg); };
    if (input_length < 2) fail("input_length must be >= 2");
    if (input_channels < 1) fail("input_channels must be >= 1");
    if (encoder.empty() || decoder.empty()) fail("encoder and decoder must be non-empty");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must be in [0,1)");
    for (const auto& l : encoder)
        if (l.filters == 0 || l.kernel == 0 || l.stride < 1) fail("bad encoder layer spec");
    for (const auto& l : decoder)
        if (l.filters == 0 || l.kernel == 0 || l.stride < 1) fail("bad decoder layer spec");
    if (decoder.back().filters != input_channels)
        fail("last decoder layer has " + std::to_string(decoder.back().filters) +
             " filters, input has " + std::to_string(input_channels) + " channels");

    const ShapeFlow z = encoder_flow(*this);
    ShapeFlow s = z;
    for (const auto& l : decoder) {
        s.length = ad::conv1d_transpose_geom(s.length, l.kernel, l.stride).l_out;
        s.channels = l.filters;
    }
    if (s.channels != input_channels || s.length != input_length)
        fail("decoder output shape [" + std::to_string(s.channels) + "," + std::to_string(s.length) +
             "] != input shape [" + std::to_string(input_channels) + "," +
             std::to_string(input_length) + "]");
    const std::size_t z_elems = z.channels * z.length;
    const std::size_t x_elems = input_channels * input_length;
    if (z_elems >= x_elems)
        fail("bottleneck has " + std::to_string(z_elems) + " elements, not a compression of " +
             std::to_string(x_elems));
}

std::pair<std::size_t, std::size_t> ModelConfig::bottleneck_shape() const {
    const ShapeFlow z = encoder_flow(*this);
    return {z.channels, z.length};
}

Autoencoder Autoencoder::init(const ModelConfig& cfg) {
    cfg.validate();
    Autoencoder m;
    m.cfg_ = cfg;
    auto add_layer = [&](const std::string& name, std::vector<std::size_t> w_shape,
                         std::size_t bias_size, std::size_t fan_in) {
        Parameter w{name + ".weight", Tensor(std::move(w_shape)), false};
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        CounterRng rng(mix_key(cfg.seed, hash_str(w.name)));
        for (auto& v : w.value.data) v = rng.uniform(-bound, bound);
        m.params_.push_back(std::move(w));
        m.params_.push_back(Parameter{name + ".bias", Tensor({bias_size}), false});
    };
    std::size_t c = cfg.input_channels;
    for (std::size_t i = 0; i < cfg.encoder.size(); ++i) {
        const auto& l = cfg.encoder[i];
        // conv weight [C_out, C_in, K]
        add_layer("enc" + std::to_string(i), {l.filters, c, l.kernel}, l.filters, c * l.kernel);
        c = l.filters;
    }
    for (std::size_t i = 0; i < cfg.decoder.size(); ++i) {
        const auto& l = cfg.decoder[i];
        // transpose weight [C_in, C_out, K]
        add_layer("dec" + std::to_string(i), {c, l.filters, l.kernel}, l.filters, c * l.kernel);
        c = l.filters;
    }
    return m;
}

std::vector<std::string> Autoencoder::first_layer_names() const {
    return {"enc0.weight", "enc0.bias"};
}

void Autoencoder::freeze(const std::vector<std::string>& names) {
    for (const auto& n : names) {
        bool found = false;
        for (auto& p : params_)
            if (p.name == n) {
                p.frozen = true;
                found = true;
            }
        if (!found) {
            std::string valid;
            for (const auto& p : params_) valid += (valid.empty() ? "" : ", ") + p.name;
            throw std::invalid_argument("freeze: unknown parameter '" + n + "'; valid: " + valid);
        }
    }
}

Autoencoder::ForwardNodes Autoencoder::forward(ad::Tape& tape, ad::Tape::NodeId x,
                                               ad::DropMode mode, std::uint64_t dropout_key) const {
    ForwardNodes fn;
    fn.param_nodes.reserve(params_.size());
    for (const auto& p : params_) fn.param_nodes.push_back(tape.leaf(p.value));

    auto pnode = [&](std::size_t idx) { return fn.param_nodes[idx]; };
    std::size_t pi = 0;
    ad::Tape::NodeId h = x;
    for (const auto& l : cfg_.encoder) {
        h = tape.conv1d(h, pnode(pi), pnode(pi + 1), l.stride, ad::Pad::same);
        pi += 2;
        h = tape.relu(h);
    }
    for (std::size_t i = 0; i < cfg_.decoder.size(); ++i) {
        const auto& l = cfg_.decoder[i];
        if (i + 1 == cfg_.decoder.size() && cfg_.dropout_rate > 0.0)
            // Dropout feeds the final linear projection only: the eval-mode
            // network is then the exact expectation of the train-mode one, so
            // scores calibrated in eval mode stay tight.
            h = tape.dropout(h, cfg_.dropout_rate, mode, mix_key(dropout_key, hash_str("drop")));
        h = tape.conv1d_transpose(h, pnode(pi), pnode(pi + 1), l.stride);
        pi += 2;
        if (i + 1 < cfg_.decoder.size()) h = tape.relu(h); // final projection stays linear
    }
    fn.out = h;
    return fn;
}

Tensor Autoencoder::encode(const Tensor& x) const {
    if (x.rank() != 3 || x.dim(1) != cfg_.input_channels || x.dim(2) != cfg_.input_length)
        throw std::invalid_argument("encode: input must be [B," + std::to_string(cfg_.input_channels) +
                                    "," + std::to_string(cfg_.input_length) + "], got " + x.shape_str());
    Tensor h = x;
    std::size_t pi = 0;
    for (const auto& l : cfg_.encoder) {
        h = ad::conv1d_eval(h, params_[pi].value, params_[pi + 1].value, l.stride, ad::Pad::same);
        pi += 2;
        Tensor r(h.shape);
        kern::active().relu_fwd(h.data.data(), r.data.data(), h.numel());
        h = std::move(r);
    }
    return h;
}

Tensor Autoencoder::decode(const Tensor& z) const {
    const auto [zc, zl] = cfg_.bottleneck_shape();
    if (z.rank() != 3 || z.dim(1) != zc || z.dim(2) != zl)
        throw std::invalid_argument("decode: bottleneck must be [B," + std::to_string(zc) + "," +
                                    std::to_string(zl) + "], got " + z.shape_str());
    Tensor h = z;
    std::size_t pi = 2 * cfg_.encoder.size();
    for (std::size_t i = 0; i < cfg_.decoder.size(); ++i) {
        const auto& l = cfg_.decoder[i];
        h = ad::conv1d_transpose_eval(h, params_[pi].value, params_[pi + 1].value, l.stride);
        pi += 2;
        if (i + 1 < cfg_.decoder.size()) {
            Tensor r(h.shape);
            kern::active().relu_fwd(h.data.data(), r.data.data(), h.numel());
            h = std::move(r);
        }
    }
    return h;
}

Tensor Autoencoder::reconstruct(const Tensor& x) const { return decode(encode(x)); }

Tensor features_to_tensor(const std::vector<FeatureSeries>& batch, std::size_t expected_l) {
    if (batch.empty()) throw std::invalid_argument("features_to_tensor: empty batch");
    Tensor t({batch.size(), 2, expected_l});
    for (std::size_t b = 0; b < batch.size(); ++b) {
        const auto& s = batch[b];
        if (s.length() != expected_l)
            throw std::invalid_argument("feature series '" + s.flight_id + "' has length " +
                                        std::to_string(s.length()) + ", model expects " +
                                        std::to_string(expected_l));
        std::copy(s.alt_ft.begin(), s.alt_ft.end(), t.row(b, 0));
        std::copy(s.gs_kts.begin(), s.gs_kts.end(), t.row(b, 1));
    }
    return t;
}

Tensor feature_to_tensor(const FeatureSeries& s, std::size_t expected_l) {
    return features_to_tensor({s}, expected_l);
}

TrainReport train(Autoencoder& model, const std::vector<FeatureSeries>& normalized_train,
                  const TrainOptions& opt) {
    if (normalized_train.empty()) throw std::invalid_argument("train: empty training set");
    if (opt.batch_size == 0) throw std::invalid_argument("train: batch_size must be >= 1");
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t n = normalized_train.size();
    const std::size_t L = model.config().input_length;

    AdamState state;
    state.lr = opt.lr;
    state.reset(model.params());

    TrainReport report;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::vector<Tensor> grads(model.params().size());

    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
        CounterRng shuffle_rng(mix_key(mix_key(opt.seed, hash_str("shuffle")), epoch));
        for (std::size_t i = n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += opt.batch_size, ++batch_index) {
            const std::size_t bsz = std::min(opt.batch_size, n - start);
            std::vector<FeatureSeries> batch;
            batch.reserve(bsz);
            for (std::size_t i = 0; i < bsz; ++i) batch.push_back(normalized_train[order[start + i]]);

            ad::Tape tape;
            const auto x = tape.leaf(features_to_tensor(batch, L));
            const std::uint64_t drop_key =
                mix_key(mix_key(mix_key(opt.seed, hash_str("dropout")), epoch), batch_index);
            const auto fwd = model.forward(tape, x, ad::DropMode::train, drop_key);
            const auto loss = tape.mae(fwd.out, x);
            const double loss_v = tape.value(loss).data[0];
            if (!std::isfinite(loss_v))
                throw numeric_error("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                    ", batch " + std::to_string(batch_index) +
                                    " (learning rate too high?)");
            tape.backward(loss);
            for (std::size_t p = 0; p < grads.size(); ++p) grads[p] = tape.grad(fwd.param_nodes[p]);
            adam_step(model.params(), grads, state);
            loss_sum += loss_v * static_cast<double>(bsz);
        }
        report.epoch_losses.push_back(loss_sum / static_cast<double>(n));
    }
    report.epochs_run = opt.epochs;
    report.final_train_mae = mean_reconstruction_mae(model, normalized_train);
    report.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

double mean_reconstruction_mae(const Autoencoder& model,
                               const std::vector<FeatureSeries>& normalized) {
    if (normalized.empty()) throw std::invalid_argument("mean_reconstruction_mae: empty set");
    const std::size_t L = model.config().input_length;
    double sum = 0.0;
    constexpr std::size_t kChunk = 64;
    for (std::size_t start = 0; start < normalized.size(); start += kChunk) {
        const std::size_t bsz = std::min(kChunk, normalized.size() - start);
        std::vector<FeatureSeries> chunk(normalized.begin() + static_cast<std::ptrdiff_t>(start),
                                         normalized.begin() + static_cast<std::ptrdiff_t>(start + bsz));
        const Tensor x = features_to_tensor(chunk, L);
        const Tensor r = model.reconstruct(x);
        sum += ad::mae_eval(x, r) * static_cast<double>(bsz);
    }
    return sum / static_cast<double>(normalized.size());
}

namespace {

json config_to_json(const ModelConfig& cfg) {
    json enc = json::array(), dec = json::array();
    for (const auto& l : cfg.encoder) enc.push_back({l.filters, l.kernel, l.stride});
    for (const auto& l : cfg.decoder) dec.push_back({l.filters, l.kernel, l.stride});
    return json{{"input_length", cfg.input_length},
                {"input_channels", cfg.input_channels},
                {"encoder", enc},
                {"decoder", dec},
                {"dropout_rate", hexd(cfg.dropout_rate)},
                {"seed", cfg.seed}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig cfg;
    cfg.input_length = j.at("input_length").get<std::size_t>();
    cfg.input_channels = j.at("input_channels").get<std::size_t>();
    cfg.encoder.clear();
    cfg.decoder.clear();
    for (const auto& l : j.at("encoder"))
        cfg.encoder.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>(), l.at(2).get<int>()});
    for (const auto& l : j.at("decoder"))
        cfg.decoder.push_back({l.at(0).get<std::size_t>(), l.at(1).get<std::size_t>(), l.at(2).get<int>()});
    cfg.dropout_rate = unhexd(j.at("dropout_rate").get<std::string>());
    cfg.seed = j.at("seed").get<std::uint64_t>();
    return cfg;
}

constexpr char kMagic[8] = {'T', 'A', 'E', 'C', 'K', 'P', 'T', '1'};

} // namespace

void save_checkpoint(const Autoencoder& model, const std::string& path) {
    json manifest;
    manifest["config"] = config_to_json(model.config());
    json params = json::array();
    for (const auto& p : model.params())
        params.push_back({{"name", p.name}, {"shape", p.value.shape}});
    manifest["params"] = params;
    manifest["norm_stats"] = {
        {"mean", {hexd(model.norm_stats.mean[0]), hexd(model.norm_stats.mean[1])}},
        {"std", {hexd(model.norm_stats.stdev[0]), hexd(model.norm_stats.stdev[1])}}};
    if (model.delta) manifest["delta"] = hexd(*model.delta);
    manifest["threshold_method"] = model.threshold_method;

    const std::string text = manifest.dump();
    std::ofstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open checkpoint for writing: " + path);
    f.write(kMagic, sizeof(kMagic));
    const std::uint64_t mlen = text.size();
    f.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    f.write(text.data(), static_cast<std::streamsize>(text.size()));
    std::uint64_t total = 0;
    for (const auto& p : model.params()) total += p.value.numel();
    f.write(reinterpret_cast<const char*>(&total), sizeof(total));
    for (const auto& p : model.params())
        f.write(reinterpret_cast<const char*>(p.value.data.data()),
                static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
    if (!f) throw io_error("checkpoint write failed: " + path);
}

Autoencoder load_checkpoint(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw io_error("cannot open checkpoint: " + path);
    char magic[8];
    f.read(magic, sizeof(magic));
    if (!f || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw io_error("checkpoint: bad magic or unsupported version: " + path);
    std::uint64_t mlen = 0;
    f.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!f || mlen > (1ull << 30)) throw io_error("checkpoint: corrupt manifest length");
    std::string text(mlen, '\0');
    f.read(text.data(), static_cast<std::streamsize>(mlen));
    if (!f) throw io_error("checkpoint: truncated manifest");

    json manifest;
    try {
        manifest = json::parse(text);
    } catch (const json::exception& e) {
        throw io_error(std::string("checkpoint: manifest parse error: ") + e.what());
    }

    Autoencoder model = Autoencoder::init(config_from_json(manifest.at("config")));
    const auto& jparams = manifest.at("params");
    if (jparams.size() != model.params().size())
        throw io_error("checkpoint: parameter count mismatch");

    std::uint64_t total = 0;
    f.read(reinterpret_cast<char*>(&total), sizeof(total));
    std::uint64_t expect = 0;
    for (const auto& p : model.params()) expect += p.value.numel();
    if (!f || total != expect) throw io_error("checkpoint: payload size mismatch");

    for (std::size_t i = 0; i < model.params().size(); ++i) {
        auto& p = model.params()[i];
        const auto& jp = jparams[i];
        if (jp.at("name").get<std::string>() != p.name ||
            jp.at("shape").get<std::vector<std::size_t>>() != p.value.shape)
            throw io_error("checkpoint: parameter manifest mismatch at " + p.name);
        f.read(reinterpret_cast<char*>(p.value.data.data()),
               static_cast<std::streamsize>(p.value.numel() * sizeof(double)));
        if (!f) throw io_error("checkpoint: truncated parameter payload at " + p.name);
    }

    const auto& ns = manifest.at("norm_stats");
    model.norm_stats.mean[0] = unhexd(ns.at("mean").at(0).get<std::string>());
    model.norm_stats.mean[1] = unhexd(ns.at("mean").at(1).get<std::string>());
    model.norm_stats.stdev[0] = unhexd(ns.at("std").at(0).get<std::string>());
    model.norm_stats.stdev[1] = unhexd(ns.at("std").at(1).get<std::string>());
    if (manifest.contains("delta")) model.delta = unhexd(manifest.at("delta").get<std::string>());
    if (manifest.contains("threshold_method"))
        model.threshold_method = manifest.at("threshold_method").get<std::string>();
    return model;
}

} // namespace trackae
