#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "trackae/tensor.hpp"

namespace trackae::ad {

enum class Pad { same, valid };
enum class DropMode { train, eval };

// Define-by-run reverse-mode tape over Tensor values. A tape is built per
// forward pass, backward() fills node gradients, then the tape is discarded.
// Single-threaded by design; independent tapes may live on separate threads.
class Tape {
public:
    using NodeId = int;

    NodeId leaf(Tensor value);

    // out[b,o,j] = bias[o] + sum_{c,k} in[b,c,j*stride+k-pad_left] * w[o,c,k]
    // weight [C_out, C_in, K], bias [C_out]. Padding: same -> L_out = ceil(L/s),
    // valid -> L_out = floor((L-K)/s)+1.
    NodeId conv1d(NodeId x, NodeId w, NodeId b, int stride, Pad pad);

    // Adjoint of the matching same-padded conv1d plus bias. weight [C_in, C_out, K],
    // output length L*stride.
    NodeId conv1d_transpose(NodeId x, NodeId w, NodeId b, int stride);

    NodeId relu(NodeId x);

    // Train mode zeroes elements with probability `rate` (mask derived from
    // `key`, pure function of (key, element index)) and scales survivors by
    // 1/(1-rate). Eval mode is the identity.
    NodeId dropout(NodeId x, double rate, DropMode mode, std::uint64_t key);

    // Mean absolute error over all elements; scalar node of shape [1].
    NodeId mae(NodeId a, NodeId b);

    void backward(NodeId loss);

    const Tensor& value(NodeId id) const { return nodes_[id].value; }
    const Tensor& grad(NodeId id) const { return nodes_[id].grad; }

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<NodeId> parents;
        std::function<void(Tape&, Node&)> backprop; // empty for leaves
    };

    NodeId push(Tensor value, std::vector<NodeId> parents,
                std::function<void(Tape&, Node&)> backprop);

    std::vector<Node> nodes_;

    friend struct NodeAccess;
};

// Geometry helpers shared with the oracle tests and the checkpoint validator.
struct ConvGeom {
    std::size_t l_out;
    int pad_left;
};
ConvGeom conv1d_geom(std::size_t l_in, std::size_t k, int stride, Pad pad);
ConvGeom conv1d_transpose_geom(std::size_t l_in, std::size_t k, int stride);

// Standalone forward evaluation (no tape), used by scoring paths.
Tensor conv1d_eval(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Pad pad);
Tensor conv1d_transpose_eval(const Tensor& x, const Tensor& w, const Tensor& b, int stride);
double mae_eval(const Tensor& a, const Tensor& b);

} // namespace trackae::ad
