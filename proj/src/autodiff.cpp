#include "trackae/autodiff.hpp"

#include <algorithm>
#include <stdexcept>

#include "trackae/kernels.hpp"
#include "trackae/rng.hpp"

namespace trackae::ad {
namespace {

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

// Half-open j interval such that 0 <= j*s + q < l_in and 0 <= j < l_out.
struct JRange {
    long j0, j1;
};

JRange valid_j(long q, long s, long l_in, long l_out) {
    long j0 = q >= 0 ? 0 : (-q + s - 1) / s;
    const long jmax = l_in - 1 - q;
    long j1 = jmax < 0 ? 0 : jmax / s + 1;
    j0 = std::max(0L, j0);
    j1 = std::min(j1, l_out);
    return {j0, std::max(j0, j1)};
}

// out[b,o,j] += sum_{c,k} in[b,c,j*s+k-pad] * w[o,c,k].
// Also computes the transpose op's input gradient when fed its [C_in,C_out,K]
// weight: the leading weight dim is always this computation's output channel.
void conv_accum(const Tensor& in, const Tensor& w, int stride, int pad_left, Tensor& out) {
    const auto& k = kern::active();
    const long l_in = static_cast<long>(in.dim(2));
    const long l_out = static_cast<long>(out.dim(2));
    const std::size_t c_out = w.dim(0), c_in = w.dim(1), ksz = w.dim(2);
    for (std::size_t b = 0; b < in.dim(0); ++b)
        for (std::size_t o = 0; o < c_out; ++o) {
            double* out_row = out.row(b, o);
            for (std::size_t c = 0; c < c_in; ++c) {
                const double* in_row = in.row(b, c);
                const double* wk = w.data.data() + (o * c_in + c) * ksz;
                for (std::size_t kk = 0; kk < ksz; ++kk) {
                    const long q = static_cast<long>(kk) - pad_left;
                    const auto [j0, j1] = valid_j(q, stride, l_in, l_out);
                    if (j1 > j0)
                        k.axpy_gather(wk[kk], in_row + j0 * stride + q, stride, out_row + j0,
                                      static_cast<std::size_t>(j1 - j0));
                }
            }
        }
}

// out[b,co,i] += sum_{ci,k} x[b,ci,j] * w[ci,co,k] with i = j*s+k-pad.
// Shared by conv1d_transpose forward and conv1d input gradients.
void convT_accum(const Tensor& x, const Tensor& w, int stride, int pad_left, Tensor& out) {
    const auto& k = kern::active();
    const long l_in = static_cast<long>(x.dim(2));
    const long l_out = static_cast<long>(out.dim(2));
    const std::size_t c_in = w.dim(0), c_out = w.dim(1), ksz = w.dim(2);
    for (std::size_t b = 0; b < x.dim(0); ++b)
        for (std::size_t ci = 0; ci < c_in; ++ci) {
            const double* x_row = x.row(b, ci);
            for (std::size_t co = 0; co < c_out; ++co) {
                double* out_row = out.row(b, co);
                const double* wk = w.data.data() + (ci * c_out + co) * ksz;
                for (std::size_t kk = 0; kk < ksz; ++kk) {
                    const long q = static_cast<long>(kk) - pad_left;
                    const auto [j0, j1] = valid_j(q, stride, l_out, l_in);
                    if (j1 > j0)
                        k.axpy_scatter(wk[kk], x_row + j0, out_row + j0 * stride + q, stride,
                                       static_cast<std::size_t>(j1 - j0));
                }
            }
        }
}

// g[p,q,k] += sum_{b,j} a[b,p,j] * bb[b,q,j*s+k-pad]; weight gradients for
// both convolution flavors.
void corr_weight(const Tensor& a, const Tensor& bb, int stride, int pad_left, Tensor& g) {
    const auto& k = kern::active();
    const long l_a = static_cast<long>(a.dim(2));
    const long l_b = static_cast<long>(bb.dim(2));
    const std::size_t p_n = g.dim(0), q_n = g.dim(1), ksz = g.dim(2);
    for (std::size_t b = 0; b < a.dim(0); ++b)
        for (std::size_t p = 0; p < p_n; ++p) {
            const double* a_row = a.row(b, p);
            for (std::size_t q_c = 0; q_c < q_n; ++q_c) {
                const double* b_row = bb.row(b, q_c);
                double* gk = g.data.data() + (p * q_n + q_c) * ksz;
                for (std::size_t kk = 0; kk < ksz; ++kk) {
                    const long q = static_cast<long>(kk) - pad_left;
                    const auto [j0, j1] = valid_j(q, stride, l_b, l_a);
                    if (j1 > j0)
                        gk[kk] += k.dot_gather(a_row + j0, b_row + j0 * stride + q, stride,
                                               static_cast<std::size_t>(j1 - j0));
                }
            }
        }
}

void fill_bias(Tensor& out, const Tensor& bias) {
    for (std::size_t b = 0; b < out.dim(0); ++b)
        for (std::size_t c = 0; c < out.dim(1); ++c) {
            double* row = out.row(b, c);
            std::fill(row, row + out.dim(2), bias.data[c]);
        }
}

void accum_bias_grad(const Tensor& up, Tensor& gb) {
    const auto& k = kern::active();
    for (std::size_t b = 0; b < up.dim(0); ++b)
        for (std::size_t c = 0; c < up.dim(1); ++c)
            gb.data[c] += k.sum(up.row(b, c), up.dim(2));
}

void check_conv_args(const Tensor& x, const Tensor& w, const Tensor& b, int stride,
                     const char* op, std::size_t w_cin_dim) {
    require(x.rank() == 3, std::string(op) + ": input must be rank 3 [B,C,L], got " + x.shape_str());
    require(w.rank() == 3, std::string(op) + ": weight must be rank 3, got " + w.shape_str());
    require(b.rank() == 1, std::string(op) + ": bias must be rank 1, got " + b.shape_str());
    require(stride >= 1, std::string(op) + ": stride must be >= 1");
    require(w.dim(w_cin_dim) == x.dim(1),
            std::string(op) + ": weight input-channel dim " + std::to_string(w.dim(w_cin_dim)) +
                " != input channels " + std::to_string(x.dim(1)));
    require(b.dim(0) == w.dim(1 - w_cin_dim),
            std::string(op) + ": bias size " + std::to_string(b.dim(0)) +
                " != output channels " + std::to_string(w.dim(1 - w_cin_dim)));
}

} // namespace

ConvGeom conv1d_geom(std::size_t l_in, std::size_t k, int stride, Pad pad) {
    const long s = stride;
    if (pad == Pad::valid) {
        require(k <= l_in, "conv1d: kernel " + std::to_string(k) + " exceeds input length " +
                               std::to_string(l_in) + " with valid padding");
        return {(l_in - k) / s + 1, 0};
    }
    const std::size_t l_out = (l_in + s - 1) / s;
    const long total = std::max<long>(static_cast<long>((l_out - 1) * s + k) - static_cast<long>(l_in), 0);
    return {l_out, static_cast<int>(total / 2)};
}

ConvGeom conv1d_transpose_geom(std::size_t l_in, std::size_t k, int stride) {
    const long total = std::max<long>(static_cast<long>(k) - stride, 0);
    return {l_in * stride, static_cast<int>(total / 2)};
}

Tensor conv1d_eval(const Tensor& x, const Tensor& w, const Tensor& b, int stride, Pad pad) {
    check_conv_args(x, w, b, stride, "conv1d", 1);
    const auto geom = conv1d_geom(x.dim(2), w.dim(2), stride, pad);
    Tensor out({x.dim(0), w.dim(0), geom.l_out});
    fill_bias(out, b);
    conv_accum(x, w, stride, geom.pad_left, out);
    return out;
}

Tensor conv1d_transpose_eval(const Tensor& x, const Tensor& w, const Tensor& b, int stride) {
    check_conv_args(x, w, b, stride, "conv1d_transpose", 0);
    const auto geom = conv1d_transpose_geom(x.dim(2), w.dim(2), stride);
    Tensor out({x.dim(0), w.dim(1), geom.l_out});
    fill_bias(out, b);
    convT_accum(x, w, stride, geom.pad_left, out);
    return out;
}

double mae_eval(const Tensor& a, const Tensor& b) {
    require(a.same_shape(b), "mae: shape mismatch " + a.shape_str() + " vs " + b.shape_str());
    require(a.numel() > 0, "mae: empty tensors");
    return kern::active().sum_abs_diff(a.data.data(), b.data.data(), a.numel()) /
           static_cast<double>(a.numel());
}

Tape::NodeId Tape::push(Tensor value, std::vector<NodeId> parents,
                        std::function<void(Tape&, Node&)> backprop) {
    nodes_.push_back(Node{std::move(value), Tensor{}, std::move(parents), std::move(backprop)});
    return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::leaf(Tensor value) { return push(std::move(value), {}, nullptr); }

Tape::NodeId Tape::conv1d(NodeId x, NodeId w, NodeId b, int stride, Pad pad) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    check_conv_args(xv, wv, bv, stride, "conv1d", 1);
    const auto geom = conv1d_geom(xv.dim(2), wv.dim(2), stride, pad);
    Tensor out({xv.dim(0), wv.dim(0), geom.l_out});
    fill_bias(out, bv);
    conv_accum(xv, wv, stride, geom.pad_left, out);
    const int pad_left = geom.pad_left;
    return push(std::move(out), {x, w, b}, [x, w, b, stride, pad_left](Tape& t, Node& self) {
        const Tensor& up = self.grad;
        // d/dx: transpose with the forward geometry (the adjoint map).
        convT_accum(up, t.nodes_[w].value, stride, pad_left, t.nodes_[x].grad);
        corr_weight(up, t.nodes_[x].value, stride, pad_left, t.nodes_[w].grad);
        accum_bias_grad(up, t.nodes_[b].grad);
    });
}

Tape::NodeId Tape::conv1d_transpose(NodeId x, NodeId w, NodeId b, int stride) {
    const Tensor& xv = nodes_[x].value;
    const Tensor& wv = nodes_[w].value;
    const Tensor& bv = nodes_[b].value;
    check_conv_args(xv, wv, bv, stride, "conv1d_transpose", 0);
    const auto geom = conv1d_transpose_geom(xv.dim(2), wv.dim(2), stride);
    Tensor out({xv.dim(0), wv.dim(1), geom.l_out});
    fill_bias(out, bv);
    convT_accum(xv, wv, stride, geom.pad_left, out);
    const int pad_left = geom.pad_left;
    return push(std::move(out), {x, w, b}, [x, w, b, stride, pad_left](Tape& t, Node& self) {
        const Tensor& up = self.grad;
        conv_accum(up, t.nodes_[w].value, stride, pad_left, t.nodes_[x].grad);
        corr_weight(t.nodes_[x].value, up, stride, pad_left, t.nodes_[w].grad);
        accum_bias_grad(up, t.nodes_[b].grad);
    });
}

Tape::NodeId Tape::relu(NodeId x) {
    const Tensor& xv = nodes_[x].value;
    Tensor out(xv.shape);
    kern::active().relu_fwd(xv.data.data(), out.data.data(), xv.numel());
    return push(std::move(out), {x}, [x](Tape& t, Node& self) {
        const Tensor& xv = t.nodes_[x].value;
        kern::active().relu_bwd(xv.data.data(), self.grad.data.data(),
                                t.nodes_[x].grad.data.data(), xv.numel());
    });
}

Tape::NodeId Tape::dropout(NodeId x, double rate, DropMode mode, std::uint64_t key) {
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0,1), got " + std::to_string(rate));
    const Tensor& xv = nodes_[x].value;
    if (mode == DropMode::eval || rate == 0.0) {
        Tensor out = xv;
        return push(std::move(out), {x}, [x](Tape& t, Node& self) {
            Tensor& gx = t.nodes_[x].grad;
            for (std::size_t i = 0; i < gx.numel(); ++i) gx.data[i] += self.grad.data[i];
        });
    }
    const double scale = 1.0 / (1.0 - rate);
    Tensor mask(xv.shape);
    for (std::size_t i = 0; i < mask.numel(); ++i)
        mask.data[i] = hash_unit(key, i) >= rate ? scale : 0.0;
    Tensor out(xv.shape);
    for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] = xv.data[i] * mask.data[i];
    return push(std::move(out), {x}, [x, mask = std::move(mask)](Tape& t, Node& self) {
        Tensor& gx = t.nodes_[x].grad;
        for (std::size_t i = 0; i < gx.numel(); ++i)
            gx.data[i] += self.grad.data[i] * mask.data[i];
    });
}

Tape::NodeId Tape::mae(NodeId a, NodeId b) {
    const Tensor& av = nodes_[a].value;
    const Tensor& bv = nodes_[b].value;
    Tensor out({1});
    out.data[0] = mae_eval(av, bv);
    return push(std::move(out), {a, b}, [a, b](Tape& t, Node& self) {
        const Tensor& av = t.nodes_[a].value;
        const Tensor& bv = t.nodes_[b].value;
        const double s = self.grad.data[0] / static_cast<double>(av.numel());
        kern::active().sign_scaled(av.data.data(), bv.data.data(), s,
                                   t.nodes_[a].grad.data.data(), av.numel());
        kern::active().sign_scaled(bv.data.data(), av.data.data(), s,
                                   t.nodes_[b].grad.data.data(), bv.numel());
    });
}

void Tape::backward(NodeId loss) {
    require(loss >= 0 && loss < static_cast<NodeId>(nodes_.size()), "backward: bad node id");
    require(nodes_[loss].value.numel() == 1,
            "backward: loss must be scalar, got " + nodes_[loss].value.shape_str());
    for (NodeId i = 0; i <= loss; ++i) {
        nodes_[i].grad = Tensor(nodes_[i].value.shape);
    }
    nodes_[loss].grad.data[0] = 1.0;
    // Creation order is a topological order, so the reverse sweep suffices.
    for (NodeId i = loss; i >= 0; --i)
        if (nodes_[i].backprop) nodes_[i].backprop(*this, nodes_[i]);
}

} // namespace trackae::ad
