#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rosae/error.hpp"
#include "rosae/knn.hpp"
#include "rosae/lle.hpp"
#include "rosae/matrix.hpp"
#include "rosae/rng.hpp"

namespace rosae {

/// Slope of the leaky rectifier used between hidden layers.
inline constexpr double kLeakySlope = 0.01;

/// Hyperparameters of a single robust subspace local recovery autoencoder.
/// The reconstruction and projection costs use unsquared L2 norms (p = q = 1,
/// fixed); lambda1/lambda2 weight the subspace recovery terms and lambda3 the
/// local neighbourhood embedding term.
struct RLAEConfig {
    std::size_t input_dim = 0;
    std::vector<std::size_t> encoder_hidden = {128, 64};
    std::size_t enc_out_dim = 64;
    std::size_t rsr_dim = 32;
    std::size_t k_neighbours = 5;
    double lambda1 = 0.1;
    double lambda2 = 0.1;
    double lambda3 = 0.05;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    double prune_low = 0.2;
    double prune_high = 0.5;
    double lle_reg = kDefaultLleRegularization;
    std::uint64_t seed = 0;

    static constexpr int norm_power_p = 1;
    static constexpr int norm_power_q = 1;

    void validate() const {
        if (input_dim == 0) {
            throw InvalidArgument("rlae: input_dim must be positive");
        }
        if (enc_out_dim == 0 || rsr_dim == 0) {
            throw InvalidArgument("rlae: encoder output and RSR dimensions must be positive");
        }
        if (rsr_dim > enc_out_dim) {
            throw InvalidArgument("rlae: rsr_dim must not exceed enc_out_dim");
        }
        for (std::size_t h : encoder_hidden) {
            if (h == 0) {
                throw InvalidArgument("rlae: hidden layer widths must be positive");
            }
        }
        if (lambda1 < 0.0 || lambda2 < 0.0 || lambda3 < 0.0) {
            throw InvalidArgument("rlae: loss weights must be non-negative");
        }
        if (!(learning_rate > 0.0)) {
            throw InvalidArgument("rlae: learning_rate must be positive");
        }
        if (batch_size == 0) {
            throw InvalidArgument("rlae: batch_size must be positive");
        }
        if (k_neighbours == 0) {
            throw InvalidArgument("rlae: k_neighbours must be positive");
        }
        if (!(prune_low >= 0.0 && prune_low <= prune_high && prune_high <= 1.0)) {
            throw InvalidArgument("rlae: prune range must satisfy 0 <= low <= high <= 1");
        }
        if (lle_reg < 0.0) {
            throw InvalidArgument("rlae: lle_reg must be non-negative");
        }
    }

    /// Layer widths of the encoder, input to output: D, hidden..., e.
    std::vector<std::size_t> encoder_widths() const {
        std::vector<std::size_t> w;
        w.push_back(input_dim);
        w.insert(w.end(), encoder_hidden.begin(), encoder_hidden.end());
        w.push_back(enc_out_dim);
        return w;
    }

    /// Layer widths of the decoder, mirroring the encoder: d, hidden reversed..., D.
    std::vector<std::size_t> decoder_widths() const {
        std::vector<std::size_t> w;
        w.push_back(rsr_dim);
        w.insert(w.end(), encoder_hidden.rbegin(), encoder_hidden.rend());
        w.push_back(input_dim);
        return w;
    }
};

/// One affine layer with its pruning mask. Masked weight entries are exactly
/// zero and receive zero gradient, so they stay zero through training.
/// Biases are never masked.
struct Layer {
    DenseMatrix weight; // fan_out x fan_in
    DenseMatrix mask;   // same shape, entries 0 or 1
    std::vector<double> bias;

    std::size_t fan_in() const { return weight.cols; }
    std::size_t fan_out() const { return weight.rows; }
};

struct NetworkParams {
    std::vector<Layer> encoder;
    DenseMatrix rsr; // A, rsr_dim x enc_out_dim
    std::vector<Layer> decoder;
};

/// Activations of one sample through the full network.
struct ForwardTrace {
    std::vector<std::vector<double>> encoder_acts; // post-activation, last entry is z
    std::vector<double> z;
    std::vector<double> zhat; // A z
    std::vector<std::vector<double>> decoder_acts; // last entry is xhat
    std::vector<double> xhat;
};

/// Frozen input-space neighbourhood structure: for every training row its
/// nearest neighbours and their reconstruction weights, computed once before
/// training.
struct LocalGraph {
    std::vector<NeighbourSet> neighbours;
    std::vector<LocalWeights> weights;

    std::size_t size() const { return weights.size(); }
};

inline LocalGraph build_local_graph(const DenseMatrix& data, std::size_t k, double reg) {
    if (data.rows <= k) {
        throw InvalidArgument("local graph: need at least k+1 rows, got " +
                              std::to_string(data.rows) + " with k=" + std::to_string(k));
    }
    LocalGraph graph;
    graph.neighbours.reserve(data.rows);
    graph.weights.reserve(data.rows);
    for (std::size_t i = 0; i < data.rows; ++i) {
        NeighbourSet ns = knn_search(data, i, k);
        graph.weights.push_back(lle_weights(data, ns, reg));
        graph.neighbours.push_back(std::move(ns));
    }
    return graph;
}

namespace detail {

inline Layer init_layer(std::size_t fan_in, std::size_t fan_out, Rng& rng, double prune_rate) {
    Layer layer;
    layer.weight = DenseMatrix(fan_out, fan_in);
    layer.mask = DenseMatrix(fan_out, fan_in, 1.0);
    layer.bias.assign(fan_out, 0.0);
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    for (double& w : layer.weight.values) {
        w = rng.uniform(-bound, bound);
    }
    if (prune_rate > 0.0) {
        for (std::size_t i = 0; i < layer.weight.values.size(); ++i) {
            if (rng.uniform() < prune_rate) {
                layer.mask.values[i] = 0.0;
                layer.weight.values[i] = 0.0;
            }
        }
    }
    return layer;
}

inline void leaky_inplace(std::span<double> xs) {
    for (double& x : xs) {
        if (x < 0.0) {
            x *= kLeakySlope;
        }
    }
}

/// Derivative of the leaky rectifier recovered from its output value.
inline double leaky_grad(double post) { return post > 0.0 ? 1.0 : kLeakySlope; }

} // namespace detail

/// Builds a freshly initialized network. Weights use uniform fan-in scaling,
/// U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases start at zero. One disconnection
/// rate is drawn per network from the prune range, then every encoder and
/// decoder weight entry is masked independently with that probability. The
/// RSR matrix and the biases are never masked.
inline NetworkParams init_network(const RLAEConfig& cfg) {
    cfg.validate();
    Rng rng(seed_split(cfg.seed, "init"));
    const double prune_rate = rng.uniform(cfg.prune_low, cfg.prune_high);

    NetworkParams net;
    const auto enc_w = cfg.encoder_widths();
    for (std::size_t l = 0; l + 1 < enc_w.size(); ++l) {
        net.encoder.push_back(detail::init_layer(enc_w[l], enc_w[l + 1], rng, prune_rate));
    }
    net.rsr = DenseMatrix(cfg.rsr_dim, cfg.enc_out_dim);
    const double rsr_bound = 1.0 / std::sqrt(static_cast<double>(cfg.enc_out_dim));
    for (double& w : net.rsr.values) {
        w = rng.uniform(-rsr_bound, rsr_bound);
    }
    const auto dec_w = cfg.decoder_widths();
    for (std::size_t l = 0; l + 1 < dec_w.size(); ++l) {
        net.decoder.push_back(detail::init_layer(dec_w[l], dec_w[l + 1], rng, prune_rate));
    }
    return net;
}

/// Re-applies pruning masks to the weights. With masked gradients the
/// optimizer never moves a masked entry, so this is a cheap invariant guard.
inline void apply_masks(NetworkParams& net) {
    for (auto* side : {&net.encoder, &net.decoder}) {
        for (Layer& layer : *side) {
            for (std::size_t i = 0; i < layer.weight.values.size(); ++i) {
                layer.weight.values[i] *= layer.mask.values[i];
            }
        }
    }
}

/// Single-sample forward pass: masked affine encoder layers with leaky
/// activations between them and a linear map to z, then zhat = A z, then the
/// mirrored decoder with a linear output layer.
inline ForwardTrace forward(const NetworkParams& net, std::span<const double> x) {
    if (net.encoder.empty() || net.decoder.empty()) {
        throw InvalidArgument("forward: network has no layers");
    }
    if (x.size() != net.encoder.front().fan_in()) {
        throw InvalidArgument("forward: input length " + std::to_string(x.size()) +
                              " does not match network input dimension " +
                              std::to_string(net.encoder.front().fan_in()));
    }
    if (!all_finite(x)) {
        throw InvalidData("forward: non-finite input");
    }

    ForwardTrace trace;
    std::vector<double> act(x.begin(), x.end());
    for (std::size_t l = 0; l < net.encoder.size(); ++l) {
        const Layer& layer = net.encoder[l];
        std::vector<double> next(layer.fan_out());
        for (std::size_t o = 0; o < layer.fan_out(); ++o) {
            next[o] = layer.bias[o] + dot(layer.weight.row_span(o), act);
        }
        if (l + 1 < net.encoder.size()) {
            detail::leaky_inplace(next);
        }
        trace.encoder_acts.push_back(next);
        act = std::move(next);
    }
    trace.z = act;

    trace.zhat.assign(net.rsr.rows, 0.0);
    for (std::size_t r = 0; r < net.rsr.rows; ++r) {
        trace.zhat[r] = dot(net.rsr.row_span(r), trace.z);
    }

    act = trace.zhat;
    for (std::size_t l = 0; l < net.decoder.size(); ++l) {
        const Layer& layer = net.decoder[l];
        std::vector<double> next(layer.fan_out());
        for (std::size_t o = 0; o < layer.fan_out(); ++o) {
            next[o] = layer.bias[o] + dot(layer.weight.row_span(o), act);
        }
        if (l + 1 < net.decoder.size()) {
            detail::leaky_inplace(next);
        }
        trace.decoder_acts.push_back(next);
        act = std::move(next);
    }
    trace.xhat = act;
    return trace;
}

/// A mini-batch resolved against the local graph. The first `core` slots are
/// the anchor samples (they contribute reconstruction and projection terms);
/// any neighbour that falls outside the batch is appended as an extension
/// slot so its latent representation is evaluated through the current
/// network. `neighbour_slots[i]` lists (slot, weight) pairs for core slot i.
struct BatchPlan {
    std::vector<std::size_t> rows;
    std::size_t core = 0;
    std::vector<std::vector<std::pair<std::size_t, double>>> neighbour_slots;
};

inline BatchPlan build_batch_plan(std::span<const std::size_t> core_rows, const LocalGraph& graph,
                                  bool with_neighbours) {
    BatchPlan plan;
    plan.rows.assign(core_rows.begin(), core_rows.end());
    plan.core = plan.rows.size();
    if (!with_neighbours) {
        return plan;
    }
    std::unordered_map<std::size_t, std::size_t> slot_of;
    slot_of.reserve(plan.core * 2);
    for (std::size_t s = 0; s < plan.core; ++s) {
        slot_of.emplace(plan.rows[s], s);
    }
    plan.neighbour_slots.resize(plan.core);
    for (std::size_t s = 0; s < plan.core; ++s) {
        const LocalWeights& lw = graph.weights.at(plan.rows[s]);
        auto& entries = plan.neighbour_slots[s];
        entries.reserve(lw.neighbour_indices.size());
        for (std::size_t j = 0; j < lw.neighbour_indices.size(); ++j) {
            const auto [it, inserted] = slot_of.emplace(lw.neighbour_indices[j], plan.rows.size());
            if (inserted) {
                plan.rows.push_back(lw.neighbour_indices[j]);
            }
            entries.emplace_back(it->second, lw.weights[j]);
        }
    }
    return plan;
}

/// Batched activations. Encoder activations cover every slot in the plan;
/// the decoder runs only over the core slots, whose rows sit first and are
/// therefore contiguous in zhat.
struct BatchTrace {
    DenseMatrix input;                     // B x D gathered rows
    std::vector<DenseMatrix> encoder_acts; // last entry is Z (B x e)
    DenseMatrix zhat;                      // B x d
    std::vector<DenseMatrix> decoder_acts; // core rows only, last entry is Xhat
    std::size_t core = 0;
};

inline BatchTrace forward_batch(const NetworkParams& net, const DenseMatrix& data,
                                const BatchPlan& plan) {
    const std::size_t b = plan.rows.size();
    BatchTrace trace;
    trace.core = plan.core;
    trace.input = DenseMatrix(b, data.cols);
    for (std::size_t s = 0; s < b; ++s) {
        std::copy(data.row(plan.rows[s]), data.row(plan.rows[s]) + data.cols,
                  trace.input.row(s));
    }

    const DenseMatrix* prev = &trace.input;
    for (std::size_t l = 0; l < net.encoder.size(); ++l) {
        const Layer& layer = net.encoder[l];
        DenseMatrix act(b, layer.fan_out());
        gemm_nt(act.values.data(), prev->values.data(), layer.weight.values.data(), b,
                layer.fan_in(), layer.fan_out());
        for (std::size_t s = 0; s < b; ++s) {
            double* row = act.row(s);
            for (std::size_t o = 0; o < layer.fan_out(); ++o) {
                row[o] += layer.bias[o];
            }
        }
        if (l + 1 < net.encoder.size()) {
            detail::leaky_inplace(act.values);
        }
        trace.encoder_acts.push_back(std::move(act));
        prev = &trace.encoder_acts.back();
    }

    const DenseMatrix& z = trace.encoder_acts.back();
    trace.zhat = DenseMatrix(b, net.rsr.rows);
    gemm_nt(trace.zhat.values.data(), z.values.data(), net.rsr.values.data(), b, net.rsr.cols,
            net.rsr.rows);

    const std::size_t core = plan.core;
    const double* dec_in = trace.zhat.values.data();
    for (std::size_t l = 0; l < net.decoder.size(); ++l) {
        const Layer& layer = net.decoder[l];
        DenseMatrix act(core, layer.fan_out());
        gemm_nt(act.values.data(), dec_in, layer.weight.values.data(), core, layer.fan_in(),
                layer.fan_out());
        for (std::size_t s = 0; s < core; ++s) {
            double* row = act.row(s);
            for (std::size_t o = 0; o < layer.fan_out(); ++o) {
                row[o] += layer.bias[o];
            }
        }
        if (l + 1 < net.decoder.size()) {
            detail::leaky_inplace(act.values);
        }
        trace.decoder_acts.push_back(std::move(act));
        dec_in = trace.decoder_acts.back().values.data();
    }
    return trace;
}

/// Sum of unsquared reconstruction norms over the core slots.
inline double loss_ae(const BatchTrace& trace) {
    const DenseMatrix& xhat = trace.decoder_acts.back();
    double total = 0.0;
    for (std::size_t s = 0; s < trace.core; ++s) {
        total += std::sqrt(squared_distance(trace.input.row_span(s), xhat.row_span(s)));
    }
    return total;
}

/// lambda1 * sum_i ||z_i - A^T zhat_i||_2 over core slots, plus
/// lambda2 * ||A A^T - I||_F once per batch.
inline double loss_rsr(const NetworkParams& net, const BatchTrace& trace, const RLAEConfig& cfg) {
    const DenseMatrix& z = trace.encoder_acts.back();
    const std::size_t e = net.rsr.cols;
    const std::size_t d = net.rsr.rows;

    double proj = 0.0;
    if (cfg.lambda1 > 0.0) {
        DenseMatrix g(trace.core, e);
        std::copy(z.values.begin(), z.values.begin() + static_cast<std::ptrdiff_t>(trace.core * e),
                  g.values.begin());
        gemm_nn(g.values.data(), trace.zhat.values.data(), net.rsr.values.data(), trace.core, d, e,
                -1.0);
        for (std::size_t s = 0; s < trace.core; ++s) {
            proj += norm2(g.row_span(s));
        }
    }

    double orth = 0.0;
    if (cfg.lambda2 > 0.0) {
        DenseMatrix s(d, d);
        gemm_nt(s.values.data(), net.rsr.values.data(), net.rsr.values.data(), d, e, d);
        for (std::size_t i = 0; i < d; ++i) {
            s.at(i, i) -= 1.0;
        }
        orth = frobenius_norm(s);
    }
    return cfg.lambda1 * proj + cfg.lambda2 * orth;
}

/// Local neighbourhood cost sum_i sum_j w_ij ||zhat_i - zhat_j||^2 over the
/// core slots, unweighted by lambda3.
inline double loss_lne(const BatchTrace& trace, const BatchPlan& plan) {
    double total = 0.0;
    for (std::size_t s = 0; s < plan.neighbour_slots.size(); ++s) {
        for (const auto& [slot, w] : plan.neighbour_slots[s]) {
            total += w * squared_distance(trace.zhat.row_span(s), trace.zhat.row_span(slot));
        }
    }
    return total;
}

struct LossBreakdown {
    double ae = 0.0;
    double rsr = 0.0;
    double lne = 0.0;
    double total = 0.0;
};

inline LossBreakdown loss_total(const NetworkParams& net, const BatchTrace& trace,
                                const BatchPlan& plan, const RLAEConfig& cfg) {
    LossBreakdown loss;
    loss.ae = loss_ae(trace);
    loss.rsr = loss_rsr(net, trace, cfg);
    loss.lne = loss_lne(trace, plan);
    loss.total = loss.ae + loss.rsr + cfg.lambda3 * loss.lne;
    return loss;
}

struct LayerGrad {
    DenseMatrix weight;
    std::vector<double> bias;
};

struct Gradients {
    std::vector<LayerGrad> encoder;
    DenseMatrix rsr;
    std::vector<LayerGrad> decoder;
};

inline Gradients make_zero_gradients(const NetworkParams& net) {
    Gradients g;
    for (const Layer& layer : net.encoder) {
        g.encoder.push_back({DenseMatrix(layer.fan_out(), layer.fan_in()),
                             std::vector<double>(layer.fan_out(), 0.0)});
    }
    g.rsr = DenseMatrix(net.rsr.rows, net.rsr.cols);
    for (const Layer& layer : net.decoder) {
        g.decoder.push_back({DenseMatrix(layer.fan_out(), layer.fan_in()),
                             std::vector<double>(layer.fan_out(), 0.0)});
    }
    return g;
}

namespace detail {

/// Backward pass through a stack of affine+leaky layers. `d_out` enters as
/// the gradient at the stack output (post-activation of the final, linear
/// layer) and exits as the gradient at the stack input. `input` is the
/// matrix fed to layer 0; `acts` are the recorded post-activations.
inline DenseMatrix backprop_stack(const std::vector<Layer>& layers,
                                  const std::vector<DenseMatrix>& acts, const double* input,
                                  std::size_t batch, DenseMatrix d_out,
                                  std::vector<LayerGrad>& grads, bool need_input_grad) {
    DenseMatrix d_act = std::move(d_out);
    for (std::size_t li = layers.size(); li-- > 0;) {
        const Layer& layer = layers[li];
        // The final layer is linear; hidden layers carry the leaky slope.
        if (li + 1 < layers.size()) {
            const DenseMatrix& post = acts[li];
            for (std::size_t i = 0; i < d_act.values.size(); ++i) {
                d_act.values[i] *= leaky_grad(post.values[i]);
            }
        }
        const double* below = li == 0 ? input : acts[li - 1].values.data();
        gemm_tn(grads[li].weight.values.data(), d_act.values.data(), below, batch,
                layer.fan_out(), layer.fan_in());
        for (std::size_t s = 0; s < batch; ++s) {
            const double* row = d_act.row(s);
            for (std::size_t o = 0; o < layer.fan_out(); ++o) {
                grads[li].bias[o] += row[o];
            }
        }
        if (li == 0 && !need_input_grad) {
            break;
        }
        DenseMatrix d_below(batch, layer.fan_in());
        gemm_nn(d_below.values.data(), d_act.values.data(), layer.weight.values.data(), batch,
                layer.fan_out(), layer.fan_in());
        d_act = std::move(d_below);
    }
    return d_act;
}

} // namespace detail

/// Analytic gradients of loss_total over the batch. Gradients of masked
/// weight entries are zeroed; norm kinks (a zero-length residual) use the
/// zero subgradient.
inline Gradients backward(const NetworkParams& net, const BatchTrace& trace, const BatchPlan& plan,
                          const RLAEConfig& cfg) {
    const std::size_t b = plan.rows.size();
    const std::size_t core = plan.core;
    const std::size_t e = net.rsr.cols;
    const std::size_t d = net.rsr.rows;
    const DenseMatrix& z = trace.encoder_acts.back();
    Gradients grads = make_zero_gradients(net);

    // Reconstruction term: d||x - xhat|| / dxhat = (xhat - x) / ||x - xhat||.
    const DenseMatrix& xhat = trace.decoder_acts.back();
    DenseMatrix d_xhat(core, trace.input.cols);
    for (std::size_t s = 0; s < core; ++s) {
        const double* x = trace.input.row(s);
        const double* xh = xhat.row(s);
        double* out = d_xhat.row(s);
        const double dist = std::sqrt(squared_distance(trace.input.row_span(s), xhat.row_span(s)));
        if (dist > 0.0) {
            const double inv = 1.0 / dist;
            for (std::size_t c = 0; c < trace.input.cols; ++c) {
                out[c] = (xh[c] - x[c]) * inv;
            }
        }
    }

    // Through the decoder down to its input, which is the core block of zhat.
    DenseMatrix d_zhat_core =
        detail::backprop_stack(net.decoder, trace.decoder_acts, trace.zhat.values.data(), core,
                               std::move(d_xhat), grads.decoder, true);

    DenseMatrix d_zhat(b, d);
    std::copy(d_zhat_core.values.begin(), d_zhat_core.values.end(), d_zhat.values.begin());

    // Neighbourhood term: gradients flow into both endpoints of every pair.
    if (cfg.lambda3 > 0.0) {
        for (std::size_t s = 0; s < plan.neighbour_slots.size(); ++s) {
            double* di = d_zhat.row(s);
            const double* zi = trace.zhat.row(s);
            for (const auto& [slot, w] : plan.neighbour_slots[s]) {
                const double* zj = trace.zhat.row(slot);
                double* dj = d_zhat.row(slot);
                const double coeff = 2.0 * cfg.lambda3 * w;
                for (std::size_t c = 0; c < d; ++c) {
                    const double diff = coeff * (zi[c] - zj[c]);
                    di[c] += diff;
                    dj[c] -= diff;
                }
            }
        }
    }

    DenseMatrix d_z(b, e);

    // Projection term: residual g_i = z_i - A^T zhat_i, normalized rows.
    if (cfg.lambda1 > 0.0) {
        DenseMatrix g(core, e);
        std::copy(z.values.begin(), z.values.begin() + static_cast<std::ptrdiff_t>(core * e),
                  g.values.begin());
        gemm_nn(g.values.data(), trace.zhat.values.data(), net.rsr.values.data(), core, d, e,
                -1.0);
        for (std::size_t s = 0; s < core; ++s) {
            const double n = norm2(g.row_span(s));
            double* row = g.row(s);
            if (n > 0.0) {
                const double inv = 1.0 / n;
                for (std::size_t c = 0; c < e; ++c) {
                    row[c] *= inv;
                }
            } else {
                std::fill(row, row + e, 0.0);
            }
        }
        // d/dz += lambda1 * ghat; d/dzhat -= lambda1 * ghat A^T;
        // d/dA -= lambda1 * zhat^T ghat.
        for (std::size_t s = 0; s < core; ++s) {
            const double* row = g.row(s);
            double* dz = d_z.row(s);
            for (std::size_t c = 0; c < e; ++c) {
                dz[c] += cfg.lambda1 * row[c];
            }
        }
        gemm_nt(d_zhat.values.data(), g.values.data(), net.rsr.values.data(), core, e, d,
                -cfg.lambda1);
        gemm_tn(grads.rsr.values.data(), trace.zhat.values.data(), g.values.data(), core, d, e,
                -cfg.lambda1);
    }

    // Orthogonality term: d||A A^T - I||_F / dA = 2 S A / ||S||_F.
    if (cfg.lambda2 > 0.0) {
        DenseMatrix s(d, d);
        gemm_nt(s.values.data(), net.rsr.values.data(), net.rsr.values.data(), d, e, d);
        for (std::size_t i = 0; i < d; ++i) {
            s.at(i, i) -= 1.0;
        }
        const double fro = frobenius_norm(s);
        if (fro > 0.0) {
            gemm_nn(grads.rsr.values.data(), s.values.data(), net.rsr.values.data(), d, d, e,
                    2.0 * cfg.lambda2 / fro);
        }
    }

    // Close the zhat node: zhat = z A^T.
    gemm_tn(grads.rsr.values.data(), d_zhat.values.data(), z.values.data(), b, d, e);
    gemm_nn(d_z.values.data(), d_zhat.values.data(), net.rsr.values.data(), b, d, e);

    detail::backprop_stack(net.encoder, trace.encoder_acts, trace.input.values.data(), b,
                           std::move(d_z), grads.encoder, false);

    for (auto [side, src] : {std::pair{&grads.encoder, &net.encoder},
                             std::pair{&grads.decoder, &net.decoder}}) {
        for (std::size_t l = 0; l < side->size(); ++l) {
            DenseMatrix& gw = (*side)[l].weight;
            const DenseMatrix& mask = (*src)[l].mask;
            for (std::size_t i = 0; i < gw.values.size(); ++i) {
                gw.values[i] *= mask.values[i];
            }
        }
    }
    return grads;
}

/// Adaptive moment estimation with decay rates 0.9/0.999 and bias correction.
class AdamOptimizer {
public:
    AdamOptimizer(const NetworkParams& net, double learning_rate)
        : lr_(learning_rate), m_(make_zero_gradients(net)), v_(make_zero_gradients(net)) {}

    void step(NetworkParams& net, const Gradients& grads) {
        ++t_;
        const double correction =
            std::sqrt(1.0 - std::pow(kBeta2, static_cast<double>(t_))) /
            (1.0 - std::pow(kBeta1, static_cast<double>(t_)));
        const double step_size = lr_ * correction;
        for (std::size_t l = 0; l < net.encoder.size(); ++l) {
            update(net.encoder[l].weight.values, grads.encoder[l].weight.values,
                   m_.encoder[l].weight.values, v_.encoder[l].weight.values, step_size);
            update(net.encoder[l].bias, grads.encoder[l].bias, m_.encoder[l].bias,
                   v_.encoder[l].bias, step_size);
        }
        update(net.rsr.values, grads.rsr.values, m_.rsr.values, v_.rsr.values, step_size);
        for (std::size_t l = 0; l < net.decoder.size(); ++l) {
            update(net.decoder[l].weight.values, grads.decoder[l].weight.values,
                   m_.decoder[l].weight.values, v_.decoder[l].weight.values, step_size);
            update(net.decoder[l].bias, grads.decoder[l].bias, m_.decoder[l].bias,
                   v_.decoder[l].bias, step_size);
        }
    }

private:
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEps = 1e-8;

    static void update(std::vector<double>& w, const std::vector<double>& g,
                       std::vector<double>& m, std::vector<double>& v, double step_size) {
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
            v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
            w[i] -= step_size * m[i] / (std::sqrt(v[i]) + kEps);
        }
    }

    double lr_;
    std::size_t t_ = 0;
    Gradients m_;
    Gradients v_;
};

/// A trained detector: its resolved configuration, final parameters, and the
/// per-epoch training loss curve.
struct RLAEModel {
    RLAEConfig config;
    NetworkParams params;
    std::vector<double> loss_curve;
};

/// Trains one detector. The neighbourhood graph is built once on the raw
/// inputs and its weights stay frozen; each epoch shuffles the rows and runs
/// mini-batch gradient descent over the combined loss. Training is
/// unsupervised; any anomaly labels on the split are ignored here.
inline RLAEModel train(const DenseMatrix& data, const RLAEConfig& config) {
    RLAEConfig cfg = config;
    if (cfg.input_dim == 0) {
        cfg.input_dim = data.cols;
    }
    if (cfg.input_dim != data.cols) {
        throw InvalidArgument("rlae: data has " + std::to_string(data.cols) +
                              " columns, config expects " + std::to_string(cfg.input_dim));
    }
    cfg.validate();
    require_finite(data, "training data");
    if (data.rows <= cfg.k_neighbours) {
        throw InvalidArgument("rlae: need more than k rows to train, got " +
                              std::to_string(data.rows) + " with k=" +
                              std::to_string(cfg.k_neighbours));
    }

    RLAEModel model;
    model.config = cfg;
    model.params = init_network(cfg);
    if (cfg.epochs == 0) {
        return model;
    }

    const LocalGraph graph = build_local_graph(data, cfg.k_neighbours, cfg.lle_reg);
    const std::size_t n = data.rows;
    const std::size_t batch = std::min(cfg.batch_size, n);
    AdamOptimizer optimizer(model.params, cfg.learning_rate);
    Rng rng(seed_split(cfg.seed, "train"));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});

    model.loss_curve.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < n; start += batch) {
            const std::size_t count = std::min(batch, n - start);
            const BatchPlan plan = build_batch_plan({order.data() + start, count}, graph,
                                                    cfg.lambda3 > 0.0);
            const BatchTrace trace = forward_batch(model.params, data, plan);
            epoch_loss += loss_total(model.params, trace, plan, cfg).total;
            const Gradients grads = backward(model.params, trace, plan, cfg);
            optimizer.step(model.params, grads);
            apply_masks(model.params);
        }
        model.loss_curve.push_back(epoch_loss);
    }
    return model;
}

/// Anomaly scores: the reconstruction norm ||x - xhat|| per row. Higher
/// scores mean more anomalous.
inline std::vector<double> score(const RLAEModel& model, const DenseMatrix& data) {
    if (data.cols != model.config.input_dim) {
        throw InvalidArgument("score: data has " + std::to_string(data.cols) +
                              " columns, model expects " +
                              std::to_string(model.config.input_dim));
    }
    require_finite(data, "scoring data");

    std::vector<double> scores(data.rows, 0.0);
    const std::size_t chunk = std::max<std::size_t>(std::size_t{1},
                                                    std::min<std::size_t>(data.rows, 1024));
    std::vector<std::size_t> rows(chunk);
    for (std::size_t start = 0; start < data.rows; start += chunk) {
        const std::size_t count = std::min(chunk, data.rows - start);
        rows.resize(count);
        std::iota(rows.begin(), rows.end(), start);
        BatchPlan plan;
        plan.rows = rows;
        plan.core = count;
        const BatchTrace trace = forward_batch(model.params, data, plan);
        const DenseMatrix& xhat = trace.decoder_acts.back();
        for (std::size_t s = 0; s < count; ++s) {
            scores[start + s] =
                std::sqrt(squared_distance(trace.input.row_span(s), xhat.row_span(s)));
        }
    }
    return scores;
}

} // namespace rosae
