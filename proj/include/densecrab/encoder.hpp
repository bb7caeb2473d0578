#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "densecrab/rng.hpp"
#include "densecrab/tensor.hpp"
#include "densecrab/tokenizer.hpp"

namespace densecrab {

struct EncoderConfig {
    std::uint32_t vocab_size = 0;
    std::uint32_t embed_dim = 64;
    std::uint32_t num_layers = 2;
    std::uint32_t num_heads = 4;
    std::uint32_t feedforward_dim = 128;
    std::uint32_t max_len = 256;

    void validate() const;
    std::uint32_t head_dim() const { return embed_dim / num_heads; }
};

struct AttentionParams {
    Tensor wq, bq, wk, bk, wv, bv, wo, bo;
};

struct LayerParams {
    Tensor ln1_gamma, ln1_beta;
    AttentionParams attn;
    Tensor ln2_gamma, ln2_beta;
    Tensor ff_w1, ff_b1, ff_w2, ff_b2;
};

/// Pre-norm transformer weights. Linear maps are stored [out, in] row-major.
struct Parameters {
    EncoderConfig config;
    Tensor tok_emb;  // [vocab_size, embed_dim]
    Tensor pos_emb;  // [max_len, embed_dim]
    std::vector<LayerParams> layers;
    Tensor final_ln_gamma, final_ln_beta;
};

/// Gradients mirror the parameter structure tensor for tensor.
using Gradients = Parameters;

/// Gaussian(0, 0.02) weights, zero biases, unit layer-norm gains; values on
/// the float32 grid.
Parameters init_parameters(const EncoderConfig& config, Rng& rng);

Gradients zeros_like(const Parameters& params);

std::size_t parameter_count(const Parameters& params);

/// Visits every tensor in the canonical (serialization) order.
void for_each_tensor(Parameters& params, const std::function<void(const std::string&, Tensor&)>& fn);
void for_each_tensor(const Parameters& params,
                     const std::function<void(const std::string&, const Tensor&)>& fn);

using Embedding = std::vector<double>;

/// Mean of the final-layer hidden states over non-<pad> positions.
Embedding encode(const Parameters& params, const TokenSequence& tokens);

/// Element-wise equal to encode(); items are processed independently so
/// padding and batch composition cannot change results.
std::vector<Embedding> encode_batch(const Parameters& params, const std::vector<TokenSequence>& batch);

/// Relevance score: dot product.
double score(const Embedding& q, const Embedding& d);

double l2_norm(const Embedding& e);
void l2_normalize(Embedding& e);

/// Exact gradient of sum_i <upstream[i], encode(batch[i])> with respect to
/// every parameter.
Gradients backward(const Parameters& params, const std::vector<TokenSequence>& batch,
                   const std::vector<Embedding>& upstream);

/// Binary checkpoint: magic "DCRB", version, config, named float32 tensors.
/// Save/load round-trips bit-exactly.
void save_parameters(const Parameters& params, const std::string& path);
Parameters load_parameters(const std::string& path);

}  // namespace densecrab
