#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "densecrab/augment.hpp"
#include "densecrab/corpus.hpp"
#include "densecrab/encoder.hpp"

namespace densecrab {

// ---------------------------------------------------------------------------
// InfoNCE
// ---------------------------------------------------------------------------

struct InfoNCEResult {
    double loss;
    std::vector<double> grad_scores;  // d loss / d score_i; index 0 is the positive
};

/// Negative log-softmax of score_0 against the rest, with temperature
/// scaling and max-subtraction. scores[0] is the positive.
InfoNCEResult info_nce_from_scores(const std::vector<double>& scores, double temperature);

/// Scores are dot products of q against [k_plus, negatives...].
InfoNCEResult info_nce(const Embedding& q, const Embedding& k_plus,
                       const std::vector<Embedding>& negatives, double temperature);

// ---------------------------------------------------------------------------
// MoCo state
// ---------------------------------------------------------------------------

/// Fixed-capacity FIFO of key embeddings; the oldest entry is evicted once
/// the queue is full.
class NegativeQueue {
  public:
    NegativeQueue(std::size_t capacity, std::size_t dim);

    void push(const Embedding& e);

    std::size_t fill() const { return fill_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t dim() const { return dim_; }

    /// Entry i in oldest-to-newest order, i < fill().
    const double* entry(std::size_t i) const;

    std::vector<Embedding> contents() const;

  private:
    std::size_t capacity_;
    std::size_t dim_;
    std::size_t fill_ = 0;
    std::size_t head_ = 0;  // index of the oldest entry
    std::vector<double> storage_;
};

struct MoCoState {
    Parameters query_params;
    Parameters key_params;
    NegativeQueue queue;
    double momentum = 0.9995;
    double temperature = 0.05;

    MoCoState(Parameters initial, std::size_t queue_capacity, double momentum, double temperature);
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamWConfig {
    double learning_rate = 5e-5;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct OptimizerState {
    AdamWConfig config;
    std::uint64_t step = 0;
    Gradients first_moment;   // same tensor structure as the parameters
    Gradients second_moment;

    OptimizerState(AdamWConfig config, const Parameters& params);
};

/// One AdamW step with bias correction and decoupled weight decay. Errors on
/// non-finite gradients. Parameters stay on the float32 grid.
void adamw_update(Parameters& params, const Gradients& grads, OptimizerState& opt);

/// theta_k <- m * theta_k + (1 - m) * theta_q, elementwise over all tensors.
void momentum_update(Parameters& key_params, const Parameters& query_params, double momentum);

// ---------------------------------------------------------------------------
// Training steps
// ---------------------------------------------------------------------------

/// Mean in-batch InfoNCE loss and its exact parameter gradients; gradients
/// flow through both the query and the key views.
std::pair<double, Gradients> simclr_loss_and_gradients(const Parameters& params,
                                                       const std::vector<ViewPair>& batch,
                                                       double temperature, bool normalize = false);

/// In-batch negatives, gradients through both views. Returns the mean loss.
double simclr_step(Parameters& params, OptimizerState& opt, const std::vector<ViewPair>& batch,
                   double temperature, bool normalize = false);

/// Queue negatives, keys encoded by the momentum encoder with no gradient.
/// On the first step (empty queue) the other in-batch keys serve as
/// negatives. Returns the mean loss.
double moco_step(MoCoState& state, OptimizerState& opt, const std::vector<ViewPair>& batch,
                 bool normalize = false);

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

enum class Framework { moco, simclr };

Framework framework_from_name(const std::string& name);
const char* framework_name(Framework framework);

struct PretrainConfig {
    EncoderConfig encoder;
    PairStrategy pair_strategy;
    Framework framework = Framework::moco;
    std::size_t queue_capacity = 4096;
    double momentum = 0.9995;
    double temperature = 0.05;
    AdamWConfig optimizer;
    bool normalize = false;     // L2-normalize embeddings inside the loss
    std::size_t steps = 500;
    std::size_t batch_size = 32;
    std::uint64_t seed = 0;
    std::size_t metrics_every = 50;
};

/// Runs the selected framework; appends "step loss queue_fill wall_ms" rows
/// to metrics_path (empty disables logging) and returns the query encoder.
Parameters pretrain(const PretrainConfig& config, const SamplingStrategy& data,
                    const Vocabulary& vocab, const std::string& metrics_path = "");

// ---------------------------------------------------------------------------
// Supervised fine-tuning
// ---------------------------------------------------------------------------

struct FinetunePair {
    std::string query_text;
    std::string gold_doc_id;
};

struct FinetuneConfig {
    AdamWConfig optimizer;
    double temperature = 0.05;
    double hard_negative_prob = 0.1;
    bool normalize = false;
    std::size_t steps = 200;
    std::size_t batch_size = 16;  // must be >= 2
    std::uint64_t seed = 0;
    // Optional dev-set early stopping: evaluate nDCG@10 every eval_every
    // steps, keep the best parameters, stop after `patience` stale rounds.
    std::size_t eval_every = 100;
    std::size_t patience = 0;  // 0 disables early stopping
};

/// In-batch negatives with gradients through both towers. Every query sees
/// the batch's gold documents plus one sampled negative per pair; its own
/// gold is the positive. Hard negatives, when given, replace the sampled
/// negative with probability hard_negative_prob. When dev_pairs is non-null
/// the best-nDCG@10 parameters over the run are returned.
Parameters finetune(Parameters params, const std::vector<FinetunePair>& pairs, const Corpus& corpus,
                    const Vocabulary& vocab,
                    const std::optional<std::map<std::string, std::string>>& hard_negatives,
                    const FinetuneConfig& config,
                    const std::vector<FinetunePair>* dev_pairs = nullptr);

/// For each query, the highest-ranked retrieved document that is not the
/// gold document.
std::map<std::string, std::string> mine_hard_negatives(const Parameters& params,
                                                       const std::vector<FinetunePair>& pairs,
                                                       const Corpus& corpus, const Vocabulary& vocab,
                                                       std::size_t top_k, bool normalize = false);

}  // namespace densecrab
