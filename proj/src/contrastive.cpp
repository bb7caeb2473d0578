#include "densecrab/contrastive.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>

#include "densecrab/error.hpp"
#include "densecrab/eval.hpp"
#include "densecrab/index.hpp"

namespace densecrab {

// ---------------------------------------------------------------------------
// InfoNCE
// ---------------------------------------------------------------------------

InfoNCEResult info_nce_from_scores(const std::vector<double>& scores, double temperature) {
    if (scores.size() < 2) fail(ErrKind::invalid, "info_nce needs at least one negative");
    if (!(temperature > 0.0)) fail(ErrKind::invalid, "temperature must be positive");

    const std::size_t n = scores.size();
    std::vector<double> logits(n);
    double max_logit = -1e300;
    for (std::size_t i = 0; i < n; ++i) {
        logits[i] = scores[i] / temperature;
        max_logit = std::max(max_logit, logits[i]);
    }
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        logits[i] = std::exp(logits[i] - max_logit);
        denom += logits[i];
    }

    InfoNCEResult result;
    result.loss = -std::log(logits[0] / denom);
    result.grad_scores.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double p = logits[i] / denom;
        result.grad_scores[i] = (p - (i == 0 ? 1.0 : 0.0)) / temperature;
    }
    return result;
}

InfoNCEResult info_nce(const Embedding& q, const Embedding& k_plus,
                       const std::vector<Embedding>& negatives, double temperature) {
    if (negatives.empty()) fail(ErrKind::invalid, "info_nce needs at least one negative");
    std::vector<double> scores;
    scores.reserve(1 + negatives.size());
    scores.push_back(score(q, k_plus));
    for (const Embedding& neg : negatives) scores.push_back(score(q, neg));
    return info_nce_from_scores(scores, temperature);
}

// ---------------------------------------------------------------------------
// Negative queue
// ---------------------------------------------------------------------------

NegativeQueue::NegativeQueue(std::size_t capacity, std::size_t dim) : capacity_(capacity), dim_(dim) {
    if (capacity_ == 0 || dim_ == 0) fail(ErrKind::invalid, "queue capacity and dim must be positive");
    storage_.resize(capacity_ * dim_);
}

void NegativeQueue::push(const Embedding& e) {
    if (e.size() != dim_) fail(ErrKind::invalid, "queue entry dimension mismatch");
    if (fill_ < capacity_) {
        std::copy(e.begin(), e.end(), storage_.begin() + ((head_ + fill_) % capacity_) * dim_);
        ++fill_;
    } else {
        // Full: overwrite the oldest slot and advance.
        std::copy(e.begin(), e.end(), storage_.begin() + head_ * dim_);
        head_ = (head_ + 1) % capacity_;
    }
}

const double* NegativeQueue::entry(std::size_t i) const {
    return storage_.data() + ((head_ + i) % capacity_) * dim_;
}

std::vector<Embedding> NegativeQueue::contents() const {
    std::vector<Embedding> out;
    out.reserve(fill_);
    for (std::size_t i = 0; i < fill_; ++i) {
        const double* e = entry(i);
        out.emplace_back(e, e + dim_);
    }
    return out;
}

MoCoState::MoCoState(Parameters initial, std::size_t queue_capacity, double momentum_value,
                     double temperature_value)
    : query_params(std::move(initial)),
      key_params(query_params),
      queue(queue_capacity, query_params.config.embed_dim),
      momentum(momentum_value),
      temperature(temperature_value) {
    if (momentum < 0.0 || momentum > 1.0) fail(ErrKind::invalid, "momentum must lie in [0, 1]");
    if (!(temperature > 0.0)) fail(ErrKind::invalid, "temperature must be positive");
}

// ---------------------------------------------------------------------------
// AdamW
// ---------------------------------------------------------------------------

OptimizerState::OptimizerState(AdamWConfig cfg, const Parameters& params)
    : config(cfg), first_moment(zeros_like(params)), second_moment(zeros_like(params)) {}

namespace {

/// Applies fn(param_tensor, a_tensor, b_tensor) across the congruent
/// structures; shapes are validated tensor by tensor.
void zip_tensors(Parameters& params, Parameters& a, Parameters& b,
                 const std::function<void(Tensor&, Tensor&, Tensor&)>& fn) {
    std::vector<Tensor*> pt, at, bt;
    for_each_tensor(params, [&pt](const std::string&, Tensor& t) { pt.push_back(&t); });
    for_each_tensor(a, [&at](const std::string&, Tensor& t) { at.push_back(&t); });
    for_each_tensor(b, [&bt](const std::string&, Tensor& t) { bt.push_back(&t); });
    if (pt.size() != at.size() || pt.size() != bt.size()) {
        fail(ErrKind::invalid, "parameter structures are not congruent");
    }
    for (std::size_t i = 0; i < pt.size(); ++i) {
        if (!same_shape(*pt[i], *at[i]) || !same_shape(*pt[i], *bt[i])) {
            fail(ErrKind::invalid, "tensor shape mismatch between parameter structures");
        }
        fn(*pt[i], *at[i], *bt[i]);
    }
}

}  // namespace

void adamw_update(Parameters& params, const Gradients& grads, OptimizerState& opt) {
    for_each_tensor(grads, [](const std::string& name, const Tensor& t) {
        for (double g : t.v) {
            if (!std::isfinite(g)) {
                fail(ErrKind::invalid, "non-finite gradient in tensor '" + name + "'");
            }
        }
    });

    opt.step += 1;
    const AdamWConfig& cfg = opt.config;
    const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(opt.step));
    const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(opt.step));

    auto& grads_mut = const_cast<Gradients&>(grads);
    std::vector<Tensor*> gt;
    for_each_tensor(grads_mut, [&gt](const std::string&, Tensor& t) { gt.push_back(&t); });
    std::size_t index = 0;
    zip_tensors(params, opt.first_moment, opt.second_moment,
                [&](Tensor& p, Tensor& m, Tensor& v) {
                    const Tensor& g = *gt[index++];
                    if (!same_shape(p, g)) {
                        fail(ErrKind::invalid, "gradient shape mismatch in adamw_update");
                    }
                    for (std::size_t i = 0; i < p.v.size(); ++i) {
                        m.v[i] = cfg.beta1 * m.v[i] + (1.0 - cfg.beta1) * g.v[i];
                        v.v[i] = cfg.beta2 * v.v[i] + (1.0 - cfg.beta2) * g.v[i] * g.v[i];
                        const double m_hat = m.v[i] / bias1;
                        const double v_hat = v.v[i] / bias2;
                        p.v[i] -= cfg.learning_rate *
                                  (m_hat / (std::sqrt(v_hat) + cfg.eps) + cfg.weight_decay * p.v[i]);
                    }
                    quantize_f32(p);
                });
}

void momentum_update(Parameters& key_params, const Parameters& query_params, double momentum) {
    if (momentum < 0.0 || momentum > 1.0) fail(ErrKind::invalid, "momentum must lie in [0, 1]");
    std::vector<const Tensor*> qt;
    for_each_tensor(query_params, [&qt](const std::string&, const Tensor& t) { qt.push_back(&t); });
    std::size_t index = 0;
    for_each_tensor(key_params, [&](const std::string& name, Tensor& k) {
        const Tensor& q = *qt[index++];
        if (!same_shape(k, q)) {
            fail(ErrKind::invalid, "tensor '" + name + "' shape mismatch in momentum_update");
        }
        for (std::size_t i = 0; i < k.v.size(); ++i) {
            k.v[i] = momentum * k.v[i] + (1.0 - momentum) * q.v[i];
        }
    });
}

// ---------------------------------------------------------------------------
// Training steps
// ---------------------------------------------------------------------------

namespace {

/// Gradient of the normalization map x -> x/|x|: projects the upstream
/// gradient of the normalized vector back onto the raw vector.
Embedding normalize_backward(const Embedding& raw, const Embedding& normalized, const Embedding& g) {
    const double norm = l2_norm(raw);
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += normalized[i] * g[i];
    Embedding out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) out[i] = (g[i] - normalized[i] * dot) / norm;
    return out;
}

std::vector<TokenSequence> collect_views(const std::vector<ViewPair>& batch, bool queries) {
    std::vector<TokenSequence> views;
    views.reserve(batch.size());
    for (const ViewPair& pair : batch) views.push_back(queries ? pair.query : pair.key);
    return views;
}

}  // namespace

std::pair<double, Gradients> simclr_loss_and_gradients(const Parameters& params,
                                                       const std::vector<ViewPair>& batch,
                                                       double temperature, bool normalize) {
    const std::size_t b = batch.size();
    if (b < 2) fail(ErrKind::invalid, "simclr requires a batch of at least 2 pairs");
    if (!(temperature > 0.0)) fail(ErrKind::invalid, "temperature must be positive");

    std::vector<TokenSequence> sequences = collect_views(batch, true);
    {
        std::vector<TokenSequence> keys = collect_views(batch, false);
        sequences.insert(sequences.end(), keys.begin(), keys.end());
    }
    const std::vector<Embedding> raw = encode_batch(params, sequences);
    std::vector<Embedding> emb = raw;
    if (normalize) {
        for (Embedding& e : emb) l2_normalize(e);
    }

    // probs[i][j]: query i classifying key j; the positive is j == i.
    const double inv_b = 1.0 / static_cast<double>(b);
    double total_loss = 0.0;
    std::vector<std::vector<double>> probs(b, std::vector<double>(b));
    for (std::size_t i = 0; i < b; ++i) {
        double max_logit = -1e300;
        for (std::size_t j = 0; j < b; ++j) {
            probs[i][j] = score(emb[i], emb[b + j]) / temperature;
            max_logit = std::max(max_logit, probs[i][j]);
        }
        double denom = 0.0;
        for (std::size_t j = 0; j < b; ++j) {
            probs[i][j] = std::exp(probs[i][j] - max_logit);
            denom += probs[i][j];
        }
        for (std::size_t j = 0; j < b; ++j) probs[i][j] /= denom;
        total_loss -= std::log(probs[i][i]);
    }
    const double loss = total_loss * inv_b;

    // d loss / d score_ij = (p_ij - [i==j]) / (B * tau); gradients flow into
    // both the query and the key embeddings.
    const std::size_t dim = params.config.embed_dim;
    std::vector<Embedding> upstream(2 * b, Embedding(dim, 0.0));
    for (std::size_t i = 0; i < b; ++i) {
        for (std::size_t j = 0; j < b; ++j) {
            const double g = (probs[i][j] - (i == j ? 1.0 : 0.0)) * inv_b / temperature;
            if (g == 0.0) continue;
            for (std::size_t c = 0; c < dim; ++c) {
                upstream[i][c] += g * emb[b + j][c];
                upstream[b + j][c] += g * emb[i][c];
            }
        }
    }
    if (normalize) {
        for (std::size_t i = 0; i < 2 * b; ++i) {
            upstream[i] = normalize_backward(raw[i], emb[i], upstream[i]);
        }
    }

    return {loss, backward(params, sequences, upstream)};
}

double simclr_step(Parameters& params, OptimizerState& opt, const std::vector<ViewPair>& batch,
                   double temperature, bool normalize) {
    const auto [loss, grads] = simclr_loss_and_gradients(params, batch, temperature, normalize);
    adamw_update(params, grads, opt);
    return loss;
}

double moco_step(MoCoState& state, OptimizerState& opt, const std::vector<ViewPair>& batch,
                 bool normalize) {
    const std::size_t b = batch.size();
    if (b < 1) fail(ErrKind::invalid, "moco requires a batch of at least 1 pair");
    const bool use_queue = state.queue.fill() >= 1;
    if (!use_queue && b < 2) fail(ErrKind::invalid, "no negatives available (empty queue, batch of 1)");

    const std::vector<TokenSequence> query_views = collect_views(batch, true);
    const std::vector<TokenSequence> key_views = collect_views(batch, false);

    const std::vector<Embedding> raw_queries = encode_batch(state.query_params, query_views);
    std::vector<Embedding> queries = raw_queries;
    // Keys come from the momentum encoder and carry no gradient.
    std::vector<Embedding> keys = encode_batch(state.key_params, key_views);
    if (normalize) {
        for (Embedding& e : queries) l2_normalize(e);
        for (Embedding& e : keys) l2_normalize(e);
    }

    const std::size_t dim = state.query_params.config.embed_dim;
    const std::size_t num_negatives = use_queue ? state.queue.fill() : b - 1;
    const double inv_b = 1.0 / static_cast<double>(b);

    double total_loss = 0.0;
    std::vector<Embedding> upstream(b, Embedding(dim, 0.0));
    std::vector<double> scores(1 + num_negatives);
    for (std::size_t i = 0; i < b; ++i) {
        scores[0] = score(queries[i], keys[i]);
        if (use_queue) {
            for (std::size_t nidx = 0; nidx < num_negatives; ++nidx) {
                const double* neg = state.queue.entry(nidx);
                double acc = 0.0;
                for (std::size_t c = 0; c < dim; ++c) acc += queries[i][c] * neg[c];
                scores[1 + nidx] = acc;
            }
        } else {
            std::size_t write = 1;
            for (std::size_t j = 0; j < b; ++j) {
                if (j == i) continue;
                scores[write++] = score(queries[i], keys[j]);
            }
        }

        const InfoNCEResult nce = info_nce_from_scores(scores, state.temperature);
        total_loss += nce.loss;

        // d loss / d query_i = sum_c grad_c * candidate_c.
        auto add_scaled = [&](const double* e, double g) {
            for (std::size_t c = 0; c < dim; ++c) upstream[i][c] += g * e[c] * inv_b;
        };
        add_scaled(keys[i].data(), nce.grad_scores[0]);
        if (use_queue) {
            for (std::size_t nidx = 0; nidx < num_negatives; ++nidx) {
                add_scaled(state.queue.entry(nidx), nce.grad_scores[1 + nidx]);
            }
        } else {
            std::size_t read = 1;
            for (std::size_t j = 0; j < b; ++j) {
                if (j == i) continue;
                add_scaled(keys[j].data(), nce.grad_scores[read++]);
            }
        }
    }
    const double loss = total_loss * inv_b;

    if (normalize) {
        for (std::size_t i = 0; i < b; ++i) {
            upstream[i] = normalize_backward(raw_queries[i], queries[i], upstream[i]);
        }
    }

    const Gradients grads = backward(state.query_params, query_views, upstream);
    adamw_update(state.query_params, grads, opt);
    momentum_update(state.key_params, state.query_params, state.momentum);

    // Keys join the queue only after their own batch's loss.
    for (const Embedding& key : keys) state.queue.push(key);
    return loss;
}

// ---------------------------------------------------------------------------
// Pretraining
// ---------------------------------------------------------------------------

Framework framework_from_name(const std::string& name) {
    if (name == "moco") return Framework::moco;
    if (name == "simclr") return Framework::simclr;
    fail(ErrKind::config, "unknown framework '" + name + "'");
}

const char* framework_name(Framework framework) {
    return framework == Framework::moco ? "moco" : "simclr";
}

Parameters pretrain(const PretrainConfig& config, const SamplingStrategy& data,
                    const Vocabulary& vocab, const std::string& metrics_path) {
    config.encoder.validate();
    config.pair_strategy.validate();
    if (config.batch_size == 0) fail(ErrKind::invalid, "batch_size must be >= 1");

    Rng init_rng(config.seed ^ 0x5eedf00dull);
    Rng loop_rng(config.seed);

    Parameters params = init_parameters(config.encoder, init_rng);

    std::ofstream metrics;
    if (!metrics_path.empty()) {
        metrics.open(metrics_path);
        if (!metrics) fail(ErrKind::io, "cannot write metrics file '" + metrics_path + "'");
        metrics << "step\tloss\tqueue_fill\twall_ms\n";
    }

    if (config.steps == 0) return params;

    OptimizerState opt(config.optimizer, params);
    std::optional<MoCoState> moco;
    if (config.framework == Framework::moco) {
        moco.emplace(params, config.queue_capacity, config.momentum, config.temperature);
    }

    const auto start = std::chrono::steady_clock::now();
    for (std::size_t step = 1; step <= config.steps; ++step) {
        const std::vector<const Document*> docs =
            sample_batch(data, config.batch_size, step - 1, loop_rng);
        std::vector<ViewPair> pairs;
        pairs.reserve(docs.size());
        for (const Document* doc : docs) {
            pairs.push_back(
                make_pair(*doc, config.pair_strategy, vocab, config.encoder.max_len, loop_rng));
        }

        double loss = 0.0;
        std::size_t queue_fill = 0;
        if (config.framework == Framework::moco) {
            loss = moco_step(*moco, opt, pairs, config.normalize);
            queue_fill = moco->queue.fill();
        } else {
            loss = simclr_step(params, opt, pairs, config.temperature, config.normalize);
        }

        if (metrics.is_open() && (step % config.metrics_every == 0 || step == config.steps)) {
            const auto now = std::chrono::steady_clock::now();
            const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now - start).count();
            metrics << step << '\t' << loss << '\t' << queue_fill << '\t' << ms << '\n';
            metrics.flush();
        }
    }

    return config.framework == Framework::moco ? moco->query_params : params;
}

// ---------------------------------------------------------------------------
// Fine-tuning
// ---------------------------------------------------------------------------

namespace {

double dev_ndcg10(const Parameters& params, const std::vector<FinetunePair>& dev_pairs,
                  const Corpus& corpus, const Vocabulary& vocab, bool normalize) {
    const DenseIndex index = build_index(params, corpus, vocab, 32, normalize);
    Run run;
    Qrels qrels;
    for (std::size_t i = 0; i < dev_pairs.size(); ++i) {
        const std::string qid = "dev" + std::to_string(i);
        Embedding q = encode(params, tokenize(vocab, dev_pairs[i].query_text, params.config.max_len));
        if (normalize) l2_normalize(q);
        run.add_results(qid, search(index, q, 10));
        qrels.set(qid, dev_pairs[i].gold_doc_id, 1);
    }
    run.finalize();
    return ndcg_at_k(run, qrels, 10).mean;
}

}  // namespace

Parameters finetune(Parameters params, const std::vector<FinetunePair>& pairs, const Corpus& corpus,
                    const Vocabulary& vocab,
                    const std::optional<std::map<std::string, std::string>>& hard_negatives,
                    const FinetuneConfig& config, const std::vector<FinetunePair>* dev_pairs) {
    if (pairs.empty()) fail(ErrKind::invalid, "finetune needs at least one pair");
    if (config.batch_size < 2) {
        fail(ErrKind::invalid, "finetune batch must contain at least 2 pairs (no negatives otherwise)");
    }
    if (!(config.temperature > 0.0)) fail(ErrKind::invalid, "temperature must be positive");
    for (const FinetunePair& pair : pairs) {
        corpus.at(pair.gold_doc_id);  // throws on unknown ids
    }
    if (hard_negatives) {
        for (const auto& [query, doc_id] : *hard_negatives) corpus.at(doc_id);
    }
    if (corpus.size() < 2) fail(ErrKind::invalid, "finetune corpus needs at least 2 documents");

    Rng rng(config.seed ^ 0xf17e7u);
    OptimizerState opt(config.optimizer, params);
    const std::size_t max_len = params.config.max_len;
    const std::size_t dim = params.config.embed_dim;

    Parameters best = params;
    double best_metric = -1.0;
    std::size_t stale = 0;

    for (std::size_t step = 1; step <= config.steps; ++step) {
        // Batch of pairs; each pair contributes its gold and one sampled
        // negative document to the candidate pool.
        const std::size_t b = config.batch_size;
        std::vector<const FinetunePair*> chosen(b);
        for (std::size_t i = 0; i < b; ++i) chosen[i] = &pairs[rng.below(pairs.size())];

        std::vector<TokenSequence> query_views(b);
        std::vector<TokenSequence> doc_views(2 * b);  // golds first, sampled negatives after
        std::vector<std::size_t> gold_slot(b);
        for (std::size_t i = 0; i < b; ++i) {
            query_views[i] = tokenize(vocab, chosen[i]->query_text, max_len);
            doc_views[i] = tokenize(vocab, document_text(corpus.at(chosen[i]->gold_doc_id)), max_len);
            gold_slot[i] = i;

            const Document* negative = nullptr;
            if (hard_negatives && rng.chance(config.hard_negative_prob)) {
                auto it = hard_negatives->find(chosen[i]->query_text);
                if (it != hard_negatives->end()) negative = &corpus.at(it->second);
            }
            if (!negative) {
                // Uniform non-gold document.
                for (;;) {
                    const Document& candidate = corpus[rng.below(corpus.size())];
                    if (candidate.id != chosen[i]->gold_doc_id) {
                        negative = &candidate;
                        break;
                    }
                }
            }
            doc_views[b + i] = tokenize(vocab, document_text(*negative), max_len);
        }

        std::vector<TokenSequence> sequences = query_views;
        sequences.insert(sequences.end(), doc_views.begin(), doc_views.end());
        const std::vector<Embedding> raw = encode_batch(params, sequences);
        std::vector<Embedding> emb = raw;
        if (config.normalize) {
            for (Embedding& e : emb) l2_normalize(e);
        }

        // Softmax per query over all 2B candidate documents.
        const double inv_b = 1.0 / static_cast<double>(b);
        const std::size_t candidates = 2 * b;
        std::vector<Embedding> upstream(sequences.size(), Embedding(dim, 0.0));
        for (std::size_t i = 0; i < b; ++i) {
            std::vector<double> logits(candidates);
            double max_logit = -1e300;
            for (std::size_t c = 0; c < candidates; ++c) {
                logits[c] = score(emb[i], emb[b + c]) / config.temperature;
                max_logit = std::max(max_logit, logits[c]);
            }
            double denom = 0.0;
            for (std::size_t c = 0; c < candidates; ++c) {
                logits[c] = std::exp(logits[c] - max_logit);
                denom += logits[c];
            }
            for (std::size_t c = 0; c < candidates; ++c) {
                const double p = logits[c] / denom;
                const double g = (p - (c == gold_slot[i] ? 1.0 : 0.0)) * inv_b / config.temperature;
                for (std::size_t x = 0; x < dim; ++x) {
                    upstream[i][x] += g * emb[b + c][x];
                    upstream[b + c][x] += g * emb[i][x];
                }
            }
        }
        if (config.normalize) {
            for (std::size_t i = 0; i < sequences.size(); ++i) {
                upstream[i] = normalize_backward(raw[i], emb[i], upstream[i]);
            }
        }

        const Gradients grads = backward(params, sequences, upstream);
        adamw_update(params, grads, opt);

        if (dev_pairs && config.patience > 0 && step % config.eval_every == 0) {
            const double metric = dev_ndcg10(params, *dev_pairs, corpus, vocab, config.normalize);
            if (metric > best_metric) {
                best_metric = metric;
                best = params;
                stale = 0;
            } else if (++stale >= config.patience) {
                return best;
            }
        }
    }

    if (dev_pairs && config.patience > 0) {
        const double metric = dev_ndcg10(params, *dev_pairs, corpus, vocab, config.normalize);
        return metric > best_metric ? params : best;
    }
    return params;
}

std::map<std::string, std::string> mine_hard_negatives(const Parameters& params,
                                                       const std::vector<FinetunePair>& pairs,
                                                       const Corpus& corpus, const Vocabulary& vocab,
                                                       std::size_t top_k, bool normalize) {
    if (corpus.size() < 2) fail(ErrKind::invalid, "hard-negative mining needs at least 2 documents");
    if (top_k == 0) fail(ErrKind::invalid, "top_k must be >= 1");

    const DenseIndex index = build_index(params, corpus, vocab, 32, normalize);
    std::map<std::string, std::string> negatives;
    for (const FinetunePair& pair : pairs) {
        corpus.at(pair.gold_doc_id);
        Embedding q = encode(params, tokenize(vocab, pair.query_text, params.config.max_len));
        if (normalize) l2_normalize(q);
        // k+1 candidates guarantee a non-gold result even when the gold
        // document tops the ranking.
        const std::vector<ScoredDoc> results = search(index, q, std::max<std::size_t>(top_k, 2) + 1);
        for (const ScoredDoc& result : results) {
            if (result.doc_id != pair.gold_doc_id) {
                negatives[pair.query_text] = result.doc_id;
                break;
            }
        }
    }
    return negatives;
}

}  // namespace densecrab
