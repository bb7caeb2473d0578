#include "densecrab/encoder.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "densecrab/binio.hpp"
#include "densecrab/error.hpp"
#include "densecrab/parallel.hpp"

namespace densecrab {

namespace {

constexpr double kLayerNormEps = 1e-5;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

// y[0..out) = W x + b, W stored [out, in] row-major.
void linear(const Tensor& w, const Tensor& b, const double* x, double* y) {
    const std::size_t out = w.dims[0];
    const std::size_t in = w.dims[1];
    for (std::size_t o = 0; o < out; ++o) {
        const double* wrow = w.v.data() + o * in;
        double acc = b.v[o];
        for (std::size_t i = 0; i < in; ++i) acc += wrow[i] * x[i];
        y[o] = acc;
    }
}

// dx += W^T dy; dW += dy x^T; db += dy.
void linear_backward(const Tensor& w, const double* x, const double* dy, double* dx, Tensor& dw,
                     Tensor& db) {
    const std::size_t out = w.dims[0];
    const std::size_t in = w.dims[1];
    for (std::size_t o = 0; o < out; ++o) {
        const double g = dy[o];
        if (g == 0.0) continue;
        const double* wrow = w.v.data() + o * in;
        double* dwrow = dw.v.data() + o * in;
        for (std::size_t i = 0; i < in; ++i) {
            dx[i] += wrow[i] * g;
            dwrow[i] += g * x[i];
        }
        db.v[o] += g;
    }
}

struct LnStats {
    double mean;
    double rstd;
};

// Row-wise layer norm: y = gamma * (x - mean) * rstd + beta.
LnStats layer_norm(const double* x, std::size_t d, const Tensor& gamma, const Tensor& beta, double* y) {
    double mean = 0.0;
    for (std::size_t i = 0; i < d; ++i) mean += x[i];
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double c = x[i] - mean;
        var += c * c;
    }
    var /= static_cast<double>(d);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    for (std::size_t i = 0; i < d; ++i) {
        y[i] = gamma.v[i] * (x[i] - mean) * rstd + beta.v[i];
    }
    return LnStats{mean, rstd};
}

// dx += backward of layer_norm; accumulates dgamma, dbeta.
void layer_norm_backward(const double* x, std::size_t d, const Tensor& gamma, LnStats stats,
                         const double* dy, double* dx, Tensor& dgamma, Tensor& dbeta) {
    // xhat_i = (x_i - mean) * rstd; dxhat_i = dy_i * gamma_i
    double mean_dxhat = 0.0;
    double mean_dxhat_xhat = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        const double xhat = (x[i] - stats.mean) * stats.rstd;
        const double dxhat = dy[i] * gamma.v[i];
        dgamma.v[i] += dy[i] * xhat;
        dbeta.v[i] += dy[i];
        mean_dxhat += dxhat;
        mean_dxhat_xhat += dxhat * xhat;
    }
    mean_dxhat /= static_cast<double>(d);
    mean_dxhat_xhat /= static_cast<double>(d);
    for (std::size_t i = 0; i < d; ++i) {
        const double xhat = (x[i] - stats.mean) * stats.rstd;
        const double dxhat = dy[i] * gamma.v[i];
        dx[i] += stats.rstd * (dxhat - mean_dxhat - xhat * mean_dxhat_xhat);
    }
}

// Per-sequence activations kept for the backward pass.
struct LayerTape {
    std::vector<double> x_in;    // residual stream entering the layer   [n, d]
    std::vector<double> u1;      // ln1 output                           [n, d]
    std::vector<LnStats> ln1;    // per-row stats
    std::vector<double> q, k, vv;  // projections                        [n, d]
    std::vector<double> probs;   // attention probabilities              [h, n, n]
    std::vector<double> ctx;     // attention-weighted values            [n, d]
    std::vector<double> x_mid;   // stream after the attention residual  [n, d]
    std::vector<double> u2;      // ln2 output                           [n, d]
    std::vector<LnStats> ln2;
    std::vector<double> a1;      // pre-gelu                             [n, f]
    std::vector<double> f1;      // gelu(a1)                             [n, f]
};

struct SeqTape {
    std::size_t n = 0;
    std::vector<bool> nonpad;
    std::size_t nonpad_count = 0;
    std::vector<double> emb;      // token + position embeddings  [n, d]
    std::vector<LayerTape> layers;
    std::vector<double> x_final;  // stream entering the final layer norm [n, d]
    std::vector<double> y;        // final layer norm output              [n, d]
    std::vector<LnStats> lnf;
};

void check_tokens(const Parameters& params, const TokenSequence& tokens) {
    const EncoderConfig& cfg = params.config;
    if (tokens.empty()) fail(ErrKind::invalid, "cannot encode an empty token sequence");
    if (tokens.size() > cfg.max_len) {
        fail(ErrKind::invalid, "sequence length " + std::to_string(tokens.size()) + " exceeds max_len " +
                                   std::to_string(cfg.max_len));
    }
    for (std::uint32_t id : tokens) {
        if (id >= cfg.vocab_size) {
            fail(ErrKind::invalid, "token id " + std::to_string(id) + " out of vocabulary range");
        }
    }
}

// Forward pass for one sequence. When tape is non-null every intermediate
// needed by the backward pass is recorded.
Embedding forward_seq(const Parameters& params, const TokenSequence& tokens, SeqTape* tape) {
    check_tokens(params, tokens);
    const EncoderConfig& cfg = params.config;
    const std::size_t n = tokens.size();
    const std::size_t d = cfg.embed_dim;
    const std::size_t f = cfg.feedforward_dim;
    const std::size_t heads = cfg.num_heads;
    const std::size_t hd = cfg.head_dim();
    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

    std::vector<bool> nonpad(n);
    std::size_t nonpad_count = 0;
    for (std::size_t i = 0; i < n; ++i) {
        nonpad[i] = tokens[i] != kPadId;
        if (nonpad[i]) ++nonpad_count;
    }
    if (nonpad_count == 0) fail(ErrKind::invalid, "sequence contains only <pad> tokens");

    std::vector<double> x(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        const double* te = params.tok_emb.row(tokens[i]);
        const double* pe = params.pos_emb.row(i);
        double* xi = x.data() + i * d;
        for (std::size_t c = 0; c < d; ++c) xi[c] = te[c] + pe[c];
    }

    if (tape) {
        tape->n = n;
        tape->nonpad = nonpad;
        tape->nonpad_count = nonpad_count;
        tape->emb = x;
        tape->layers.resize(cfg.num_layers);
    }

    std::vector<double> u(n * d), q(n * d), k(n * d), vv(n * d), ctx(n * d), tmp(n * d);
    std::vector<double> probs(heads * n * n);
    std::vector<double> a1(n * f), f1(n * f);

    for (std::size_t l = 0; l < cfg.num_layers; ++l) {
        const LayerParams& lp = params.layers[l];
        LayerTape* lt = tape ? &tape->layers[l] : nullptr;
        if (lt) lt->x_in = x;

        std::vector<LnStats> ln1_stats(n);
        for (std::size_t i = 0; i < n; ++i) {
            ln1_stats[i] = layer_norm(x.data() + i * d, d, lp.ln1_gamma, lp.ln1_beta, u.data() + i * d);
        }
        for (std::size_t i = 0; i < n; ++i) {
            linear(lp.attn.wq, lp.attn.bq, u.data() + i * d, q.data() + i * d);
            linear(lp.attn.wk, lp.attn.bk, u.data() + i * d, k.data() + i * d);
            linear(lp.attn.wv, lp.attn.bv, u.data() + i * d, vv.data() + i * d);
        }

        std::fill(probs.begin(), probs.end(), 0.0);
        std::fill(ctx.begin(), ctx.end(), 0.0);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * hd;
            double* hp = probs.data() + h * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double* qi = q.data() + i * d + off;
                double* pi = hp + i * n;
                double maxv = -1e300;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!nonpad[j]) continue;
                    const double* kj = k.data() + j * d + off;
                    double s = 0.0;
                    for (std::size_t c = 0; c < hd; ++c) s += qi[c] * kj[c];
                    s *= inv_sqrt_hd;
                    pi[j] = s;
                    if (s > maxv) maxv = s;
                }
                double sum = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!nonpad[j]) continue;
                    pi[j] = std::exp(pi[j] - maxv);
                    sum += pi[j];
                }
                const double inv_sum = 1.0 / sum;
                double* ci = ctx.data() + i * d + off;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!nonpad[j]) {
                        pi[j] = 0.0;
                        continue;
                    }
                    pi[j] *= inv_sum;
                    const double* vj = vv.data() + j * d + off;
                    for (std::size_t c = 0; c < hd; ++c) ci[c] += pi[j] * vj[c];
                }
            }
        }

        for (std::size_t i = 0; i < n; ++i) {
            linear(lp.attn.wo, lp.attn.bo, ctx.data() + i * d, tmp.data() + i * d);
        }
        for (std::size_t i = 0; i < n * d; ++i) x[i] += tmp[i];

        if (lt) {
            lt->u1 = u;
            lt->ln1 = ln1_stats;
            lt->q = q;
            lt->k = k;
            lt->vv = vv;
            lt->probs = probs;
            lt->ctx = ctx;
            lt->x_mid = x;
        }

        std::vector<LnStats> ln2_stats(n);
        for (std::size_t i = 0; i < n; ++i) {
            ln2_stats[i] = layer_norm(x.data() + i * d, d, lp.ln2_gamma, lp.ln2_beta, u.data() + i * d);
        }
        for (std::size_t i = 0; i < n; ++i) {
            linear(lp.ff_w1, lp.ff_b1, u.data() + i * d, a1.data() + i * f);
        }
        for (std::size_t i = 0; i < n * f; ++i) f1[i] = gelu(a1[i]);
        for (std::size_t i = 0; i < n; ++i) {
            linear(lp.ff_w2, lp.ff_b2, f1.data() + i * f, tmp.data() + i * d);
        }
        for (std::size_t i = 0; i < n * d; ++i) x[i] += tmp[i];

        if (lt) {
            lt->u2 = u;
            lt->ln2 = ln2_stats;
            lt->a1 = a1;
            lt->f1 = f1;
        }
    }

    if (tape) tape->x_final = x;
    std::vector<LnStats> lnf_stats(n);
    for (std::size_t i = 0; i < n; ++i) {
        lnf_stats[i] =
            layer_norm(x.data() + i * d, d, params.final_ln_gamma, params.final_ln_beta, u.data() + i * d);
    }
    if (tape) {
        tape->y = u;
        tape->lnf = lnf_stats;
    }

    Embedding out(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!nonpad[i]) continue;
        const double* yi = u.data() + i * d;
        for (std::size_t c = 0; c < d; ++c) out[c] += yi[c];
    }
    const double inv_m = 1.0 / static_cast<double>(nonpad_count);
    for (std::size_t c = 0; c < d; ++c) out[c] *= inv_m;
    return out;
}

// Per-sequence parameter gradients. Token-embedding rows are sparse (one
// entry per position); everything else is dense.
struct SeqGrad {
    std::vector<std::pair<std::uint32_t, std::vector<double>>> tok_rows;
    Tensor pos_emb;
    std::vector<LayerParams> layers;
    Tensor final_ln_gamma, final_ln_beta;
};

LayerParams zero_layer(const LayerParams& like) {
    LayerParams g;
    g.ln1_gamma = Tensor::zeros(like.ln1_gamma.dims);
    g.ln1_beta = Tensor::zeros(like.ln1_beta.dims);
    g.attn.wq = Tensor::zeros(like.attn.wq.dims);
    g.attn.bq = Tensor::zeros(like.attn.bq.dims);
    g.attn.wk = Tensor::zeros(like.attn.wk.dims);
    g.attn.bk = Tensor::zeros(like.attn.bk.dims);
    g.attn.wv = Tensor::zeros(like.attn.wv.dims);
    g.attn.bv = Tensor::zeros(like.attn.bv.dims);
    g.attn.wo = Tensor::zeros(like.attn.wo.dims);
    g.attn.bo = Tensor::zeros(like.attn.bo.dims);
    g.ln2_gamma = Tensor::zeros(like.ln2_gamma.dims);
    g.ln2_beta = Tensor::zeros(like.ln2_beta.dims);
    g.ff_w1 = Tensor::zeros(like.ff_w1.dims);
    g.ff_b1 = Tensor::zeros(like.ff_b1.dims);
    g.ff_w2 = Tensor::zeros(like.ff_w2.dims);
    g.ff_b2 = Tensor::zeros(like.ff_b2.dims);
    return g;
}

// Reverse pass for one sequence; upstream is d loss / d embedding.
void backward_seq(const Parameters& params, const TokenSequence& tokens, const SeqTape& tape,
                  const Embedding& upstream, SeqGrad& grad) {
    const EncoderConfig& cfg = params.config;
    const std::size_t n = tape.n;
    const std::size_t d = cfg.embed_dim;
    const std::size_t f = cfg.feedforward_dim;
    const std::size_t heads = cfg.num_heads;
    const std::size_t hd = cfg.head_dim();
    const double inv_sqrt_hd = 1.0 / std::sqrt(static_cast<double>(hd));

    grad.pos_emb = Tensor::zeros(params.pos_emb.dims);
    grad.final_ln_gamma = Tensor::zeros(params.final_ln_gamma.dims);
    grad.final_ln_beta = Tensor::zeros(params.final_ln_beta.dims);
    grad.layers.clear();
    grad.layers.reserve(cfg.num_layers);
    for (std::size_t l = 0; l < cfg.num_layers; ++l) grad.layers.push_back(zero_layer(params.layers[l]));
    grad.tok_rows.clear();
    grad.tok_rows.reserve(n);

    // Mean pooling: every non-pad row receives upstream / count.
    const double inv_m = 1.0 / static_cast<double>(tape.nonpad_count);
    std::vector<double> dy(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!tape.nonpad[i]) continue;
        double* dyi = dy.data() + i * d;
        for (std::size_t c = 0; c < d; ++c) dyi[c] = upstream[c] * inv_m;
    }

    std::vector<double> dx(n * d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        layer_norm_backward(tape.x_final.data() + i * d, d, params.final_ln_gamma, tape.lnf[i],
                            dy.data() + i * d, dx.data() + i * d, grad.final_ln_gamma,
                            grad.final_ln_beta);
    }

    std::vector<double> du(n * d), da1(n * f), df1(n * f), dmid(n * d), dctx(n * d), dq(n * d),
        dk(n * d), dv(n * d);

    for (std::size_t l = cfg.num_layers; l-- > 0;) {
        const LayerParams& lp = params.layers[l];
        const LayerTape& lt = tape.layers[l];
        LayerParams& lg = grad.layers[l];

        // Feed-forward sublayer: x_out = x_mid + W2 gelu(W1 ln2(x_mid) + b1) + b2.
        std::fill(df1.begin(), df1.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            linear_backward(lp.ff_w2, lt.f1.data() + i * f, dx.data() + i * d, df1.data() + i * f,
                            lg.ff_w2, lg.ff_b2);
        }
        for (std::size_t i = 0; i < n * f; ++i) da1[i] = df1[i] * gelu_grad(lt.a1[i]);
        std::fill(du.begin(), du.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            linear_backward(lp.ff_w1, lt.u2.data() + i * d, da1.data() + i * f, du.data() + i * d,
                            lg.ff_w1, lg.ff_b1);
        }
        // Residual: gradient w.r.t. x_mid = dx (identity) + ln2 backward of du.
        std::copy(dx.begin(), dx.end(), dmid.begin());
        for (std::size_t i = 0; i < n; ++i) {
            layer_norm_backward(lt.x_mid.data() + i * d, d, lp.ln2_gamma, lt.ln2[i], du.data() + i * d,
                                dmid.data() + i * d, lg.ln2_gamma, lg.ln2_beta);
        }

        // Attention sublayer: x_mid = x_in + Wo ctx + bo.
        std::fill(dctx.begin(), dctx.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            linear_backward(lp.attn.wo, lt.ctx.data() + i * d, dmid.data() + i * d, dctx.data() + i * d,
                            lg.attn.wo, lg.attn.bo);
        }

        std::fill(dq.begin(), dq.end(), 0.0);
        std::fill(dk.begin(), dk.end(), 0.0);
        std::fill(dv.begin(), dv.end(), 0.0);
        std::vector<double> dp(n);
        for (std::size_t h = 0; h < heads; ++h) {
            const std::size_t off = h * hd;
            const double* hp = lt.probs.data() + h * n * n;
            for (std::size_t i = 0; i < n; ++i) {
                const double* pi = hp + i * n;
                const double* dci = dctx.data() + i * d + off;
                // dp_j = <dctx_i, v_j>; dv_j += p_ij dctx_i
                double dot = 0.0;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!tape.nonpad[j]) {
                        dp[j] = 0.0;
                        continue;
                    }
                    const double* vj = lt.vv.data() + j * d + off;
                    double acc = 0.0;
                    for (std::size_t c = 0; c < hd; ++c) acc += dci[c] * vj[c];
                    dp[j] = acc;
                    dot += pi[j] * acc;
                    double* dvj = dv.data() + j * d + off;
                    for (std::size_t c = 0; c < hd; ++c) dvj[c] += pi[j] * dci[c];
                }
                // Softmax backward, then scores -> q, k.
                double* dqi = dq.data() + i * d + off;
                for (std::size_t j = 0; j < n; ++j) {
                    if (!tape.nonpad[j]) continue;
                    const double dsij = pi[j] * (dp[j] - dot) * inv_sqrt_hd;
                    if (dsij == 0.0) continue;
                    const double* kj = lt.k.data() + j * d + off;
                    const double* qi = lt.q.data() + i * d + off;
                    double* dkj = dk.data() + j * d + off;
                    for (std::size_t c = 0; c < hd; ++c) {
                        dqi[c] += dsij * kj[c];
                        dkj[c] += dsij * qi[c];
                    }
                }
            }
        }

        std::fill(du.begin(), du.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            linear_backward(lp.attn.wq, lt.u1.data() + i * d, dq.data() + i * d, du.data() + i * d,
                            lg.attn.wq, lg.attn.bq);
            linear_backward(lp.attn.wk, lt.u1.data() + i * d, dk.data() + i * d, du.data() + i * d,
                            lg.attn.wk, lg.attn.bk);
            linear_backward(lp.attn.wv, lt.u1.data() + i * d, dv.data() + i * d, du.data() + i * d,
                            lg.attn.wv, lg.attn.bv);
        }
        std::copy(dmid.begin(), dmid.end(), dx.begin());
        for (std::size_t i = 0; i < n; ++i) {
            layer_norm_backward(lt.x_in.data() + i * d, d, lp.ln1_gamma, lt.ln1[i], du.data() + i * d,
                                dx.data() + i * d, lg.ln1_gamma, lg.ln1_beta);
        }
    }

    for (std::size_t i = 0; i < n; ++i) {
        const double* dxi = dx.data() + i * d;
        double* dpe = grad.pos_emb.row(i);
        for (std::size_t c = 0; c < d; ++c) dpe[c] += dxi[c];
        grad.tok_rows.emplace_back(tokens[i], std::vector<double>(dxi, dxi + d));
    }
}

void accumulate_tensor(Tensor& dst, const Tensor& src) {
    for (std::size_t i = 0; i < dst.v.size(); ++i) dst.v[i] += src.v[i];
}

Parameters shaped_zeros(const EncoderConfig& config) {
    Parameters p;
    p.config = config;
    const std::uint32_t d = config.embed_dim;
    const std::uint32_t f = config.feedforward_dim;
    p.tok_emb = Tensor::zeros({config.vocab_size, d});
    p.pos_emb = Tensor::zeros({config.max_len, d});
    p.layers.resize(config.num_layers);
    for (LayerParams& lp : p.layers) {
        lp.ln1_gamma = Tensor::zeros({d});
        lp.ln1_beta = Tensor::zeros({d});
        lp.attn.wq = Tensor::zeros({d, d});
        lp.attn.bq = Tensor::zeros({d});
        lp.attn.wk = Tensor::zeros({d, d});
        lp.attn.bk = Tensor::zeros({d});
        lp.attn.wv = Tensor::zeros({d, d});
        lp.attn.bv = Tensor::zeros({d});
        lp.attn.wo = Tensor::zeros({d, d});
        lp.attn.bo = Tensor::zeros({d});
        lp.ln2_gamma = Tensor::zeros({d});
        lp.ln2_beta = Tensor::zeros({d});
        lp.ff_w1 = Tensor::zeros({f, d});
        lp.ff_b1 = Tensor::zeros({f});
        lp.ff_w2 = Tensor::zeros({d, f});
        lp.ff_b2 = Tensor::zeros({d});
    }
    p.final_ln_gamma = Tensor::zeros({d});
    p.final_ln_beta = Tensor::zeros({d});
    return p;
}

}  // namespace

void EncoderConfig::validate() const {
    if (vocab_size == 0 || embed_dim == 0 || num_layers == 0 || num_heads == 0 ||
        feedforward_dim == 0 || max_len == 0) {
        fail(ErrKind::invalid, "encoder config fields must all be positive");
    }
    if (embed_dim % num_heads != 0) {
        fail(ErrKind::invalid, "embed_dim must be divisible by num_heads");
    }
}

Parameters init_parameters(const EncoderConfig& config, Rng& rng) {
    config.validate();
    Parameters p = shaped_zeros(config);

    auto gaussian = [&rng](Tensor& t) {
        for (double& x : t.v) x = 0.02 * rng.normal();
    };
    auto ones = [](Tensor& t) {
        for (double& x : t.v) x = 1.0;
    };

    gaussian(p.tok_emb);
    gaussian(p.pos_emb);
    for (LayerParams& lp : p.layers) {
        ones(lp.ln1_gamma);
        gaussian(lp.attn.wq);
        gaussian(lp.attn.wk);
        gaussian(lp.attn.wv);
        gaussian(lp.attn.wo);
        ones(lp.ln2_gamma);
        gaussian(lp.ff_w1);
        gaussian(lp.ff_w2);
    }
    ones(p.final_ln_gamma);

    for_each_tensor(p, [](const std::string&, Tensor& t) { quantize_f32(t); });
    return p;
}

Gradients zeros_like(const Parameters& params) {
    return shaped_zeros(params.config);
}

std::size_t parameter_count(const Parameters& params) {
    std::size_t total = 0;
    for_each_tensor(params, [&total](const std::string&, const Tensor& t) { total += t.count(); });
    return total;
}

void for_each_tensor(Parameters& params, const std::function<void(const std::string&, Tensor&)>& fn) {
    fn("tok_emb", params.tok_emb);
    fn("pos_emb", params.pos_emb);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const std::string prefix = "layers." + std::to_string(l) + ".";
        LayerParams& lp = params.layers[l];
        fn(prefix + "ln1.gamma", lp.ln1_gamma);
        fn(prefix + "ln1.beta", lp.ln1_beta);
        fn(prefix + "attn.wq", lp.attn.wq);
        fn(prefix + "attn.bq", lp.attn.bq);
        fn(prefix + "attn.wk", lp.attn.wk);
        fn(prefix + "attn.bk", lp.attn.bk);
        fn(prefix + "attn.wv", lp.attn.wv);
        fn(prefix + "attn.bv", lp.attn.bv);
        fn(prefix + "attn.wo", lp.attn.wo);
        fn(prefix + "attn.bo", lp.attn.bo);
        fn(prefix + "ln2.gamma", lp.ln2_gamma);
        fn(prefix + "ln2.beta", lp.ln2_beta);
        fn(prefix + "ff.w1", lp.ff_w1);
        fn(prefix + "ff.b1", lp.ff_b1);
        fn(prefix + "ff.w2", lp.ff_w2);
        fn(prefix + "ff.b2", lp.ff_b2);
    }
    fn("final_ln.gamma", params.final_ln_gamma);
    fn("final_ln.beta", params.final_ln_beta);
}

void for_each_tensor(const Parameters& params,
                     const std::function<void(const std::string&, const Tensor&)>& fn) {
    for_each_tensor(const_cast<Parameters&>(params),
                    [&fn](const std::string& name, Tensor& t) { fn(name, t); });
}

Embedding encode(const Parameters& params, const TokenSequence& tokens) {
    return forward_seq(params, tokens, nullptr);
}

std::vector<Embedding> encode_batch(const Parameters& params, const std::vector<TokenSequence>& batch) {
    for (const TokenSequence& tokens : batch) check_tokens(params, tokens);
    std::vector<Embedding> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = forward_seq(params, batch[i], nullptr); });
    return out;
}

double score(const Embedding& q, const Embedding& d) {
    if (q.size() != d.size()) fail(ErrKind::invalid, "embedding dimension mismatch in score");
    double acc = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) acc += q[i] * d[i];
    return acc;
}

double l2_norm(const Embedding& e) {
    double acc = 0.0;
    for (double x : e) acc += x * x;
    return std::sqrt(acc);
}

void l2_normalize(Embedding& e) {
    const double norm = l2_norm(e);
    if (norm == 0.0) fail(ErrKind::invalid, "cannot normalize a zero embedding");
    for (double& x : e) x /= norm;
}

Gradients backward(const Parameters& params, const std::vector<TokenSequence>& batch,
                   const std::vector<Embedding>& upstream) {
    if (batch.size() != upstream.size()) {
        fail(ErrKind::invalid, "backward: batch and upstream sizes differ");
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        check_tokens(params, batch[i]);
        if (upstream[i].size() != params.config.embed_dim) {
            fail(ErrKind::invalid, "backward: upstream gradient dimension mismatch");
        }
    }

    // Forward + reverse per item (activations are recomputed, not cached
    // across the batch); per-item gradients are then reduced in item order so
    // the result is independent of the worker count.
    std::vector<SeqGrad> per_item(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) {
        SeqTape tape;
        forward_seq(params, batch[i], &tape);
        backward_seq(params, batch[i], tape, upstream[i], per_item[i]);
    });

    Gradients total = zeros_like(params);
    const std::size_t d = params.config.embed_dim;
    for (const SeqGrad& g : per_item) {
        for (const auto& [token, row] : g.tok_rows) {
            double* dst = total.tok_emb.row(token);
            for (std::size_t c = 0; c < d; ++c) dst[c] += row[c];
        }
        accumulate_tensor(total.pos_emb, g.pos_emb);
        for (std::size_t l = 0; l < params.layers.size(); ++l) {
            accumulate_tensor(total.layers[l].ln1_gamma, g.layers[l].ln1_gamma);
            accumulate_tensor(total.layers[l].ln1_beta, g.layers[l].ln1_beta);
            accumulate_tensor(total.layers[l].attn.wq, g.layers[l].attn.wq);
            accumulate_tensor(total.layers[l].attn.bq, g.layers[l].attn.bq);
            accumulate_tensor(total.layers[l].attn.wk, g.layers[l].attn.wk);
            accumulate_tensor(total.layers[l].attn.bk, g.layers[l].attn.bk);
            accumulate_tensor(total.layers[l].attn.wv, g.layers[l].attn.wv);
            accumulate_tensor(total.layers[l].attn.bv, g.layers[l].attn.bv);
            accumulate_tensor(total.layers[l].attn.wo, g.layers[l].attn.wo);
            accumulate_tensor(total.layers[l].attn.bo, g.layers[l].attn.bo);
            accumulate_tensor(total.layers[l].ln2_gamma, g.layers[l].ln2_gamma);
            accumulate_tensor(total.layers[l].ln2_beta, g.layers[l].ln2_beta);
            accumulate_tensor(total.layers[l].ff_w1, g.layers[l].ff_w1);
            accumulate_tensor(total.layers[l].ff_b1, g.layers[l].ff_b1);
            accumulate_tensor(total.layers[l].ff_w2, g.layers[l].ff_w2);
            accumulate_tensor(total.layers[l].ff_b2, g.layers[l].ff_b2);
        }
        accumulate_tensor(total.final_ln_gamma, g.final_ln_gamma);
        accumulate_tensor(total.final_ln_beta, g.final_ln_beta);
    }
    return total;
}

namespace {

constexpr char kMagic[4] = {'D', 'C', 'R', 'B'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_parameters(const Parameters& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrKind::io, "cannot write checkpoint '" + path + "'");
    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_u32(out, params.config.vocab_size);
    binio::write_u32(out, params.config.embed_dim);
    binio::write_u32(out, params.config.num_layers);
    binio::write_u32(out, params.config.num_heads);
    binio::write_u32(out, params.config.feedforward_dim);
    binio::write_u32(out, params.config.max_len);

    std::uint32_t tensor_count = 0;
    for_each_tensor(params, [&tensor_count](const std::string&, const Tensor&) { ++tensor_count; });
    binio::write_u32(out, tensor_count);

    for_each_tensor(params, [&out](const std::string& name, const Tensor& t) {
        binio::write_string(out, name);
        binio::write_u32(out, static_cast<std::uint32_t>(t.dims.size()));
        for (std::uint32_t dim : t.dims) binio::write_u32(out, dim);
        for (double x : t.v) binio::write_f32(out, static_cast<float>(x));
    });
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

Parameters load_parameters(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrKind::io, "cannot open checkpoint '" + path + "'");

    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        fail(ErrKind::format, "'" + path + "' is not a DCRB checkpoint");
    }
    const std::uint32_t version = binio::read_u32(in, "version");
    if (version != kVersion) {
        fail(ErrKind::format, "unsupported checkpoint version " + std::to_string(version));
    }
    EncoderConfig config;
    config.vocab_size = binio::read_u32(in, "vocab_size");
    config.embed_dim = binio::read_u32(in, "embed_dim");
    config.num_layers = binio::read_u32(in, "num_layers");
    config.num_heads = binio::read_u32(in, "num_heads");
    config.feedforward_dim = binio::read_u32(in, "feedforward_dim");
    config.max_len = binio::read_u32(in, "max_len");
    config.validate();

    const std::uint32_t tensor_count = binio::read_u32(in, "tensor count");

    Parameters params = shaped_zeros(config);
    std::uint32_t seen = 0;
    for_each_tensor(params, [&](const std::string& name, Tensor& t) {
        const std::string stored_name = binio::read_string(in, "tensor name");
        if (stored_name != name) {
            fail(ErrKind::format, "unexpected tensor '" + stored_name + "' (expected '" + name + "')");
        }
        const std::uint32_t rank = binio::read_u32(in, "tensor rank");
        if (rank != t.dims.size()) fail(ErrKind::format, "tensor '" + name + "' has wrong rank");
        for (std::size_t i = 0; i < rank; ++i) {
            const std::uint32_t dim = binio::read_u32(in, "tensor dim");
            if (dim != t.dims[i]) fail(ErrKind::format, "tensor '" + name + "' has wrong shape");
        }
        for (double& x : t.v) x = static_cast<double>(binio::read_f32(in, "tensor values"));
        ++seen;
    });
    if (seen != tensor_count) {
        fail(ErrKind::format, "checkpoint tensor count mismatch");
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        fail(ErrKind::format, "trailing bytes after checkpoint payload");
    }
    return params;
}

}  // namespace densecrab
