#pragma once

#include <cstddef>
#include <string>

#include "densecrab/rng.hpp"
#include "densecrab/tokenizer.hpp"

namespace densecrab {

/// Contiguous token span, 1-based inclusive: 1 <= a <= b <= n.
struct Span {
    std::size_t a = 1;
    std::size_t b = 1;
    std::size_t length() const { return b - a + 1; }
};

enum class PairKind { ict, crop, crop_delete, crop_replace, crop_mask };

PairKind pair_kind_from_name(const std::string& name);
const char* pair_kind_name(PairKind kind);

enum class PerturbMode { erase, replace, mask };

struct PairStrategy {
    PairKind kind = PairKind::crop;
    double min_ratio = 0.05;
    double max_ratio = 0.5;
    double perturb_prob = 0.1;
    double ict_keep_prob = 0.1;

    void validate() const;
};

struct ViewPair {
    TokenSequence query;
    TokenSequence key;
};

/// Span of length uniform in [min_len, max_len], then start position uniform
/// among the valid positions. Requires 1 <= min_len <= max_len <= n.
Span sample_span(std::size_t n, std::size_t min_len, std::size_t max_len, Rng& rng);

TokenSequence slice(const TokenSequence& tokens, Span span);

/// Query = the span; key = its complement, or the whole sequence when the
/// span is kept in the key.
ViewPair ict_apply(const TokenSequence& tokens, Span span, bool keep_span_in_key);

ViewPair ict_pair(const TokenSequence& tokens, double keep_prob, Rng& rng);

/// Two independently sampled contiguous spans; lengths drawn uniformly in
/// [ceil(min_ratio*n), floor(max_ratio*n)].
ViewPair crop_pair(const TokenSequence& tokens, double min_ratio, double max_ratio, Rng& rng);

/// Each token is independently affected with probability p. erase removes
/// it, replace substitutes a random non-reserved id, mask substitutes <mask>.
/// Never returns an empty sequence: if everything was erased, one uniformly
/// chosen original token is kept.
TokenSequence perturb(const TokenSequence& tokens, PerturbMode mode, double p, const Vocabulary& vocab,
                      Rng& rng);

/// Tokenizes the document and dispatches on strategy.kind; crop+X kinds
/// perturb both views after cropping.
ViewPair make_pair(const Document& doc, const PairStrategy& strategy, const Vocabulary& vocab,
                   std::size_t max_len, Rng& rng);

}  // namespace densecrab
