#include "densecrab/augment.hpp"

#include <cmath>

#include "densecrab/error.hpp"

namespace densecrab {

PairKind pair_kind_from_name(const std::string& name) {
    if (name == "ict") return PairKind::ict;
    if (name == "crop") return PairKind::crop;
    if (name == "crop+delete") return PairKind::crop_delete;
    if (name == "crop+replace") return PairKind::crop_replace;
    if (name == "crop+mask") return PairKind::crop_mask;
    fail(ErrKind::config, "unknown pair strategy '" + name + "'");
}

const char* pair_kind_name(PairKind kind) {
    switch (kind) {
        case PairKind::ict: return "ict";
        case PairKind::crop: return "crop";
        case PairKind::crop_delete: return "crop+delete";
        case PairKind::crop_replace: return "crop+replace";
        case PairKind::crop_mask: return "crop+mask";
    }
    return "?";
}

void PairStrategy::validate() const {
    if (!(min_ratio > 0.0) || !(min_ratio <= max_ratio) || !(max_ratio <= 1.0)) {
        fail(ErrKind::invalid, "pair strategy requires 0 < min_ratio <= max_ratio <= 1");
    }
    if (perturb_prob < 0.0 || perturb_prob > 1.0 || ict_keep_prob < 0.0 || ict_keep_prob > 1.0) {
        fail(ErrKind::invalid, "pair strategy probabilities must lie in [0, 1]");
    }
}

Span sample_span(std::size_t n, std::size_t min_len, std::size_t max_len, Rng& rng) {
    if (min_len < 1 || min_len > max_len || max_len > n) {
        fail(ErrKind::invalid, "invalid span length bounds");
    }
    const std::size_t len = min_len + static_cast<std::size_t>(rng.below(max_len - min_len + 1));
    const std::size_t a = 1 + static_cast<std::size_t>(rng.below(n - len + 1));
    return Span{a, a + len - 1};
}

TokenSequence slice(const TokenSequence& tokens, Span span) {
    if (span.a < 1 || span.a > span.b || span.b > tokens.size()) {
        fail(ErrKind::invalid, "span out of bounds");
    }
    return TokenSequence(tokens.begin() + static_cast<std::ptrdiff_t>(span.a - 1),
                         tokens.begin() + static_cast<std::ptrdiff_t>(span.b));
}

ViewPair ict_apply(const TokenSequence& tokens, Span span, bool keep_span_in_key) {
    ViewPair pair;
    pair.query = slice(tokens, span);
    if (keep_span_in_key) {
        pair.key = tokens;
    } else {
        pair.key.reserve(tokens.size() - pair.query.size());
        pair.key.insert(pair.key.end(), tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(span.a - 1));
        pair.key.insert(pair.key.end(), tokens.begin() + static_cast<std::ptrdiff_t>(span.b), tokens.end());
    }
    if (pair.key.empty()) fail(ErrKind::invalid, "ict span must leave a non-empty key");
    return pair;
}

ViewPair ict_pair(const TokenSequence& tokens, double keep_prob, Rng& rng) {
    const std::size_t n = tokens.size();
    if (n < 2) fail(ErrKind::invalid, "ict requires a sequence of at least 2 tokens");
    // Span length at most n - 1 keeps the complement non-empty.
    const Span span = sample_span(n, 1, n - 1, rng);
    const bool keep = rng.chance(keep_prob);
    return ict_apply(tokens, span, keep);
}

ViewPair crop_pair(const TokenSequence& tokens, double min_ratio, double max_ratio, Rng& rng) {
    const std::size_t n = tokens.size();
    if (n == 0) fail(ErrKind::invalid, "cannot crop an empty sequence");
    const auto lo = static_cast<std::size_t>(std::ceil(min_ratio * static_cast<double>(n)));
    const auto hi = static_cast<std::size_t>(std::floor(max_ratio * static_cast<double>(n)));
    if (lo < 1 || lo > hi) {
        fail(ErrKind::invalid, "sequence too short for crop ratios (" + std::to_string(n) + " tokens)");
    }
    ViewPair pair;
    pair.query = slice(tokens, sample_span(n, lo, hi, rng));
    pair.key = slice(tokens, sample_span(n, lo, hi, rng));
    return pair;
}

TokenSequence perturb(const TokenSequence& tokens, PerturbMode mode, double p, const Vocabulary& vocab,
                      Rng& rng) {
    if (tokens.empty()) fail(ErrKind::invalid, "cannot perturb an empty sequence");
    if (p < 0.0 || p > 1.0) fail(ErrKind::invalid, "perturbation probability must lie in [0, 1]");
    if (mode == PerturbMode::replace && vocab.num_words() == 0) {
        fail(ErrKind::invalid, "replace perturbation needs a non-reserved vocabulary");
    }

    TokenSequence out;
    out.reserve(tokens.size());
    for (std::uint32_t id : tokens) {
        if (!rng.chance(p)) {
            out.push_back(id);
            continue;
        }
        switch (mode) {
            case PerturbMode::erase:
                break;
            case PerturbMode::replace:
                out.push_back(kNumReservedIds + static_cast<std::uint32_t>(rng.below(vocab.num_words())));
                break;
            case PerturbMode::mask:
                out.push_back(kMaskId);
                break;
        }
    }
    if (out.empty()) {
        out.push_back(tokens[rng.below(tokens.size())]);
    }
    return out;
}

ViewPair make_pair(const Document& doc, const PairStrategy& strategy, const Vocabulary& vocab,
                   std::size_t max_len, Rng& rng) {
    strategy.validate();
    const TokenSequence tokens = tokenize(vocab, document_text(doc), max_len);
    switch (strategy.kind) {
        case PairKind::ict:
            return ict_pair(tokens, strategy.ict_keep_prob, rng);
        case PairKind::crop:
            return crop_pair(tokens, strategy.min_ratio, strategy.max_ratio, rng);
        case PairKind::crop_delete:
        case PairKind::crop_replace:
        case PairKind::crop_mask: {
            ViewPair pair = crop_pair(tokens, strategy.min_ratio, strategy.max_ratio, rng);
            const PerturbMode mode = strategy.kind == PairKind::crop_delete    ? PerturbMode::erase
                                     : strategy.kind == PairKind::crop_replace ? PerturbMode::replace
                                                                               : PerturbMode::mask;
            pair.query = perturb(pair.query, mode, strategy.perturb_prob, vocab, rng);
            pair.key = perturb(pair.key, mode, strategy.perturb_prob, vocab, rng);
            return pair;
        }
    }
    fail(ErrKind::invalid, "unreachable pair kind");
}

}  // namespace densecrab
