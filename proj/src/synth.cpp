#include "densecrab/synth.hpp"

#include <cmath>
#include <cstdio>

#include "densecrab/error.hpp"
#include "densecrab/rng.hpp"
#include "densecrab/tokenizer.hpp"

namespace densecrab {

namespace {

std::string topic_word(std::size_t topic, std::size_t word) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "t%03zuw%03zu", topic, word);
    return buf;
}

}  // namespace

Corpus make_topic_corpus(const SynthSpec& spec) {
    if (spec.num_docs == 0 || spec.num_topics == 0 || spec.words_per_topic == 0) {
        fail(ErrKind::invalid, "synthetic corpus needs positive sizes");
    }
    if (spec.doc_len_min == 0 || spec.doc_len_min > spec.doc_len_max) {
        fail(ErrKind::invalid, "invalid document length range");
    }

    Rng rng(spec.seed);
    Corpus corpus(spec.source_label);
    const int id_width = static_cast<int>(std::to_string(spec.num_docs).size());
    for (std::size_t i = 0; i < spec.num_docs; ++i) {
        const std::size_t topic = spec.first_topic + i % spec.num_topics;
        const std::size_t len =
            spec.doc_len_min + static_cast<std::size_t>(rng.below(spec.doc_len_max - spec.doc_len_min + 1));
        std::string text;
        for (std::size_t w = 0; w < len; ++w) {
            if (w > 0) text.push_back(' ');
            text += topic_word(topic, rng.below(spec.words_per_topic));
        }
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "%s%0*zu", spec.id_prefix.c_str(), id_width, i + 1);
        corpus.add(Document{idbuf, "", std::move(text)});
    }
    return corpus;
}

SynthQueries make_span_queries(const Corpus& corpus, std::size_t num_queries, double min_ratio,
                               double max_ratio, std::uint64_t seed, const std::string& id_prefix) {
    if (corpus.empty()) fail(ErrKind::invalid, "cannot build queries from an empty corpus");
    if (!(min_ratio > 0.0) || !(min_ratio <= max_ratio) || !(max_ratio <= 1.0)) {
        fail(ErrKind::invalid, "query span ratios must satisfy 0 < min <= max <= 1");
    }

    Rng rng(seed);
    SynthQueries out;
    const int id_width = static_cast<int>(std::to_string(num_queries).size());
    for (std::size_t i = 0; i < num_queries; ++i) {
        const Document& doc = corpus[rng.below(corpus.size())];
        const std::vector<std::string> words = split_words(document_text(doc));
        const std::size_t n = words.size();
        const auto lo = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(min_ratio * n)));
        const auto hi = std::max(lo, static_cast<std::size_t>(std::floor(max_ratio * n)));
        const std::size_t len = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
        const std::size_t start = static_cast<std::size_t>(rng.below(n - len + 1));

        std::string text;
        for (std::size_t w = start; w < start + len; ++w) {
            if (w > start) text.push_back(' ');
            text += words[w];
        }
        char idbuf[32];
        std::snprintf(idbuf, sizeof(idbuf), "%s%0*zu", id_prefix.c_str(), id_width, i + 1);
        out.queries.push_back(Document{idbuf, "", std::move(text)});
        out.qrels.set(out.queries.back().id, doc.id, 1);
    }
    return out;
}

void write_queries(const std::vector<Document>& queries, const std::string& path) {
    Corpus holder("queries");
    for (const Document& q : queries) holder.add(q);
    write_corpus(holder, path);
}

std::vector<Document> load_queries(const std::string& path) {
    return load_corpus(path).documents();
}

}  // namespace densecrab
