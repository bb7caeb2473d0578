#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "densecrab/corpus.hpp"

namespace densecrab {

/// Synthetic corpus: documents drawn from disjoint per-topic word pools, so
/// lexical overlap identifies the topic and the exact word subset identifies
/// the document.
struct SynthSpec {
    std::size_t num_docs = 200;
    std::size_t num_topics = 10;
    std::size_t words_per_topic = 50;
    std::size_t doc_len_min = 64;
    std::size_t doc_len_max = 128;
    std::uint64_t seed = 1;
    std::string source_label = "synthetic";
    std::string id_prefix = "d";
    std::size_t first_topic = 0;  // offset into the topic word space
};

Corpus make_topic_corpus(const SynthSpec& spec);

struct SynthQueries {
    std::vector<Document> queries;  // _id/text records, like the corpus
    Qrels qrels;                    // each query's source document, grade 1
};

/// Span queries: a contiguous word span of a sampled document, with the
/// source document as the single relevant target. Span lengths are drawn
/// between the two ratios of the document length.
SynthQueries make_span_queries(const Corpus& corpus, std::size_t num_queries, double min_ratio,
                               double max_ratio, std::uint64_t seed,
                               const std::string& id_prefix = "q");

void write_queries(const std::vector<Document>& queries, const std::string& path);
std::vector<Document> load_queries(const std::string& path);

}  // namespace densecrab
