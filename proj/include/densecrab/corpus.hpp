#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "densecrab/rng.hpp"

namespace densecrab {

struct Document {
    std::string id;
    std::string title;  // may be empty
    std::string text;   // non-empty after whitespace trim
};

/// Title and body joined the way the encoder and BM25 consume a document.
std::string document_text(const Document& doc);

/// Ordered, immutable-after-load document collection with exact id lookup.
class Corpus {
  public:
    Corpus() = default;
    explicit Corpus(std::string source_label) : source_label_(std::move(source_label)) {}

    /// Rejects duplicate ids and whitespace-only text.
    void add(Document doc);

    const std::vector<Document>& documents() const { return docs_; }
    const Document& operator[](std::size_t i) const { return docs_[i]; }

    const Document* find(const std::string& id) const;
    const Document& at(const std::string& id) const;  // throws if absent

    std::size_t size() const { return docs_.size(); }
    bool empty() const { return docs_.empty(); }
    const std::string& source_label() const { return source_label_; }
    void set_source_label(std::string label) { source_label_ = std::move(label); }

  private:
    std::vector<Document> docs_;
    std::unordered_map<std::string, std::size_t> by_id_;
    std::string source_label_;
};

/// Graded relevance judgments; unknown (query, doc) pairs are grade 0.
class Qrels {
  public:
    /// Last write wins for repeated (query, doc) pairs. Grade must be >= 0.
    void set(const std::string& query_id, const std::string& doc_id, int grade);

    int grade(const std::string& query_id, const std::string& doc_id) const;
    bool has_query(const std::string& query_id) const;

    /// Ordered for deterministic iteration.
    const std::map<std::string, std::map<std::string, int>>& judgments() const { return judgments_; }

    std::size_t num_queries() const { return judgments_.size(); }

  private:
    std::map<std::string, std::map<std::string, int>> judgments_;
};

enum class SamplingMode { single, fifty_fifty, uniform };

SamplingMode sampling_mode_from_name(const std::string& name);
const char* sampling_mode_name(SamplingMode mode);

struct SamplingStrategy {
    SamplingMode mode = SamplingMode::single;
    std::vector<const Corpus*> sources;
};

/// Reads a JSONL corpus: one object per line with "_id" and "text" keys,
/// "title" optional. File order is preserved.
Corpus load_corpus(const std::string& path);

/// Writes the same JSONL shape load_corpus reads (round-trips exactly).
void write_corpus(const Corpus& corpus, const std::string& path);

/// Reads TSV qrels: query-id <TAB> corpus-id <TAB> grade, optional header row.
Qrels load_qrels(const std::string& path);

void write_qrels(const Qrels& qrels, const std::string& path);

/// Draws one training batch. single: the lone source. fifty-fifty: the whole
/// batch comes from sources[batch_index % 2]. uniform: each document is drawn
/// uniformly over the union of all sources (weighting by document count).
std::vector<const Document*> sample_batch(const SamplingStrategy& strategy, std::size_t batch_size,
                                          std::uint64_t batch_index, Rng& rng);

}  // namespace densecrab
