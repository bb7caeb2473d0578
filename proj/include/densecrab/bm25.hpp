#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "densecrab/corpus.hpp"
#include "densecrab/index.hpp"
#include "densecrab/tokenizer.hpp"

namespace densecrab {

struct Posting {
    std::uint32_t doc;  // ordinal in corpus order
    std::uint32_t tf;
};

/// Okapi-style inverted index over vocabulary term ids. <unk> tokens are
/// excluded from postings; document length counts in-vocabulary tokens only.
class InvertedIndex {
  public:
    InvertedIndex(std::vector<std::string> doc_ids, std::vector<std::uint32_t> doc_lengths,
                  std::map<std::uint32_t, std::vector<Posting>> postings);

    std::size_t num_docs() const { return doc_ids_.size(); }
    double avgdl() const { return avgdl_; }
    const std::vector<std::string>& doc_ids() const { return doc_ids_; }
    std::uint32_t doc_length(std::size_t ordinal) const { return doc_lengths_[ordinal]; }

    /// Ordinal for a doc id; throws for unknown ids.
    std::size_t ordinal_of(const std::string& doc_id) const;

    const std::vector<Posting>* postings_for(std::uint32_t term) const;
    const std::map<std::uint32_t, std::vector<Posting>>& postings() const { return postings_; }

  private:
    std::vector<std::string> doc_ids_;
    std::vector<std::uint32_t> doc_lengths_;
    double avgdl_;
    std::map<std::uint32_t, std::vector<Posting>> postings_;
    std::map<std::string, std::size_t> ordinal_;
};

InvertedIndex build_inverted(const Corpus& corpus, const Vocabulary& vocab);

/// Okapi BM25 with the smoothed idf ln((N - df + 0.5)/(df + 0.5) + 1).
double bm25_score(const InvertedIndex& index, const std::vector<std::uint32_t>& query_terms,
                  const std::string& doc_id, double k1 = 1.2, double b = 0.75);

/// Exact top-k over documents sharing at least one query term; ties broken
/// by corpus order.
std::vector<ScoredDoc> bm25_search(const InvertedIndex& index,
                                   const std::vector<std::uint32_t>& query_terms, std::size_t k,
                                   double k1 = 1.2, double b = 0.75);

void save_inverted(const InvertedIndex& index, const std::string& path);
InvertedIndex load_inverted(const std::string& path);

}  // namespace densecrab
