#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "densecrab/corpus.hpp"
#include "densecrab/index.hpp"

namespace densecrab {

/// Ranked retrieval results per query, scores non-increasing.
class Run {
  public:
    /// Appends a result; entries are ranked on finalize().
    void add(const std::string& query_id, const std::string& doc_id, double score);

    void add_results(const std::string& query_id, const std::vector<ScoredDoc>& results);

    /// Stable-sorts every query's entries by score descending (insertion
    /// order breaks ties) and rejects duplicate doc ids within a query.
    void finalize();

    const std::map<std::string, std::vector<ScoredDoc>>& ranked() const { return ranked_; }
    std::size_t num_queries() const { return ranked_.size(); }

  private:
    std::map<std::string, std::vector<ScoredDoc>> ranked_;
};

/// TREC format: "qid Q0 docid rank score tag", one line per result.
void save_run(const Run& run, const std::string& path, const std::string& system_tag);
Run load_run(const std::string& path);

struct MetricReport {
    std::string metric;  // "ndcg@10", "recall@100"
    std::size_t k = 0;
    std::map<std::string, double> per_query;  // evaluated queries only
    double mean = 0.0;
    std::size_t skipped = 0;  // run queries without a positive judgment
};

/// nDCG with gains 2^grade - 1 and log2(rank + 1) discounts; the ideal
/// ranking is the query's judged grades sorted descending.
MetricReport ndcg_at_k(const Run& run, const Qrels& qrels, std::size_t k = 10);

/// Fraction of grade >= 1 documents appearing in the top k.
MetricReport recall_at_k(const Run& run, const Qrels& qrels, std::size_t k = 100);

void save_report(const MetricReport& report, const std::string& path);
MetricReport load_report(const std::string& path);

/// Paper-style comparison: one row per dataset, one column per system, plus
/// average and best-on rows (ties credit every tied system).
struct ComparisonTable {
    std::vector<std::string> systems;   // column order
    std::vector<std::string> datasets;  // row order
    std::vector<std::vector<double>> values;  // [dataset][system]
    std::vector<double> averages;             // per system
    std::vector<std::size_t> best_on;         // per system
};

ComparisonTable compare_systems(
    const std::map<std::string, std::map<std::string, MetricReport>>& by_system);

std::string table_to_tsv(const ComparisonTable& table);
void save_table(const ComparisonTable& table, const std::string& path);

}  // namespace densecrab
