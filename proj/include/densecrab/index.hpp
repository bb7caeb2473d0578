#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "densecrab/corpus.hpp"
#include "densecrab/encoder.hpp"
#include "densecrab/tokenizer.hpp"

namespace densecrab {

struct ScoredDoc {
    std::string doc_id;
    double score;
};

/// Exact dot-product retrieval over an embedding matrix in corpus order.
class DenseIndex {
  public:
    DenseIndex(std::vector<std::string> ids, std::size_t dim, std::vector<double> matrix);

    std::size_t size() const { return ids_.size(); }
    std::size_t dim() const { return dim_; }
    const std::vector<std::string>& ids() const { return ids_; }
    const double* row(std::size_t i) const { return matrix_.data() + i * dim_; }
    const std::vector<double>& matrix() const { return matrix_; }

  private:
    std::vector<std::string> ids_;
    std::size_t dim_;
    std::vector<double> matrix_;
};

/// Row i = encode(document i), in corpus order. Documents are encoded in
/// batches of batch_size; normalize applies L2 normalization per row.
DenseIndex build_index(const Parameters& params, const Corpus& corpus, const Vocabulary& vocab,
                       std::size_t batch_size = 32, bool normalize = false);

/// Exact top-min(k, N) by dot product; ties broken by corpus order.
std::vector<ScoredDoc> search(const DenseIndex& index, const Embedding& query, std::size_t k);

/// Binary format: magic "DIDX", version, dim, count, id table, float32
/// row-major matrix. load(save(x)) preserves ids exactly and values to
/// float32 precision; the file itself round-trips bit-exactly.
void save_index(const DenseIndex& index, const std::string& path);
DenseIndex load_index(const std::string& path);

}  // namespace densecrab
