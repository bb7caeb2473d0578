#include "densecrab/index.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>

#include "densecrab/binio.hpp"
#include "densecrab/error.hpp"

namespace densecrab {

DenseIndex::DenseIndex(std::vector<std::string> ids, std::size_t dim, std::vector<double> matrix)
    : ids_(std::move(ids)), dim_(dim), matrix_(std::move(matrix)) {
    if (dim_ == 0) fail(ErrKind::invalid, "index dimension must be positive");
    if (matrix_.size() != ids_.size() * dim_) {
        fail(ErrKind::invalid, "index matrix size does not match id count");
    }
    for (double x : matrix_) {
        if (!std::isfinite(x)) fail(ErrKind::invalid, "index contains non-finite values");
    }
}

DenseIndex build_index(const Parameters& params, const Corpus& corpus, const Vocabulary& vocab,
                       std::size_t batch_size, bool normalize) {
    if (corpus.empty()) fail(ErrKind::invalid, "cannot index an empty corpus");
    if (batch_size == 0) fail(ErrKind::invalid, "batch_size must be >= 1");

    const std::size_t dim = params.config.embed_dim;
    std::vector<std::string> ids;
    ids.reserve(corpus.size());
    std::vector<double> matrix;
    matrix.reserve(corpus.size() * dim);

    std::vector<TokenSequence> batch;
    batch.reserve(batch_size);
    auto flush = [&] {
        if (batch.empty()) return;
        for (Embedding& e : encode_batch(params, batch)) {
            if (normalize) l2_normalize(e);
            matrix.insert(matrix.end(), e.begin(), e.end());
        }
        batch.clear();
    };
    for (const Document& doc : corpus.documents()) {
        ids.push_back(doc.id);
        batch.push_back(tokenize(vocab, document_text(doc), params.config.max_len));
        if (batch.size() == batch_size) flush();
    }
    flush();
    return DenseIndex(std::move(ids), dim, std::move(matrix));
}

std::vector<ScoredDoc> search(const DenseIndex& index, const Embedding& query, std::size_t k) {
    if (k == 0) fail(ErrKind::invalid, "k must be >= 1");
    if (query.size() != index.dim()) fail(ErrKind::invalid, "query dimension does not match index");

    const std::size_t n = index.size();
    std::vector<double> scores(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = index.row(i);
        double acc = 0.0;
        for (std::size_t c = 0; c < query.size(); ++c) acc += query[c] * row[c];
        scores[i] = acc;
    }

    const std::size_t take = std::min(k, n);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    // Earlier corpus position wins ties.
    auto better = [&scores](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      better);

    std::vector<ScoredDoc> out;
    out.reserve(take);
    for (std::size_t r = 0; r < take; ++r) {
        out.push_back(ScoredDoc{index.ids()[order[r]], scores[order[r]]});
    }
    return out;
}

namespace {
constexpr char kMagic[4] = {'D', 'I', 'D', 'X'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_index(const DenseIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrKind::io, "cannot write index '" + path + "'");
    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_u32(out, static_cast<std::uint32_t>(index.dim()));
    binio::write_u64(out, index.size());
    for (const std::string& id : index.ids()) binio::write_string(out, id);
    for (double x : index.matrix()) binio::write_f32(out, static_cast<float>(x));
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

DenseIndex load_index(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrKind::io, "cannot open index '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        fail(ErrKind::format, "'" + path + "' is not a DIDX index");
    }
    const std::uint32_t version = binio::read_u32(in, "version");
    if (version != kVersion) fail(ErrKind::format, "unsupported index version " + std::to_string(version));
    const std::uint32_t dim = binio::read_u32(in, "dim");
    const std::uint64_t count = binio::read_u64(in, "count");
    std::vector<std::string> ids;
    ids.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) ids.push_back(binio::read_string(in, "doc id"));
    std::vector<double> matrix(count * dim);
    for (double& x : matrix) x = static_cast<double>(binio::read_f32(in, "matrix values"));
    if (in.peek() != std::ifstream::traits_type::eof()) {
        fail(ErrKind::format, "trailing bytes after index payload");
    }
    return DenseIndex(std::move(ids), dim, std::move(matrix));
}

}  // namespace densecrab
