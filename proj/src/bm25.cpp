#include "densecrab/bm25.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include "densecrab/binio.hpp"
#include "densecrab/error.hpp"

namespace densecrab {

InvertedIndex::InvertedIndex(std::vector<std::string> doc_ids, std::vector<std::uint32_t> doc_lengths,
                             std::map<std::uint32_t, std::vector<Posting>> postings)
    : doc_ids_(std::move(doc_ids)), doc_lengths_(std::move(doc_lengths)), postings_(std::move(postings)) {
    if (doc_ids_.empty()) fail(ErrKind::invalid, "inverted index needs at least one document");
    if (doc_ids_.size() != doc_lengths_.size()) {
        fail(ErrKind::invalid, "doc id and length tables differ in size");
    }
    std::uint64_t total = 0;
    for (std::uint32_t len : doc_lengths_) total += len;
    avgdl_ = static_cast<double>(total) / static_cast<double>(doc_lengths_.size());
    for (std::size_t i = 0; i < doc_ids_.size(); ++i) {
        auto [it, inserted] = ordinal_.emplace(doc_ids_[i], i);
        if (!inserted) fail(ErrKind::invalid, "duplicate document id '" + doc_ids_[i] + "'");
    }
    for (auto& [term, plist] : postings_) {
        if (!std::is_sorted(plist.begin(), plist.end(),
                            [](const Posting& a, const Posting& b) { return a.doc < b.doc; })) {
            std::sort(plist.begin(), plist.end(),
                      [](const Posting& a, const Posting& b) { return a.doc < b.doc; });
        }
    }
}

std::size_t InvertedIndex::ordinal_of(const std::string& doc_id) const {
    auto it = ordinal_.find(doc_id);
    if (it == ordinal_.end()) fail(ErrKind::invalid, "unknown document id '" + doc_id + "'");
    return it->second;
}

const std::vector<Posting>* InvertedIndex::postings_for(std::uint32_t term) const {
    auto it = postings_.find(term);
    return it == postings_.end() ? nullptr : &it->second;
}

InvertedIndex build_inverted(const Corpus& corpus, const Vocabulary& vocab) {
    if (corpus.empty()) fail(ErrKind::invalid, "cannot index an empty corpus");

    std::vector<std::string> doc_ids;
    std::vector<std::uint32_t> doc_lengths;
    doc_ids.reserve(corpus.size());
    doc_lengths.reserve(corpus.size());
    std::map<std::uint32_t, std::vector<Posting>> postings;

    for (std::size_t ordinal = 0; ordinal < corpus.size(); ++ordinal) {
        const Document& doc = corpus[ordinal];
        doc_ids.push_back(doc.id);
        std::unordered_map<std::uint32_t, std::uint32_t> tf;
        std::uint32_t length = 0;
        for (const std::string& word : split_words(document_text(doc))) {
            const std::uint32_t id = vocab.id_of(word);
            if (id == kUnkId) continue;
            ++tf[id];
            ++length;
        }
        doc_lengths.push_back(length);
        for (const auto& [term, freq] : tf) {
            postings[term].push_back(Posting{static_cast<std::uint32_t>(ordinal), freq});
        }
    }
    return InvertedIndex(std::move(doc_ids), std::move(doc_lengths), std::move(postings));
}

namespace {

double idf(const InvertedIndex& index, std::size_t df) {
    const double n = static_cast<double>(index.num_docs());
    const double d = static_cast<double>(df);
    return std::log((n - d + 0.5) / (d + 0.5) + 1.0);
}

std::uint32_t term_freq(const std::vector<Posting>& plist, std::uint32_t doc) {
    auto it = std::lower_bound(plist.begin(), plist.end(), doc,
                               [](const Posting& p, std::uint32_t d) { return p.doc < d; });
    if (it == plist.end() || it->doc != doc) return 0;
    return it->tf;
}

double score_one(const InvertedIndex& index, const std::vector<std::uint32_t>& query_terms,
                 std::uint32_t ordinal, double k1, double b) {
    const double dl = index.doc_length(ordinal);
    const double len_norm = k1 * (1.0 - b + b * dl / index.avgdl());
    double total = 0.0;
    for (std::uint32_t term : query_terms) {
        const std::vector<Posting>* plist = index.postings_for(term);
        if (!plist) continue;
        const double tf = term_freq(*plist, ordinal);
        if (tf == 0.0) continue;
        total += idf(index, plist->size()) * tf * (k1 + 1.0) / (tf + len_norm);
    }
    return total;
}

}  // namespace

double bm25_score(const InvertedIndex& index, const std::vector<std::uint32_t>& query_terms,
                  const std::string& doc_id, double k1, double b) {
    const std::size_t ordinal = index.ordinal_of(doc_id);
    return score_one(index, query_terms, static_cast<std::uint32_t>(ordinal), k1, b);
}

std::vector<ScoredDoc> bm25_search(const InvertedIndex& index,
                                   const std::vector<std::uint32_t>& query_terms, std::size_t k,
                                   double k1, double b) {
    if (k == 0) fail(ErrKind::invalid, "k must be >= 1");

    // Candidates: every document containing at least one query term.
    std::vector<bool> seen(index.num_docs(), false);
    std::vector<std::uint32_t> candidates;
    for (std::uint32_t term : query_terms) {
        const std::vector<Posting>* plist = index.postings_for(term);
        if (!plist) continue;
        for (const Posting& p : *plist) {
            if (!seen[p.doc]) {
                seen[p.doc] = true;
                candidates.push_back(p.doc);
            }
        }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<ScoredDoc> scored;
    scored.reserve(candidates.size());
    std::vector<double> values(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        values[i] = score_one(index, query_terms, candidates[i], k1, b);
    }
    std::vector<std::size_t> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    const std::size_t take = std::min(k, candidates.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](std::size_t a, std::size_t b2) {
                          if (values[a] != values[b2]) return values[a] > values[b2];
                          return candidates[a] < candidates[b2];
                      });
    for (std::size_t r = 0; r < take; ++r) {
        scored.push_back(ScoredDoc{index.doc_ids()[candidates[order[r]]], values[order[r]]});
    }
    return scored;
}

namespace {
constexpr char kMagic[4] = {'D', 'B', 'M', 'I'};
constexpr std::uint32_t kVersion = 1;
}  // namespace

void save_inverted(const InvertedIndex& index, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrKind::io, "cannot write inverted index '" + path + "'");
    out.write(kMagic, 4);
    binio::write_u32(out, kVersion);
    binio::write_u64(out, index.num_docs());
    for (std::size_t i = 0; i < index.num_docs(); ++i) {
        binio::write_string(out, index.doc_ids()[i]);
        binio::write_u32(out, index.doc_length(i));
    }
    binio::write_u64(out, index.postings().size());
    for (const auto& [term, plist] : index.postings()) {
        binio::write_u32(out, term);
        binio::write_u64(out, plist.size());
        for (const Posting& p : plist) {
            binio::write_u32(out, p.doc);
            binio::write_u32(out, p.tf);
        }
    }
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

InvertedIndex load_inverted(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrKind::io, "cannot open inverted index '" + path + "'");
    char magic[4];
    in.read(magic, 4);
    if (in.gcount() != 4 || std::memcmp(magic, kMagic, 4) != 0) {
        fail(ErrKind::format, "'" + path + "' is not a DBMI inverted index");
    }
    const std::uint32_t version = binio::read_u32(in, "version");
    if (version != kVersion) {
        fail(ErrKind::format, "unsupported inverted index version " + std::to_string(version));
    }
    const std::uint64_t num_docs = binio::read_u64(in, "doc count");
    std::vector<std::string> doc_ids;
    std::vector<std::uint32_t> doc_lengths;
    doc_ids.reserve(num_docs);
    doc_lengths.reserve(num_docs);
    for (std::uint64_t i = 0; i < num_docs; ++i) {
        doc_ids.push_back(binio::read_string(in, "doc id"));
        doc_lengths.push_back(binio::read_u32(in, "doc length"));
    }
    const std::uint64_t num_terms = binio::read_u64(in, "term count");
    std::map<std::uint32_t, std::vector<Posting>> postings;
    for (std::uint64_t t = 0; t < num_terms; ++t) {
        const std::uint32_t term = binio::read_u32(in, "term id");
        const std::uint64_t count = binio::read_u64(in, "postings count");
        std::vector<Posting> plist;
        plist.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i) {
            const std::uint32_t doc = binio::read_u32(in, "posting doc");
            const std::uint32_t tf = binio::read_u32(in, "posting tf");
            plist.push_back(Posting{doc, tf});
        }
        postings.emplace(term, std::move(plist));
    }
    if (in.peek() != std::ifstream::traits_type::eof()) {
        fail(ErrKind::format, "trailing bytes after inverted index payload");
    }
    return InvertedIndex(std::move(doc_ids), std::move(doc_lengths), std::move(postings));
}

}  // namespace densecrab
