#include "densecrab/tokenizer.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "densecrab/error.hpp"

namespace densecrab {

namespace {

bool is_separator(unsigned char c) {
    return std::isspace(c) || std::ispunct(c);
}

const std::string kReservedNames[kNumReservedIds] = {"<pad>", "<unk>", "<mask>"};

}  // namespace

std::vector<std::string> split_words(const std::string& text) {
    std::vector<std::string> words;
    std::string word;
    for (char raw : text) {
        const auto c = static_cast<unsigned char>(raw);
        if (is_separator(c)) {
            if (!word.empty()) {
                words.push_back(std::move(word));
                word.clear();
            }
        } else {
            word.push_back(static_cast<char>(std::tolower(c)));
        }
    }
    if (!word.empty()) words.push_back(std::move(word));
    return words;
}

Vocabulary::Vocabulary() {
    id_to_token_.assign(kReservedNames, kReservedNames + kNumReservedIds);
}

Vocabulary Vocabulary::build(const Corpus& corpus, std::size_t max_size) {
    if (corpus.empty()) fail(ErrKind::invalid, "cannot build a vocabulary from an empty corpus");
    if (max_size <= kNumReservedIds) {
        fail(ErrKind::invalid, "vocabulary max_size must exceed the 3 reserved ids");
    }

    std::unordered_map<std::string, std::uint64_t> counts;
    for (const Document& doc : corpus.documents()) {
        for (std::string& w : split_words(document_text(doc))) {
            ++counts[std::move(w)];
        }
    }

    std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(), counts.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const std::size_t keep = std::min(ranked.size(), max_size - kNumReservedIds);
    std::vector<std::string> tokens;
    tokens.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) tokens.push_back(std::move(ranked[i].first));
    return from_tokens(std::move(tokens));
}

Vocabulary Vocabulary::from_tokens(std::vector<std::string> tokens) {
    Vocabulary vocab;
    vocab.id_to_token_.reserve(kNumReservedIds + tokens.size());
    for (std::string& token : tokens) {
        const auto id = static_cast<std::uint32_t>(vocab.id_to_token_.size());
        auto [it, inserted] = vocab.token_to_id_.emplace(token, id);
        if (!inserted) fail(ErrKind::invalid, "duplicate vocabulary token '" + token + "'");
        vocab.id_to_token_.push_back(std::move(token));
    }
    return vocab;
}

std::uint32_t Vocabulary::id_of(const std::string& token) const {
    auto it = token_to_id_.find(token);
    return it == token_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::token_of(std::uint32_t id) const {
    if (id >= id_to_token_.size()) {
        fail(ErrKind::invalid, "token id " + std::to_string(id) + " out of range");
    }
    return id_to_token_[id];
}

void Vocabulary::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write vocabulary file '" + path + "'");
    out << "# one token per line; id = line index below this header + 3\n";
    out << "# reserved ids: 0=<pad> 1=<unk> 2=<mask>\n";
    for (std::size_t id = kNumReservedIds; id < id_to_token_.size(); ++id) {
        out << id_to_token_[id] << '\n';
    }
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

Vocabulary Vocabulary::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open vocabulary file '" + path + "'");
    std::vector<std::string> tokens;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty() && line[0] == '#') continue;
        if (line.empty()) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": empty token line");
        }
        tokens.push_back(line);
    }
    return from_tokens(std::move(tokens));
}

TokenSequence tokenize(const Vocabulary& vocab, const std::string& text, std::size_t max_len) {
    if (max_len == 0) fail(ErrKind::invalid, "max_len must be >= 1");
    TokenSequence ids;
    for (const std::string& word : split_words(text)) {
        if (ids.size() == max_len) break;
        ids.push_back(vocab.id_of(word));
    }
    return ids;
}

}  // namespace densecrab
