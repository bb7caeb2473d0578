#include "densecrab/corpus.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "densecrab/error.hpp"

namespace densecrab {

using nlohmann::json;

namespace {

std::string trimmed(const std::string& s) {
    std::size_t lo = 0;
    std::size_t hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

}  // namespace

std::string document_text(const Document& doc) {
    if (doc.title.empty()) return doc.text;
    return doc.title + " " + doc.text;
}

void Corpus::add(Document doc) {
    if (trimmed(doc.text).empty()) {
        fail(ErrKind::invalid, "document '" + doc.id + "' has empty text");
    }
    auto [it, inserted] = by_id_.emplace(doc.id, docs_.size());
    if (!inserted) {
        fail(ErrKind::invalid, "duplicate document id '" + doc.id + "'");
    }
    docs_.push_back(std::move(doc));
}

const Document* Corpus::find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &docs_[it->second];
}

const Document& Corpus::at(const std::string& id) const {
    const Document* doc = find(id);
    if (!doc) fail(ErrKind::invalid, "unknown document id '" + id + "'");
    return *doc;
}

void Qrels::set(const std::string& query_id, const std::string& doc_id, int grade) {
    if (grade < 0) fail(ErrKind::invalid, "negative relevance grade for query '" + query_id + "'");
    judgments_[query_id][doc_id] = grade;
}

int Qrels::grade(const std::string& query_id, const std::string& doc_id) const {
    auto qit = judgments_.find(query_id);
    if (qit == judgments_.end()) return 0;
    auto dit = qit->second.find(doc_id);
    return dit == qit->second.end() ? 0 : dit->second;
}

bool Qrels::has_query(const std::string& query_id) const {
    return judgments_.count(query_id) != 0;
}

SamplingMode sampling_mode_from_name(const std::string& name) {
    if (name == "single") return SamplingMode::single;
    if (name == "fifty-fifty") return SamplingMode::fifty_fifty;
    if (name == "uniform") return SamplingMode::uniform;
    fail(ErrKind::config, "unknown sampling mode '" + name + "'");
}

const char* sampling_mode_name(SamplingMode mode) {
    switch (mode) {
        case SamplingMode::single: return "single";
        case SamplingMode::fifty_fifty: return "fifty-fifty";
        case SamplingMode::uniform: return "uniform";
    }
    return "?";
}

Corpus load_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open corpus file '" + path + "'");

    Corpus corpus(path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": invalid JSON: " + e.what());
        }
        if (!obj.is_object() || !obj.contains("_id") || !obj.contains("text") ||
            !obj["_id"].is_string() || !obj["text"].is_string()) {
            fail(ErrKind::parse,
                 path + ":" + std::to_string(line_no) + ": expected object with string \"_id\" and \"text\"");
        }
        Document doc;
        doc.id = obj["_id"].get<std::string>();
        doc.text = obj["text"].get<std::string>();
        if (obj.contains("title")) {
            if (!obj["title"].is_string()) {
                fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": \"title\" must be a string");
            }
            doc.title = obj["title"].get<std::string>();
        }
        if (trimmed(doc.text).empty()) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": document text is empty");
        }
        if (corpus.find(doc.id)) {
            fail(ErrKind::parse,
                 path + ":" + std::to_string(line_no) + ": duplicate document id '" + doc.id + "'");
        }
        corpus.add(std::move(doc));
    }
    return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write corpus file '" + path + "'");
    for (const Document& doc : corpus.documents()) {
        json obj;
        obj["_id"] = doc.id;
        obj["title"] = doc.title;
        obj["text"] = doc.text;
        out << obj.dump() << "\n";
    }
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

Qrels load_qrels(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open qrels file '" + path + "'");

    Qrels qrels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trimmed(line).empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            std::size_t tab = line.find('\t', start);
            if (tab == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, tab - start));
            start = tab + 1;
        }
        if (line_no == 1 && fields.size() == 3 && fields[0] == "query-id" && fields[1] == "corpus-id" &&
            fields[2] == "score") {
            continue;  // header
        }
        if (fields.size() != 3) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": expected 3 tab-separated fields");
        }
        const std::string grade_str = trimmed(fields[2]);
        std::size_t used = 0;
        int grade = 0;
        try {
            grade = std::stoi(grade_str, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != grade_str.size()) {
            fail(ErrKind::parse,
                 path + ":" + std::to_string(line_no) + ": non-integer relevance grade '" + fields[2] + "'");
        }
        if (grade < 0) {
            fail(ErrKind::parse, path + ":" + std::to_string(line_no) + ": negative relevance grade");
        }
        qrels.set(fields[0], fields[1], grade);
    }
    return qrels;
}

void write_qrels(const Qrels& qrels, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write qrels file '" + path + "'");
    out << "query-id\tcorpus-id\tscore\n";
    for (const auto& [qid, docs] : qrels.judgments()) {
        for (const auto& [docid, grade] : docs) {
            out << qid << '\t' << docid << '\t' << grade << '\n';
        }
    }
    if (!out) fail(ErrKind::io, "error while writing '" + path + "'");
}

std::vector<const Document*> sample_batch(const SamplingStrategy& strategy, std::size_t batch_size,
                                          std::uint64_t batch_index, Rng& rng) {
    if (batch_size == 0) fail(ErrKind::invalid, "batch_size must be >= 1");
    if (strategy.sources.empty()) fail(ErrKind::invalid, "sampling strategy has no sources");
    for (const Corpus* source : strategy.sources) {
        if (source == nullptr || source->empty()) {
            fail(ErrKind::invalid, "sampling strategy has an empty source");
        }
    }

    std::vector<const Document*> batch;
    batch.reserve(batch_size);
    switch (strategy.mode) {
        case SamplingMode::single: {
            if (strategy.sources.size() != 1) {
                fail(ErrKind::invalid, "single mode requires exactly 1 source");
            }
            const Corpus& src = *strategy.sources[0];
            for (std::size_t i = 0; i < batch_size; ++i) {
                batch.push_back(&src[rng.below(src.size())]);
            }
            break;
        }
        case SamplingMode::fifty_fifty: {
            if (strategy.sources.size() != 2) {
                fail(ErrKind::invalid, "fifty-fifty mode requires exactly 2 sources");
            }
            const Corpus& src = *strategy.sources[batch_index % 2];
            for (std::size_t i = 0; i < batch_size; ++i) {
                batch.push_back(&src[rng.below(src.size())]);
            }
            break;
        }
        case SamplingMode::uniform: {
            std::size_t total = 0;
            for (const Corpus* source : strategy.sources) total += source->size();
            for (std::size_t i = 0; i < batch_size; ++i) {
                std::size_t pick = rng.below(total);
                for (const Corpus* source : strategy.sources) {
                    if (pick < source->size()) {
                        batch.push_back(&(*source)[pick]);
                        break;
                    }
                    pick -= source->size();
                }
            }
            break;
        }
    }
    return batch;
}

}  // namespace densecrab
