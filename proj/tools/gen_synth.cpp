// Generates the bundled synthetic retrieval datasets: a topic-structured
// corpus, held-out span queries and their qrels.

#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "densecrab/corpus.hpp"
#include "densecrab/error.hpp"
#include "densecrab/synth.hpp"

int main(int argc, char** argv) {
    CLI::App app{"densecrab-gensynth: synthetic topic-corpus generator"};

    std::string out_dir = ".";
    std::size_t docs = 200;
    std::size_t topics = 10;
    std::size_t topic_vocab = 50;
    std::size_t doc_len_min = 64;
    std::size_t doc_len_max = 128;
    std::size_t queries = 50;
    double query_min_ratio = 0.05;
    double query_max_ratio = 0.5;
    std::uint64_t seed = 1;
    bool two_sources = false;

    app.add_option("--out-dir", out_dir, "output directory");
    app.add_option("--docs", docs, "number of documents");
    app.add_option("--topics", topics, "number of disjoint topics");
    app.add_option("--topic-vocab", topic_vocab, "words per topic");
    app.add_option("--doc-len-min", doc_len_min, "minimum document length in words");
    app.add_option("--doc-len-max", doc_len_max, "maximum document length in words");
    app.add_option("--queries", queries, "number of held-out span queries");
    app.add_option("--query-min-ratio", query_min_ratio, "minimum query span ratio");
    app.add_option("--query-max-ratio", query_max_ratio, "maximum query span ratio");
    app.add_option("--seed", seed, "random seed");
    app.add_flag("--two-sources", two_sources,
                 "also split the topics into two disjoint corpora (corpus_a/corpus_b)");

    CLI11_PARSE(app, argc, argv);

    try {
        std::filesystem::create_directories(out_dir);

        densecrab::SynthSpec spec;
        spec.num_docs = docs;
        spec.num_topics = topics;
        spec.words_per_topic = topic_vocab;
        spec.doc_len_min = doc_len_min;
        spec.doc_len_max = doc_len_max;
        spec.seed = seed;

        const densecrab::Corpus corpus = densecrab::make_topic_corpus(spec);
        densecrab::write_corpus(corpus, out_dir + "/corpus.jsonl");

        densecrab::SynthQueries qs = densecrab::make_span_queries(corpus, queries, query_min_ratio,
                                                                  query_max_ratio, seed ^ 0x9e37u);
        densecrab::write_queries(qs.queries, out_dir + "/queries.jsonl");
        densecrab::write_qrels(qs.qrels, out_dir + "/qrels.tsv");

        if (two_sources) {
            densecrab::SynthSpec a = spec;
            a.num_docs = docs / 2;
            a.num_topics = std::max<std::size_t>(1, topics / 2);
            a.id_prefix = "a";
            a.seed = seed ^ 0xaaaau;
            densecrab::write_corpus(densecrab::make_topic_corpus(a), out_dir + "/corpus_a.jsonl");

            densecrab::SynthSpec b = a;
            b.id_prefix = "b";
            b.first_topic = a.num_topics;  // disjoint topic ranges
            b.seed = seed ^ 0xbbbbu;
            densecrab::write_corpus(densecrab::make_topic_corpus(b), out_dir + "/corpus_b.jsonl");
        }

        std::cerr << "wrote synthetic dataset to " << out_dir << "\n";
        return 0;
    } catch (const densecrab::Error& e) {
        std::cerr << "error:" << densecrab::err_kind_name(e.kind()) << ": " << e.what() << "\n";
        return 1;
    }
}
