// End-to-end checks of the densecrab binary: artifact formats, exit codes,
// determinism, and validation order.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "densecrab/corpus.hpp"
#include "densecrab/synth.hpp"

using namespace densecrab;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

class Workspace {
  public:
    Workspace() {
        dir_ = fs::temp_directory_path() / ("densecrab_cli_" + std::to_string(::getpid()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }

    const fs::path& dir() const { return dir_; }
    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    CommandResult run(const std::string& args) const {
        const std::string out_file = path("_stdout");
        const std::string err_file = path("_stderr");
        const std::string command =
            std::string(DENSECRAB_BIN) + " " + args + " > " + out_file + " 2> " + err_file;
        const int status = std::system(command.c_str());
        CommandResult result;
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        result.out = slurp(out_file);
        result.err = slurp(err_file);
        return result;
    }

    void write(const std::string& name, const std::string& content) const {
        std::ofstream(path(name)) << content;
    }

  private:
    fs::path dir_;
};

/// Small, fast synthetic retrieval dataset on disk.
void make_dataset(const Workspace& ws) {
    SynthSpec spec;
    spec.num_docs = 60;
    spec.num_topics = 6;
    spec.words_per_topic = 30;
    spec.doc_len_min = 32;
    spec.doc_len_max = 64;
    spec.seed = 11;
    const Corpus corpus = make_topic_corpus(spec);
    write_corpus(corpus, ws.path("corpus.jsonl"));

    const SynthQueries queries = make_span_queries(corpus, 12, 0.1, 0.5, 12);
    write_queries(queries.queries, ws.path("queries.jsonl"));
    write_qrels(queries.qrels, ws.path("qrels.tsv"));
}

std::string small_config(const Workspace& ws) {
    std::ostringstream cfg;
    cfg << "seed = 77\n"
        << "[data]\n"
        << "mode = single\n"
        << "source = " << ws.path("corpus.jsonl") << "\n"
        << "vocab = " << ws.path("vocab.txt") << "\n"
        << "[encoder]\n"
        << "embed_dim = 16\nnum_layers = 1\nnum_heads = 4\nfeedforward_dim = 32\nmax_len = 64\n"
        << "[augment]\n"
        << "kind = crop\nmin_ratio = 0.2\nmax_ratio = 0.6\n"
        << "[contrastive]\n"
        << "framework = moco\nqueue_capacity = 64\nmomentum = 0.95\nsteps = 8\nbatch_size = 8\n"
        << "metrics_every = 4\n"
        << "[optimizer]\n"
        << "learning_rate = 1e-3\n"
        << "[finetune]\n"
        << "steps = 4\nbatch_size = 4\n"
        << "[ablate]\n"
        << "steps = 4\nbatch_size = 4\nqueue_sizes = 8, 16\n";
    return cfg.str();
}

}  // namespace

TEST_CASE("full dense pipeline through the binary", "[cli]") {
    Workspace ws;
    make_dataset(ws);

    auto vocab = ws.run("build-vocab --corpus " + ws.path("corpus.jsonl") + " --out " +
                        ws.path("vocab.txt") + " --max-size 512");
    REQUIRE(vocab.exit_code == 0);
    REQUIRE(fs::exists(ws.path("vocab.txt")));

    ws.write("run.cfg", small_config(ws));
    auto pretrain = ws.run("pretrain --config " + ws.path("run.cfg") + " --out " + ws.path("ckpt.bin"));
    INFO(pretrain.err);
    REQUIRE(pretrain.exit_code == 0);
    REQUIRE(fs::exists(ws.path("ckpt.bin")));
    REQUIRE(fs::exists(ws.path("ckpt.bin.json")));
    REQUIRE(fs::exists(ws.path("ckpt.bin.metrics.tsv")));

    auto index = ws.run("index --checkpoint " + ws.path("ckpt.bin") + " --vocab " + ws.path("vocab.txt") +
                        " --corpus " + ws.path("corpus.jsonl") + " --out " + ws.path("index.didx"));
    REQUIRE(index.exit_code == 0);

    auto search = ws.run("search --index " + ws.path("index.didx") + " --queries " +
                         ws.path("queries.jsonl") + " --checkpoint " + ws.path("ckpt.bin") +
                         " --vocab " + ws.path("vocab.txt") + " --k 10 --run " + ws.path("dense.run") +
                         " --tag dense");
    REQUIRE(search.exit_code == 0);

    SECTION("search prints k TREC lines per query") {
        std::istringstream lines(search.out);
        std::string line;
        std::size_t count = 0;
        while (std::getline(lines, line)) {
            if (line.empty()) continue;
            ++count;
            std::istringstream parts(line);
            std::string qid, q0, doc, rank, score, tag;
            REQUIRE((parts >> qid >> q0 >> doc >> rank >> score >> tag));
            REQUIRE(q0 == "Q0");
            REQUIRE(tag == "dense");
        }
        REQUIRE(count == 12 * 10);  // 12 queries, k=10
    }

    auto evaluate = ws.run("evaluate --run " + ws.path("dense.run") + " --qrels " + ws.path("qrels.tsv") +
                           " --metric ndcg@10 --out " + ws.path("dense.ndcg.tsv"));
    REQUIRE(evaluate.exit_code == 0);
    REQUIRE(evaluate.out.find("ndcg@10") != std::string::npos);

    SECTION("report values parse back in [0, 1]") {
        const std::string report = slurp(ws.path("dense.ndcg.tsv"));
        REQUIRE(report.find("mean\t") != std::string::npos);
    }

    SECTION("encode + queries-emb search matches the direct path") {
        auto encode = ws.run("encode --checkpoint " + ws.path("ckpt.bin") + " --vocab " +
                             ws.path("vocab.txt") + " --input " + ws.path("queries.jsonl") + " --out " +
                             ws.path("queries.didx"));
        REQUIRE(encode.exit_code == 0);
        auto search2 = ws.run("search --index " + ws.path("index.didx") + " --queries-emb " +
                              ws.path("queries.didx") + " --k 10 --run " + ws.path("dense2.run") +
                              " --tag dense");
        REQUIRE(search2.exit_code == 0);
        // Query embeddings pass through float32 serialization, which nudges
        // scores in the 7th decimal; the ranking must survive unchanged.
        auto ranking_of = [&](const std::string& name) {
            std::istringstream in(slurp(ws.path(name)));
            std::string qid, q0, doc, rank, score, tag;
            std::vector<std::string> ranking;
            while (in >> qid >> q0 >> doc >> rank >> score >> tag) {
                ranking.push_back(qid + " " + doc + " " + rank);
            }
            return ranking;
        };
        REQUIRE(ranking_of("dense2.run") == ranking_of("dense.run"));
    }
}

TEST_CASE("bm25 pipeline and baseline comparison", "[cli]") {
    Workspace ws;
    make_dataset(ws);
    REQUIRE(ws.run("build-vocab --corpus " + ws.path("corpus.jsonl") + " --out " + ws.path("vocab.txt"))
                .exit_code == 0);

    auto bm25_index = ws.run("bm25-index --corpus " + ws.path("corpus.jsonl") + " --vocab " +
                             ws.path("vocab.txt") + " --out " + ws.path("bm25.dbmi"));
    REQUIRE(bm25_index.exit_code == 0);

    auto bm25_search = ws.run("bm25-search --index " + ws.path("bm25.dbmi") + " --queries " +
                              ws.path("queries.jsonl") + " --vocab " + ws.path("vocab.txt") +
                              " --k 10 --k1 1.2 --b 0.75 --run " + ws.path("bm25.run") + " --tag bm25");
    REQUIRE(bm25_search.exit_code == 0);

    // Span queries share exact words with their source document, so BM25
    // retrieves it reliably: a sanity anchor for the whole loop.
    auto evaluate = ws.run("evaluate --run " + ws.path("bm25.run") + " --qrels " + ws.path("qrels.tsv") +
                           " --metric recall@100 --out " + ws.path("bm25.recall.tsv"));
    REQUIRE(evaluate.exit_code == 0);

    SECTION("compare builds a table over systems") {
        REQUIRE(ws.run("evaluate --run " + ws.path("bm25.run") + " --qrels " + ws.path("qrels.tsv") +
                       " --metric ndcg@10 --out " + ws.path("bm25.ndcg.tsv"))
                    .exit_code == 0);
        ws.write("manifest.tsv", "bm25\tsynth\t" + ws.path("bm25.ndcg.tsv") + "\n" + "bm25-recall\tsynth\t" +
                                     ws.path("bm25.recall.tsv") + "\n");
        auto compare = ws.run("compare --manifest " + ws.path("manifest.tsv") + " --out " +
                              ws.path("table.tsv"));
        REQUIRE(compare.exit_code == 0);
        const std::string table = slurp(ws.path("table.tsv"));
        REQUIRE(table.find("dataset\tbm25\tbm25-recall") == 0);
        REQUIRE(table.find("best_on") != std::string::npos);
    }
}

TEST_CASE("identical config and seed give byte-identical artifacts", "[cli][determinism]") {
    Workspace ws;
    make_dataset(ws);
    REQUIRE(ws.run("build-vocab --corpus " + ws.path("corpus.jsonl") + " --out " + ws.path("vocab.txt"))
                .exit_code == 0);
    ws.write("run.cfg", small_config(ws));

    auto run_pipeline = [&](const std::string& suffix) {
        REQUIRE(ws.run("pretrain --config " + ws.path("run.cfg") + " --out " +
                       ws.path("ckpt" + suffix + ".bin"))
                    .exit_code == 0);
        REQUIRE(ws.run("index --checkpoint " + ws.path("ckpt" + suffix + ".bin") + " --vocab " +
                       ws.path("vocab.txt") + " --corpus " + ws.path("corpus.jsonl") + " --out " +
                       ws.path("index" + suffix + ".didx"))
                    .exit_code == 0);
        REQUIRE(ws.run("search --index " + ws.path("index" + suffix + ".didx") + " --queries " +
                       ws.path("queries.jsonl") + " --checkpoint " + ws.path("ckpt" + suffix + ".bin") +
                       " --vocab " + ws.path("vocab.txt") + " --k 10 --run " +
                       ws.path("out" + suffix + ".run") + " --tag repro")
                    .exit_code == 0);
        REQUIRE(ws.run("evaluate --run " + ws.path("out" + suffix + ".run") + " --qrels " +
                       ws.path("qrels.tsv") + " --metric ndcg@10 --out " +
                       ws.path("report" + suffix + ".tsv"))
                    .exit_code == 0);
    };

    run_pipeline("_a");
    run_pipeline("_b");

    REQUIRE(slurp(ws.path("ckpt_a.bin")) == slurp(ws.path("ckpt_b.bin")));
    REQUIRE(slurp(ws.path("index_a.didx")) == slurp(ws.path("index_b.didx")));
    REQUIRE(slurp(ws.path("out_a.run")) == slurp(ws.path("out_b.run")));
    REQUIRE(slurp(ws.path("report_a.tsv")) == slurp(ws.path("report_b.tsv")));
}

TEST_CASE("finetune and mine-negatives complete through the binary", "[cli]") {
    Workspace ws;
    make_dataset(ws);
    REQUIRE(ws.run("build-vocab --corpus " + ws.path("corpus.jsonl") + " --out " + ws.path("vocab.txt"))
                .exit_code == 0);
    ws.write("run.cfg", small_config(ws));
    REQUIRE(ws.run("pretrain --config " + ws.path("run.cfg") + " --out " + ws.path("ckpt.bin"))
                .exit_code == 0);

    // Pairs: query text is a crop of the gold document.
    const Corpus corpus = load_corpus(ws.path("corpus.jsonl"));
    std::ostringstream pairs;
    for (int i = 0; i < 8; ++i) {
        const Document& doc = corpus[i];
        pairs << doc.text.substr(0, 40) << '\t' << doc.id << '\n';
    }
    ws.write("pairs.tsv", pairs.str());

    auto mine = ws.run("mine-negatives --checkpoint " + ws.path("ckpt.bin") + " --vocab " +
                       ws.path("vocab.txt") + " --pairs " + ws.path("pairs.tsv") + " --corpus " +
                       ws.path("corpus.jsonl") + " --top-k 5 --out " + ws.path("hard.tsv"));
    REQUIRE(mine.exit_code == 0);
    REQUIRE(fs::exists(ws.path("hard.tsv")));

    auto tune = ws.run("finetune --config " + ws.path("run.cfg") + " --checkpoint " + ws.path("ckpt.bin") +
                       " --pairs " + ws.path("pairs.tsv") + " --corpus " + ws.path("corpus.jsonl") +
                       " --hard-negatives " + ws.path("hard.tsv") + " --out " + ws.path("tuned.bin"));
    INFO(tune.err);
    REQUIRE(tune.exit_code == 0);
    REQUIRE(fs::exists(ws.path("tuned.bin")));
}

TEST_CASE("ablate produces an axis table", "[cli][ablate]") {
    Workspace ws;
    make_dataset(ws);
    REQUIRE(ws.run("build-vocab --corpus " + ws.path("corpus.jsonl") + " --out " + ws.path("vocab.txt"))
                .exit_code == 0);
    ws.write("run.cfg", small_config(ws));

    auto ablate = ws.run("ablate --config " + ws.path("run.cfg") + " --axis framework --out-dir " +
                         ws.path("ablation"));
    INFO(ablate.err);
    REQUIRE(ablate.exit_code == 0);
    const std::string table = slurp(ws.path("ablation/ablate_framework.tsv"));
    REQUIRE(table.find("variant\tndcg@10\trecall@100\n") == 0);
    REQUIRE(table.find("moco\t") != std::string::npos);
    REQUIRE(table.find("simclr\t") != std::string::npos);
    REQUIRE(fs::exists(ws.path("ablation/moco.run")));
    REQUIRE(fs::exists(ws.path("ablation/simclr.run")));
}

TEST_CASE("failures exit nonzero with a machine-parseable category", "[cli][errors]") {
    Workspace ws;
    make_dataset(ws);

    SECTION("missing input file") {
        auto result = ws.run("evaluate --run /nonexistent.run --qrels /nonexistent.tsv");
        REQUIRE(result.exit_code == 1);
        REQUIRE(result.err.rfind("error:io:", 0) == 0);
    }

    SECTION("config validation failures name the category") {
        ws.write("bad.cfg", "seed = 1\n[data]\nsource = /nonexistent/corpus.jsonl\n");
        auto result = ws.run("pretrain --config " + ws.path("bad.cfg") + " --out " + ws.path("x.bin"));
        REQUIRE(result.exit_code == 1);
        REQUIRE(result.err.rfind("error:config:", 0) == 0);
    }

    SECTION("validation happens before any side effect") {
        ws.write("bad.cfg", "seed = 1\n[data]\nsource = /nonexistent/corpus.jsonl\n");
        auto result = ws.run("pretrain --config " + ws.path("bad.cfg") + " --out " + ws.path("never.bin"));
        REQUIRE(result.exit_code == 1);
        REQUIRE(!fs::exists(ws.path("never.bin")));
        REQUIRE(!fs::exists(ws.path("never.bin.metrics.tsv")));
    }

    SECTION("corrupt binary artifacts report their format") {
        ws.write("fake.didx", "this is not an index");
        auto result = ws.run("search --index " + ws.path("fake.didx") + " --queries-emb " +
                             ws.path("fake.didx") + " --k 5");
        REQUIRE(result.exit_code == 1);
        REQUIRE(result.err.rfind("error:format:", 0) == 0);
    }
}
