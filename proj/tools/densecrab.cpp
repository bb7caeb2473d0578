// densecrab: contrastive dense retrieval at desk scale.
//
// One binary, one config: build-vocab, pretrain, finetune, mine-negatives,
// encode, index, search, bm25-index, bm25-search, evaluate, compare, ablate.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "densecrab/ablate.hpp"
#include "densecrab/bm25.hpp"
#include "densecrab/contrastive.hpp"
#include "densecrab/corpus.hpp"
#include "densecrab/encoder.hpp"
#include "densecrab/error.hpp"
#include "densecrab/eval.hpp"
#include "densecrab/index.hpp"
#include "densecrab/run_config.hpp"
#include "densecrab/synth.hpp"
#include "densecrab/tokenizer.hpp"

namespace {

using namespace densecrab;

void require_exists(const std::string& path, const std::string& what) {
    if (!std::filesystem::exists(path)) {
        fail(ErrKind::io, what + " does not exist: '" + path + "'");
    }
}

std::vector<FinetunePair> load_pairs(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open pairs file '" + path + "'");
    std::vector<FinetunePair> pairs;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
            fail(ErrKind::parse,
                 path + ":" + std::to_string(line_no) + ": expected 'query-text<TAB>doc-id'");
        }
        pairs.push_back(FinetunePair{line.substr(0, tab), line.substr(tab + 1)});
    }
    if (pairs.empty()) fail(ErrKind::parse, path + ": no pairs");
    return pairs;
}

void save_negatives(const std::map<std::string, std::string>& negatives, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrKind::io, "cannot write negatives file '" + path + "'");
    for (const auto& [query, doc_id] : negatives) out << query << '\t' << doc_id << '\n';
}

std::map<std::string, std::string> load_negatives(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open negatives file '" + path + "'");
    std::map<std::string, std::string> negatives;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            fail(ErrKind::parse,
                 path + ":" + std::to_string(line_no) + ": expected 'query-text<TAB>doc-id'");
        }
        negatives[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return negatives;
}

void write_sidecar(const std::string& checkpoint_path, const PretrainConfig& config,
                   const std::string& framework) {
    nlohmann::json meta;
    meta["framework"] = framework;
    meta["steps"] = config.steps;
    meta["batch_size"] = config.batch_size;
    meta["seed"] = config.seed;
    meta["temperature"] = config.temperature;
    meta["queue_capacity"] = config.queue_capacity;
    meta["momentum"] = config.momentum;
    meta["normalize"] = config.normalize;
    meta["augment"] = pair_kind_name(config.pair_strategy.kind);
    meta["encoder"] = {{"vocab_size", config.encoder.vocab_size},
                       {"embed_dim", config.encoder.embed_dim},
                       {"num_layers", config.encoder.num_layers},
                       {"num_heads", config.encoder.num_heads},
                       {"feedforward_dim", config.encoder.feedforward_dim},
                       {"max_len", config.encoder.max_len}};
    meta["optimizer"] = {{"learning_rate", config.optimizer.learning_rate},
                         {"weight_decay", config.optimizer.weight_decay},
                         {"beta1", config.optimizer.beta1},
                         {"beta2", config.optimizer.beta2},
                         {"eps", config.optimizer.eps}};
    std::ofstream out(checkpoint_path + ".json");
    if (!out) fail(ErrKind::io, "cannot write sidecar '" + checkpoint_path + ".json'");
    out << meta.dump(2) << '\n';
}

/// Parses "ndcg@10" / "recall@100" into (is_ndcg, k).
std::pair<bool, std::size_t> parse_metric(const std::string& name) {
    const std::size_t at = name.find('@');
    if (at == std::string::npos) fail(ErrKind::invalid, "metric must look like ndcg@10 or recall@100");
    const std::string kind = name.substr(0, at);
    const unsigned long long k = std::strtoull(name.c_str() + at + 1, nullptr, 10);
    if (k == 0) fail(ErrKind::invalid, "metric cutoff must be positive");
    if (kind == "ndcg") return {true, static_cast<std::size_t>(k)};
    if (kind == "recall") return {false, static_cast<std::size_t>(k)};
    fail(ErrKind::invalid, "unknown metric '" + kind + "' (expected ndcg or recall)");
}

Embedding encode_query(const Parameters& params, const Vocabulary& vocab, const std::string& text,
                       bool normalize) {
    Embedding q = encode(params, tokenize(vocab, text, params.config.max_len));
    if (normalize) l2_normalize(q);
    return q;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_build_vocab(const std::vector<std::string>& corpus_paths, const std::string& out,
                    std::size_t max_size) {
    Corpus merged("merged");
    for (const std::string& path : corpus_paths) {
        require_exists(path, "corpus");
        const Corpus corpus = load_corpus(path);
        for (const Document& doc : corpus.documents()) merged.add(doc);
    }
    Vocabulary::build(merged, max_size).save(out);
    std::cerr << "vocabulary written to " << out << "\n";
    return 0;
}

int cmd_pretrain(const std::string& config_path, const std::string& out,
                 const std::string& metrics_path) {
    const RunConfig run_config = RunConfig::load(config_path);
    if (run_config.vocab_path.empty()) fail(ErrKind::config, "pretrain needs [data] vocab");
    const Vocabulary vocab = Vocabulary::load(run_config.vocab_path);

    std::vector<Corpus> sources;
    sources.reserve(run_config.data_sources.size());
    for (const std::string& path : run_config.data_sources) sources.push_back(load_corpus(path));
    SamplingStrategy data;
    data.mode = run_config.data_mode;
    for (const Corpus& corpus : sources) data.sources.push_back(&corpus);

    PretrainConfig config = run_config.pretrain_config();
    config.encoder.vocab_size = static_cast<std::uint32_t>(vocab.size());

    const std::string metrics = metrics_path.empty() ? out + ".metrics.tsv" : metrics_path;
    const Parameters params = pretrain(config, data, vocab, metrics);
    save_parameters(params, out);
    write_sidecar(out, config, framework_name(config.framework));
    std::cerr << "checkpoint written to " << out << "\n";
    return 0;
}

int cmd_finetune(const std::string& config_path, const std::string& checkpoint,
                 const std::string& pairs_path, const std::string& corpus_path,
                 const std::string& hard_negatives_path, const std::string& dev_pairs_path,
                 const std::string& out) {
    const RunConfig run_config = RunConfig::load(config_path);
    require_exists(checkpoint, "checkpoint");
    require_exists(pairs_path, "pairs file");
    require_exists(corpus_path, "corpus");
    if (run_config.vocab_path.empty()) fail(ErrKind::config, "finetune needs [data] vocab");

    Parameters params = load_parameters(checkpoint);
    const Vocabulary vocab = Vocabulary::load(run_config.vocab_path);
    const Corpus corpus = load_corpus(corpus_path);
    const std::vector<FinetunePair> pairs = load_pairs(pairs_path);

    std::optional<std::map<std::string, std::string>> hard_negatives;
    if (!hard_negatives_path.empty()) {
        require_exists(hard_negatives_path, "hard negatives file");
        hard_negatives = load_negatives(hard_negatives_path);
    }
    std::optional<std::vector<FinetunePair>> dev_pairs;
    if (!dev_pairs_path.empty()) {
        require_exists(dev_pairs_path, "dev pairs file");
        dev_pairs = load_pairs(dev_pairs_path);
    }

    FinetuneConfig config;
    config.optimizer = run_config.optimizer;
    config.temperature = run_config.finetune_temperature;
    config.hard_negative_prob = run_config.hard_negative_prob;
    config.normalize = run_config.normalize;
    config.steps = run_config.finetune_steps;
    config.batch_size = run_config.finetune_batch_size;
    config.seed = run_config.seed;
    config.eval_every = run_config.eval_every;
    config.patience = run_config.patience;

    const Parameters tuned = finetune(std::move(params), pairs, corpus, vocab, hard_negatives, config,
                                      dev_pairs ? &*dev_pairs : nullptr);
    save_parameters(tuned, out);
    std::cerr << "checkpoint written to " << out << "\n";
    return 0;
}

int cmd_mine_negatives(const std::string& checkpoint, const std::string& vocab_path,
                       const std::string& pairs_path, const std::string& corpus_path,
                       std::size_t top_k, bool normalize, const std::string& out) {
    require_exists(checkpoint, "checkpoint");
    require_exists(vocab_path, "vocabulary");
    require_exists(pairs_path, "pairs file");
    require_exists(corpus_path, "corpus");
    const Parameters params = load_parameters(checkpoint);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const Corpus corpus = load_corpus(corpus_path);
    const std::vector<FinetunePair> pairs = load_pairs(pairs_path);
    save_negatives(mine_hard_negatives(params, pairs, corpus, vocab, top_k, normalize), out);
    std::cerr << "hard negatives written to " << out << "\n";
    return 0;
}

int cmd_encode(const std::string& checkpoint, const std::string& vocab_path, const std::string& input,
               std::size_t batch_size, bool normalize, const std::string& out) {
    require_exists(checkpoint, "checkpoint");
    require_exists(vocab_path, "vocabulary");
    require_exists(input, "input file");
    const Parameters params = load_parameters(checkpoint);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    const Corpus texts = load_corpus(input);
    const DenseIndex embeddings = build_index(params, texts, vocab, batch_size, normalize);
    save_index(embeddings, out);
    std::cerr << "embeddings written to " << out << "\n";
    return 0;
}

int cmd_index(const std::string& checkpoint, const std::string& vocab_path,
              const std::string& corpus_path, std::size_t batch_size, bool normalize,
              const std::string& out) {
    return cmd_encode(checkpoint, vocab_path, corpus_path, batch_size, normalize, out);
}

int cmd_search(const std::string& index_path, const std::string& queries_path,
               const std::string& queries_emb_path, const std::string& checkpoint,
               const std::string& vocab_path, std::size_t k, bool normalize, const std::string& run_path,
               const std::string& tag) {
    require_exists(index_path, "index");
    const DenseIndex index = load_index(index_path);

    Run run;
    if (!queries_emb_path.empty()) {
        require_exists(queries_emb_path, "query embeddings");
        const DenseIndex queries = load_index(queries_emb_path);
        if (queries.dim() != index.dim()) fail(ErrKind::invalid, "query/index dimension mismatch");
        for (std::size_t i = 0; i < queries.size(); ++i) {
            const Embedding q(queries.row(i), queries.row(i) + queries.dim());
            run.add_results(queries.ids()[i], search(index, q, k));
        }
    } else {
        if (queries_path.empty() || checkpoint.empty() || vocab_path.empty()) {
            fail(ErrKind::invalid, "search needs --queries with --checkpoint and --vocab, or --queries-emb");
        }
        require_exists(queries_path, "queries");
        require_exists(checkpoint, "checkpoint");
        require_exists(vocab_path, "vocabulary");
        const Parameters params = load_parameters(checkpoint);
        const Vocabulary vocab = Vocabulary::load(vocab_path);
        for (const Document& query : load_queries(queries_path)) {
            run.add_results(query.id, search(index, encode_query(params, vocab, query.text, normalize), k));
        }
    }
    run.finalize();

    for (const auto& [qid, entries] : run.ranked()) {
        std::size_t rank = 1;
        for (const ScoredDoc& e : entries) {
            std::printf("%s Q0 %s %zu %.6f %s\n", qid.c_str(), e.doc_id.c_str(), rank, e.score,
                        tag.c_str());
            ++rank;
        }
    }
    if (!run_path.empty()) save_run(run, run_path, tag);
    return 0;
}

int cmd_bm25_index(const std::string& corpus_path, const std::string& vocab_path,
                   const std::string& out) {
    require_exists(corpus_path, "corpus");
    require_exists(vocab_path, "vocabulary");
    const Corpus corpus = load_corpus(corpus_path);
    const Vocabulary vocab = Vocabulary::load(vocab_path);
    save_inverted(build_inverted(corpus, vocab), out);
    std::cerr << "inverted index written to " << out << "\n";
    return 0;
}

int cmd_bm25_search(const std::string& index_path, const std::string& queries_path,
                    const std::string& vocab_path, std::size_t k, double k1, double b,
                    const std::string& run_path, const std::string& tag) {
    require_exists(index_path, "inverted index");
    require_exists(queries_path, "queries");
    require_exists(vocab_path, "vocabulary");
    const InvertedIndex index = load_inverted(index_path);
    const Vocabulary vocab = Vocabulary::load(vocab_path);

    Run run;
    for (const Document& query : load_queries(queries_path)) {
        std::vector<std::uint32_t> terms;
        for (std::uint32_t id : tokenize(vocab, query.text, 1u << 20)) {
            if (id != kUnkId) terms.push_back(id);
        }
        run.add_results(query.id, bm25_search(index, terms, k, k1, b));
    }
    run.finalize();

    for (const auto& [qid, entries] : run.ranked()) {
        std::size_t rank = 1;
        for (const ScoredDoc& e : entries) {
            std::printf("%s Q0 %s %zu %.6f %s\n", qid.c_str(), e.doc_id.c_str(), rank, e.score,
                        tag.c_str());
            ++rank;
        }
    }
    if (!run_path.empty()) save_run(run, run_path, tag);
    return 0;
}

int cmd_evaluate(const std::string& run_path, const std::string& qrels_path, const std::string& metric,
                 const std::string& out) {
    require_exists(run_path, "run file");
    require_exists(qrels_path, "qrels");
    const Run run = load_run(run_path);
    const Qrels qrels = load_qrels(qrels_path);
    const auto [is_ndcg, k] = parse_metric(metric);
    const MetricReport report = is_ndcg ? ndcg_at_k(run, qrels, k) : recall_at_k(run, qrels, k);
    if (!out.empty()) save_report(report, out);
    std::printf("%s\tmean=%.6f\tevaluated=%zu\tskipped=%zu\n", report.metric.c_str(), report.mean,
                report.per_query.size(), report.skipped);
    return 0;
}

int cmd_compare(const std::string& manifest_path, const std::string& out) {
    require_exists(manifest_path, "manifest");
    std::ifstream in(manifest_path);
    if (!in) fail(ErrKind::io, "cannot open manifest '" + manifest_path + "'");

    std::map<std::string, std::map<std::string, MetricReport>> by_system;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream parts(line);
        std::string system, dataset, report_path;
        if (!std::getline(parts, system, '\t') || !std::getline(parts, dataset, '\t') ||
            !std::getline(parts, report_path, '\t')) {
            fail(ErrKind::parse, manifest_path + ":" + std::to_string(line_no) +
                                     ": expected 'system<TAB>dataset<TAB>report-path'");
        }
        require_exists(report_path, "report");
        by_system[system][dataset] = load_report(report_path);
    }
    const ComparisonTable table = compare_systems(by_system);
    std::printf("%s", table_to_tsv(table).c_str());
    if (!out.empty()) save_table(table, out);
    return 0;
}

int cmd_ablate(const std::string& config_path, const std::string& axis_name,
               const std::string& out_dir) {
    const RunConfig config = RunConfig::load(config_path);
    const AblateAxis axis = ablate_axis_from_name(axis_name);
    const std::vector<AblateRow> rows = run_ablation(axis, config, out_dir);
    std::printf("%s", ablate_table_to_tsv(rows).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"densecrab: contrastive dense retrieval at desk scale"};
    app.require_subcommand(1);

    // --- build-vocab -------------------------------------------------------
    std::vector<std::string> bv_corpus;
    std::string bv_out;
    std::size_t bv_max_size = 8192;
    auto* build_vocab_cmd = app.add_subcommand("build-vocab", "build a vocabulary from JSONL corpora");
    build_vocab_cmd->add_option("--corpus", bv_corpus, "corpus JSONL (repeatable)")->required();
    build_vocab_cmd->add_option("--out", bv_out, "output vocabulary path")->required();
    build_vocab_cmd->add_option("--max-size", bv_max_size, "maximum vocabulary size");

    // --- pretrain ----------------------------------------------------------
    std::string pt_config, pt_out, pt_metrics;
    auto* pretrain_cmd = app.add_subcommand("pretrain", "contrastive pretraining (moco or simclr)");
    pretrain_cmd->add_option("--config", pt_config, "run config")->required();
    pretrain_cmd->add_option("--out", pt_out, "output checkpoint")->required();
    pretrain_cmd->add_option("--metrics", pt_metrics, "metrics TSV (default <out>.metrics.tsv)");

    // --- finetune ----------------------------------------------------------
    std::string ft_config, ft_checkpoint, ft_pairs, ft_corpus, ft_hard, ft_dev, ft_out;
    auto* finetune_cmd = app.add_subcommand("finetune", "supervised fine-tuning with in-batch negatives");
    finetune_cmd->add_option("--config", ft_config, "run config")->required();
    finetune_cmd->add_option("--checkpoint", ft_checkpoint, "starting checkpoint")->required();
    finetune_cmd->add_option("--pairs", ft_pairs, "TSV: query-text<TAB>doc-id")->required();
    finetune_cmd->add_option("--corpus", ft_corpus, "corpus JSONL")->required();
    finetune_cmd->add_option("--hard-negatives", ft_hard, "TSV: query-text<TAB>doc-id");
    finetune_cmd->add_option("--dev-pairs", ft_dev, "dev pairs for early stopping");
    finetune_cmd->add_option("--out", ft_out, "output checkpoint")->required();

    // --- mine-negatives ----------------------------------------------------
    std::string mn_checkpoint, mn_vocab, mn_pairs, mn_corpus, mn_out;
    std::size_t mn_top_k = 10;
    bool mn_normalize = false;
    auto* mine_cmd = app.add_subcommand("mine-negatives", "mine hard negatives with a checkpoint");
    mine_cmd->add_option("--checkpoint", mn_checkpoint, "checkpoint")->required();
    mine_cmd->add_option("--vocab", mn_vocab, "vocabulary")->required();
    mine_cmd->add_option("--pairs", mn_pairs, "TSV: query-text<TAB>doc-id")->required();
    mine_cmd->add_option("--corpus", mn_corpus, "corpus JSONL")->required();
    mine_cmd->add_option("--top-k", mn_top_k, "retrieval depth");
    mine_cmd->add_flag("--normalize", mn_normalize, "L2-normalize embeddings");
    mine_cmd->add_option("--out", mn_out, "output TSV")->required();

    // --- encode ------------------------------------------------------------
    std::string en_checkpoint, en_vocab, en_input, en_out;
    std::size_t en_batch = 32;
    bool en_normalize = false;
    auto* encode_cmd = app.add_subcommand("encode", "encode JSONL texts into an embeddings file");
    encode_cmd->add_option("--checkpoint", en_checkpoint, "checkpoint")->required();
    encode_cmd->add_option("--vocab", en_vocab, "vocabulary")->required();
    encode_cmd->add_option("--input", en_input, "JSONL with _id/text records")->required();
    encode_cmd->add_option("--batch-size", en_batch, "encode batch size");
    encode_cmd->add_flag("--normalize", en_normalize, "L2-normalize embeddings");
    encode_cmd->add_option("--out", en_out, "output DIDX file")->required();

    // --- index -------------------------------------------------------------
    std::string ix_checkpoint, ix_vocab, ix_corpus, ix_out;
    std::size_t ix_batch = 32;
    bool ix_normalize = false;
    auto* index_cmd = app.add_subcommand("index", "build a dense index over a corpus");
    index_cmd->add_option("--checkpoint", ix_checkpoint, "checkpoint")->required();
    index_cmd->add_option("--vocab", ix_vocab, "vocabulary")->required();
    index_cmd->add_option("--corpus", ix_corpus, "corpus JSONL")->required();
    index_cmd->add_option("--batch-size", ix_batch, "encode batch size");
    index_cmd->add_flag("--normalize", ix_normalize, "L2-normalize rows (cosine ranking)");
    index_cmd->add_option("--out", ix_out, "output DIDX file")->required();

    // --- search ------------------------------------------------------------
    std::string se_index, se_queries, se_queries_emb, se_checkpoint, se_vocab, se_run, se_tag = "densecrab";
    std::size_t se_k = 10;
    bool se_normalize = false;
    auto* search_cmd = app.add_subcommand("search", "dense top-k retrieval, TREC lines on stdout");
    search_cmd->add_option("--index", se_index, "DIDX index")->required();
    search_cmd->add_option("--queries", se_queries, "queries JSONL");
    search_cmd->add_option("--queries-emb", se_queries_emb, "precomputed query embeddings (DIDX)");
    search_cmd->add_option("--checkpoint", se_checkpoint, "checkpoint (with --queries)");
    search_cmd->add_option("--vocab", se_vocab, "vocabulary (with --queries)");
    search_cmd->add_option("--k", se_k, "results per query");
    search_cmd->add_flag("--normalize", se_normalize, "L2-normalize query embeddings");
    search_cmd->add_option("--run", se_run, "write a TREC run file");
    search_cmd->add_option("--tag", se_tag, "system tag");

    // --- bm25-index --------------------------------------------------------
    std::string bi_corpus, bi_vocab, bi_out;
    auto* bm25_index_cmd = app.add_subcommand("bm25-index", "build an inverted index");
    bm25_index_cmd->add_option("--corpus", bi_corpus, "corpus JSONL")->required();
    bm25_index_cmd->add_option("--vocab", bi_vocab, "vocabulary")->required();
    bm25_index_cmd->add_option("--out", bi_out, "output DBMI file")->required();

    // --- bm25-search -------------------------------------------------------
    std::string bs_index, bs_queries, bs_vocab, bs_run, bs_tag = "bm25";
    std::size_t bs_k = 10;
    double bs_k1 = 1.2, bs_b = 0.75;
    auto* bm25_search_cmd = app.add_subcommand("bm25-search", "BM25 top-k retrieval");
    bm25_search_cmd->add_option("--index", bs_index, "DBMI inverted index")->required();
    bm25_search_cmd->add_option("--queries", bs_queries, "queries JSONL")->required();
    bm25_search_cmd->add_option("--vocab", bs_vocab, "vocabulary")->required();
    bm25_search_cmd->add_option("--k", bs_k, "results per query");
    bm25_search_cmd->add_option("--k1", bs_k1, "BM25 k1");
    bm25_search_cmd->add_option("--b", bs_b, "BM25 b");
    bm25_search_cmd->add_option("--run", bs_run, "write a TREC run file");
    bm25_search_cmd->add_option("--tag", bs_tag, "system tag");

    // --- evaluate ----------------------------------------------------------
    std::string ev_run, ev_qrels, ev_metric = "ndcg@10", ev_out;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "score a run file against qrels");
    evaluate_cmd->add_option("--run", ev_run, "TREC run file")->required();
    evaluate_cmd->add_option("--qrels", ev_qrels, "qrels TSV")->required();
    evaluate_cmd->add_option("--metric", ev_metric, "ndcg@K or recall@K");
    evaluate_cmd->add_option("--out", ev_out, "write a report TSV");

    // --- compare -----------------------------------------------------------
    std::string cp_manifest, cp_out;
    auto* compare_cmd = app.add_subcommand("compare", "comparison table from report files");
    compare_cmd->add_option("--manifest", cp_manifest, "TSV: system<TAB>dataset<TAB>report-path")
        ->required();
    compare_cmd->add_option("--out", cp_out, "write the table TSV");

    // --- ablate ------------------------------------------------------------
    std::string ab_config, ab_axis, ab_out_dir;
    auto* ablate_cmd = app.add_subcommand("ablate", "run one ablation axis end-to-end");
    ablate_cmd->add_option("--config", ab_config, "run config")->required();
    ablate_cmd->add_option("--axis", ab_axis, "framework | queue | augmentation | data")->required();
    ablate_cmd->add_option("--out-dir", ab_out_dir, "output directory")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (build_vocab_cmd->parsed()) return cmd_build_vocab(bv_corpus, bv_out, bv_max_size);
        if (pretrain_cmd->parsed()) return cmd_pretrain(pt_config, pt_out, pt_metrics);
        if (finetune_cmd->parsed()) {
            return cmd_finetune(ft_config, ft_checkpoint, ft_pairs, ft_corpus, ft_hard, ft_dev, ft_out);
        }
        if (mine_cmd->parsed()) {
            return cmd_mine_negatives(mn_checkpoint, mn_vocab, mn_pairs, mn_corpus, mn_top_k,
                                      mn_normalize, mn_out);
        }
        if (encode_cmd->parsed()) {
            return cmd_encode(en_checkpoint, en_vocab, en_input, en_batch, en_normalize, en_out);
        }
        if (index_cmd->parsed()) {
            return cmd_index(ix_checkpoint, ix_vocab, ix_corpus, ix_batch, ix_normalize, ix_out);
        }
        if (search_cmd->parsed()) {
            return cmd_search(se_index, se_queries, se_queries_emb, se_checkpoint, se_vocab, se_k,
                              se_normalize, se_run, se_tag);
        }
        if (bm25_index_cmd->parsed()) return cmd_bm25_index(bi_corpus, bi_vocab, bi_out);
        if (bm25_search_cmd->parsed()) {
            return cmd_bm25_search(bs_index, bs_queries, bs_vocab, bs_k, bs_k1, bs_b, bs_run, bs_tag);
        }
        if (evaluate_cmd->parsed()) return cmd_evaluate(ev_run, ev_qrels, ev_metric, ev_out);
        if (compare_cmd->parsed()) return cmd_compare(cp_manifest, cp_out);
        if (ablate_cmd->parsed()) return cmd_ablate(ab_config, ab_axis, ab_out_dir);
    } catch (const Error& e) {
        std::cerr << "error:" << err_kind_name(e.kind()) << ": " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error:internal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
