#include "densecrab/ablate.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "densecrab/error.hpp"
#include "densecrab/eval.hpp"
#include "densecrab/index.hpp"
#include "densecrab/synth.hpp"

namespace densecrab {

AblateAxis ablate_axis_from_name(const std::string& name) {
    if (name == "framework") return AblateAxis::framework;
    if (name == "queue") return AblateAxis::queue;
    if (name == "augmentation") return AblateAxis::augmentation;
    if (name == "data") return AblateAxis::data;
    fail(ErrKind::config, "unknown ablation axis '" + name + "'");
}

const char* ablate_axis_name(AblateAxis axis) {
    switch (axis) {
        case AblateAxis::framework: return "framework";
        case AblateAxis::queue: return "queue";
        case AblateAxis::augmentation: return "augmentation";
        case AblateAxis::data: return "data";
    }
    return "?";
}

namespace {

struct Variant {
    std::string name;
    PretrainConfig pretrain;
    SamplingStrategy data;
};

struct EvalSet {
    std::vector<Document> queries;
    Qrels qrels;
};

AblateRow evaluate_variant(const Variant& variant, const Vocabulary& vocab, const Corpus& eval_corpus,
                           const EvalSet& eval_set, bool normalize, const std::string& out_dir) {
    const Parameters params = pretrain(variant.pretrain, variant.data, vocab,
                                       out_dir + "/" + variant.name + ".metrics.tsv");

    const DenseIndex index = build_index(params, eval_corpus, vocab, 32, normalize);
    Run run;
    for (const Document& query : eval_set.queries) {
        Embedding q = encode(params, tokenize(vocab, query.text, params.config.max_len));
        if (normalize) l2_normalize(q);
        run.add_results(query.id, search(index, q, 100));
    }
    run.finalize();
    save_run(run, out_dir + "/" + variant.name + ".run", variant.name);

    AblateRow row;
    row.variant = variant.name;
    row.ndcg10 = ndcg_at_k(run, eval_set.qrels, 10).mean;
    row.recall100 = recall_at_k(run, eval_set.qrels, 100).mean;
    return row;
}

}  // namespace

std::vector<AblateRow> run_ablation(AblateAxis axis, const RunConfig& config,
                                    const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);

    std::vector<Corpus> sources;
    sources.reserve(config.data_sources.size());
    for (const std::string& path : config.data_sources) sources.push_back(load_corpus(path));

    if (config.vocab_path.empty()) fail(ErrKind::config, "ablate needs [data] vocab");
    const Vocabulary vocab = Vocabulary::load(config.vocab_path);

    PretrainConfig base = config.pretrain_config();
    base.encoder.vocab_size = static_cast<std::uint32_t>(vocab.size());
    base.steps = config.ablate_steps;
    base.batch_size = config.ablate_batch_size;

    SamplingStrategy base_data;
    base_data.mode = config.data_mode;
    for (const Corpus& corpus : sources) base_data.sources.push_back(&corpus);

    // Retrieval is evaluated against the first source; span queries are
    // generated on the fly when no eval files are configured.
    const Corpus& eval_corpus = sources[0];
    EvalSet eval_set;
    if (!config.ablate_eval_queries.empty() && !config.ablate_eval_qrels.empty()) {
        eval_set.queries = load_queries(config.ablate_eval_queries);
        eval_set.qrels = load_qrels(config.ablate_eval_qrels);
    } else {
        SynthQueries generated = make_span_queries(eval_corpus, 100, config.augment.min_ratio,
                                                   config.augment.max_ratio, config.seed ^ 0xe7a1u);
        eval_set.queries = std::move(generated.queries);
        eval_set.qrels = std::move(generated.qrels);
    }

    std::vector<Variant> variants;
    switch (axis) {
        case AblateAxis::framework: {
            // The queue is restricted to the batch size so both frameworks
            // see the same number of negatives.
            for (const char* name : {"moco", "simclr"}) {
                Variant v{name, base, base_data};
                v.pretrain.framework = framework_from_name(name);
                if (v.pretrain.framework == Framework::moco) {
                    v.pretrain.queue_capacity = std::max<std::size_t>(1, base.batch_size);
                }
                variants.push_back(std::move(v));
            }
            break;
        }
        case AblateAxis::queue: {
            for (std::size_t size : config.ablate_queue_sizes) {
                Variant v{"queue_" + std::to_string(size), base, base_data};
                v.pretrain.framework = Framework::moco;
                v.pretrain.queue_capacity = size;
                variants.push_back(std::move(v));
            }
            break;
        }
        case AblateAxis::augmentation: {
            for (const char* kind : {"ict", "crop", "crop+delete", "crop+replace"}) {
                Variant v{kind, base, base_data};
                v.pretrain.pair_strategy.kind = pair_kind_from_name(kind);
                variants.push_back(std::move(v));
            }
            break;
        }
        case AblateAxis::data: {
            if (sources.size() != 2) {
                fail(ErrKind::config, "the data axis needs exactly 2 [data] sources");
            }
            for (std::size_t s = 0; s < 2; ++s) {
                std::string label = std::filesystem::path(config.data_sources[s]).stem().string();
                if (label.empty() || (s == 1 && label == variants[0].name)) {
                    label = "source_" + std::string(s == 0 ? "a" : "b");
                }
                Variant v{std::move(label), base, {}};
                v.data.mode = SamplingMode::single;
                v.data.sources = {&sources[s]};
                variants.push_back(std::move(v));
            }
            {
                Variant v{"uniform", base, base_data};
                v.data.mode = SamplingMode::uniform;
                variants.push_back(std::move(v));
            }
            {
                Variant v{"fifty-fifty", base, base_data};
                v.data.mode = SamplingMode::fifty_fifty;
                variants.push_back(std::move(v));
            }
            break;
        }
    }

    std::vector<AblateRow> rows;
    rows.reserve(variants.size());
    for (const Variant& variant : variants) {
        std::cerr << "ablate " << ablate_axis_name(axis) << ": " << variant.name << "\n";
        rows.push_back(evaluate_variant(variant, vocab, eval_corpus, eval_set, config.normalize, out_dir));
    }

    std::ofstream table(out_dir + "/ablate_" + ablate_axis_name(axis) + ".tsv");
    if (!table) fail(ErrKind::io, "cannot write ablation table");
    table << ablate_table_to_tsv(rows);
    return rows;
}

std::string ablate_table_to_tsv(const std::vector<AblateRow>& rows) {
    std::string out = "variant\tndcg@10\trecall@100\n";
    char buf[128];
    for (const AblateRow& row : rows) {
        std::snprintf(buf, sizeof(buf), "%s\t%.9f\t%.9f\n", row.variant.c_str(), row.ndcg10,
                      row.recall100);
        out += buf;
    }
    return out;
}

}  // namespace densecrab
