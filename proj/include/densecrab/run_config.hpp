#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "densecrab/augment.hpp"
#include "densecrab/contrastive.hpp"
#include "densecrab/corpus.hpp"
#include "densecrab/encoder.hpp"

namespace densecrab {

/// Key-value document with [section] headers, '#' comments and 'key = value'
/// lines. Keys outside any section live in the "" section.
class KvConfig {
  public:
    static KvConfig parse_file(const std::string& path);
    static KvConfig parse_string(const std::string& text, const std::string& origin = "<string>");

    bool has(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key) const;
    std::string get_string_or(const std::string& section, const std::string& key,
                              const std::string& fallback) const;
    double get_double_or(const std::string& section, const std::string& key, double fallback) const;
    std::uint64_t get_u64_or(const std::string& section, const std::string& key,
                             std::uint64_t fallback) const;
    bool get_bool_or(const std::string& section, const std::string& key, bool fallback) const;
    std::vector<std::string> get_list_or(const std::string& section, const std::string& key) const;

    /// Keys never read through a getter; used to reject typos.
    std::vector<std::string> unread_keys() const;

  private:
    std::string origin_;
    std::map<std::string, std::map<std::string, std::string>> sections_;
    mutable std::set<std::string> read_;
};

/// Typed view of the experiment config consumed by pretrain / finetune /
/// ablate. Referenced paths are checked at load time.
struct RunConfig {
    std::uint64_t seed = 0;

    // [data]
    SamplingMode data_mode = SamplingMode::single;
    std::vector<std::string> data_sources;
    std::string vocab_path;

    // [encoder]
    EncoderConfig encoder;  // vocab_size filled after the vocabulary loads
    bool normalize = false;

    // [augment]
    PairStrategy augment;

    // [contrastive]
    Framework framework = Framework::moco;
    std::size_t queue_capacity = 4096;
    double momentum = 0.9995;
    double temperature = 0.05;
    std::size_t steps = 500;
    std::size_t batch_size = 32;
    std::size_t metrics_every = 50;

    // [optimizer]
    AdamWConfig optimizer;

    // [finetune]
    double finetune_temperature = 0.05;
    double hard_negative_prob = 0.1;
    std::size_t finetune_steps = 200;
    std::size_t finetune_batch_size = 16;
    std::size_t eval_every = 100;
    std::size_t patience = 0;

    // [ablate]
    std::size_t ablate_steps = 100;
    std::size_t ablate_batch_size = 16;
    std::vector<std::size_t> ablate_queue_sizes = {64, 256, 1024};
    std::string ablate_eval_queries;
    std::string ablate_eval_qrels;

    PretrainConfig pretrain_config() const;

    /// Parses and validates; every referenced path must exist.
    static RunConfig load(const std::string& path);
    static RunConfig from_kv(const KvConfig& kv);
};

}  // namespace densecrab
