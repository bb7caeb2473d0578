#include "densecrab/run_config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "densecrab/error.hpp"

namespace densecrab {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t lo = 0;
    std::size_t hi = s.size();
    while (lo < hi && std::isspace(static_cast<unsigned char>(s[lo]))) ++lo;
    while (hi > lo && std::isspace(static_cast<unsigned char>(s[hi - 1]))) --hi;
    return s.substr(lo, hi - lo);
}

}  // namespace

KvConfig KvConfig::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrKind::io, "cannot open config file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_string(buffer.str(), path);
}

KvConfig KvConfig::parse_string(const std::string& text, const std::string& origin) {
    KvConfig config;
    config.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string stripped = trimmed(line);
        if (stripped.empty() || stripped[0] == '#') continue;
        if (stripped.front() == '[') {
            if (stripped.back() != ']') {
                fail(ErrKind::config, origin + ":" + std::to_string(line_no) + ": unterminated section");
            }
            section = trimmed(stripped.substr(1, stripped.size() - 2));
            continue;
        }
        const std::size_t eq = stripped.find('=');
        if (eq == std::string::npos) {
            fail(ErrKind::config,
                 origin + ":" + std::to_string(line_no) + ": expected 'key = value' or '[section]'");
        }
        const std::string key = trimmed(stripped.substr(0, eq));
        const std::string value = trimmed(stripped.substr(eq + 1));
        if (key.empty()) {
            fail(ErrKind::config, origin + ":" + std::to_string(line_no) + ": empty key");
        }
        config.sections_[section][key] = value;
    }
    return config;
}

bool KvConfig::has(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    return sit != sections_.end() && sit->second.count(key) != 0;
}

std::string KvConfig::get_string(const std::string& section, const std::string& key) const {
    auto sit = sections_.find(section);
    if (sit == sections_.end() || sit->second.count(key) == 0) {
        fail(ErrKind::config, origin_ + ": missing required key '" +
                                  (section.empty() ? key : section + "." + key) + "'");
    }
    read_.insert(section + "\x1f" + key);
    return sit->second.at(key);
}

std::string KvConfig::get_string_or(const std::string& section, const std::string& key,
                                    const std::string& fallback) const {
    if (!has(section, key)) return fallback;
    return get_string(section, key);
}

double KvConfig::get_double_or(const std::string& section, const std::string& key,
                               double fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key);
    char* end = nullptr;
    const double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') {
        fail(ErrKind::config, origin_ + ": '" + section + "." + key + "' is not a number: " + raw);
    }
    return v;
}

std::uint64_t KvConfig::get_u64_or(const std::string& section, const std::string& key,
                                   std::uint64_t fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key);
    char* end = nullptr;
    const unsigned long long v = std::strtoull(raw.c_str(), &end, 10);
    if (end == raw.c_str() || *end != '\0') {
        fail(ErrKind::config,
             origin_ + ": '" + section + "." + key + "' is not a non-negative integer: " + raw);
    }
    return v;
}

bool KvConfig::get_bool_or(const std::string& section, const std::string& key, bool fallback) const {
    if (!has(section, key)) return fallback;
    const std::string raw = get_string(section, key);
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    fail(ErrKind::config, origin_ + ": '" + section + "." + key + "' is not a boolean: " + raw);
}

std::vector<std::string> KvConfig::get_list_or(const std::string& section,
                                               const std::string& key) const {
    std::vector<std::string> out;
    if (!has(section, key)) return out;
    const std::string raw = get_string(section, key);
    std::size_t start = 0;
    while (start <= raw.size()) {
        const std::size_t comma = raw.find(',', start);
        const std::string item =
            trimmed(comma == std::string::npos ? raw.substr(start) : raw.substr(start, comma - start));
        if (!item.empty()) out.push_back(item);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> KvConfig::unread_keys() const {
    std::vector<std::string> unread;
    for (const auto& [section, entries] : sections_) {
        for (const auto& [key, value] : entries) {
            if (read_.count(section + "\x1f" + key) == 0) {
                unread.push_back(section.empty() ? key : section + "." + key);
            }
        }
    }
    return unread;
}

PretrainConfig RunConfig::pretrain_config() const {
    PretrainConfig cfg;
    cfg.encoder = encoder;
    cfg.pair_strategy = augment;
    cfg.framework = framework;
    cfg.queue_capacity = queue_capacity;
    cfg.momentum = momentum;
    cfg.temperature = temperature;
    cfg.optimizer = optimizer;
    cfg.normalize = normalize;
    cfg.steps = steps;
    cfg.batch_size = batch_size;
    cfg.seed = seed;
    cfg.metrics_every = metrics_every;
    return cfg;
}

RunConfig RunConfig::load(const std::string& path) {
    return from_kv(KvConfig::parse_file(path));
}

RunConfig RunConfig::from_kv(const KvConfig& kv) {
    RunConfig cfg;

    if (!kv.has("", "seed")) fail(ErrKind::config, "config is missing the mandatory 'seed' key");
    cfg.seed = kv.get_u64_or("", "seed", 0);

    cfg.data_mode = sampling_mode_from_name(kv.get_string_or("data", "mode", "single"));
    cfg.data_sources = kv.get_list_or("data", "sources");
    if (kv.has("data", "source")) cfg.data_sources.push_back(kv.get_string("data", "source"));
    if (cfg.data_sources.empty()) fail(ErrKind::config, "config needs [data] sources or source");
    cfg.vocab_path = kv.get_string_or("data", "vocab", "");

    for (const std::string& source : cfg.data_sources) {
        if (!std::filesystem::exists(source)) {
            fail(ErrKind::config, "data source does not exist: '" + source + "'");
        }
    }
    if (!cfg.vocab_path.empty() && !std::filesystem::exists(cfg.vocab_path)) {
        fail(ErrKind::config, "vocabulary file does not exist: '" + cfg.vocab_path + "'");
    }

    cfg.encoder.embed_dim = static_cast<std::uint32_t>(kv.get_u64_or("encoder", "embed_dim", 64));
    cfg.encoder.num_layers = static_cast<std::uint32_t>(kv.get_u64_or("encoder", "num_layers", 2));
    cfg.encoder.num_heads = static_cast<std::uint32_t>(kv.get_u64_or("encoder", "num_heads", 4));
    cfg.encoder.feedforward_dim =
        static_cast<std::uint32_t>(kv.get_u64_or("encoder", "feedforward_dim", 128));
    cfg.encoder.max_len = static_cast<std::uint32_t>(kv.get_u64_or("encoder", "max_len", 256));
    cfg.normalize = kv.get_bool_or("encoder", "normalize", false);

    cfg.augment.kind = pair_kind_from_name(kv.get_string_or("augment", "kind", "crop"));
    cfg.augment.min_ratio = kv.get_double_or("augment", "min_ratio", 0.05);
    cfg.augment.max_ratio = kv.get_double_or("augment", "max_ratio", 0.5);
    cfg.augment.perturb_prob = kv.get_double_or("augment", "perturb_prob", 0.1);
    cfg.augment.ict_keep_prob = kv.get_double_or("augment", "ict_keep_prob", 0.1);
    cfg.augment.validate();

    cfg.framework = framework_from_name(kv.get_string_or("contrastive", "framework", "moco"));
    cfg.queue_capacity = kv.get_u64_or("contrastive", "queue_capacity", 4096);
    cfg.momentum = kv.get_double_or("contrastive", "momentum", 0.9995);
    cfg.temperature = kv.get_double_or("contrastive", "temperature", 0.05);
    cfg.steps = kv.get_u64_or("contrastive", "steps", 500);
    cfg.batch_size = kv.get_u64_or("contrastive", "batch_size", 32);
    cfg.metrics_every = kv.get_u64_or("contrastive", "metrics_every", 50);
    if (cfg.momentum < 0.0 || cfg.momentum > 1.0) {
        fail(ErrKind::config, "contrastive.momentum must lie in [0, 1]");
    }
    if (!(cfg.temperature > 0.0)) fail(ErrKind::config, "contrastive.temperature must be positive");
    if (cfg.queue_capacity == 0) fail(ErrKind::config, "contrastive.queue_capacity must be >= 1");
    if (cfg.batch_size == 0) fail(ErrKind::config, "contrastive.batch_size must be >= 1");
    if (cfg.metrics_every == 0) fail(ErrKind::config, "contrastive.metrics_every must be >= 1");

    cfg.optimizer.learning_rate = kv.get_double_or("optimizer", "learning_rate", 5e-5);
    cfg.optimizer.weight_decay = kv.get_double_or("optimizer", "weight_decay", 0.01);
    cfg.optimizer.beta1 = kv.get_double_or("optimizer", "beta1", 0.9);
    cfg.optimizer.beta2 = kv.get_double_or("optimizer", "beta2", 0.999);
    cfg.optimizer.eps = kv.get_double_or("optimizer", "eps", 1e-8);
    if (!(cfg.optimizer.learning_rate > 0.0)) {
        fail(ErrKind::config, "optimizer.learning_rate must be positive");
    }

    cfg.finetune_temperature = kv.get_double_or("finetune", "temperature", 0.05);
    cfg.hard_negative_prob = kv.get_double_or("finetune", "hard_negative_prob", 0.1);
    cfg.finetune_steps = kv.get_u64_or("finetune", "steps", 200);
    cfg.finetune_batch_size = kv.get_u64_or("finetune", "batch_size", 16);
    cfg.eval_every = kv.get_u64_or("finetune", "eval_every", 100);
    cfg.patience = kv.get_u64_or("finetune", "patience", 0);
    if (cfg.hard_negative_prob < 0.0 || cfg.hard_negative_prob > 1.0) {
        fail(ErrKind::config, "finetune.hard_negative_prob must lie in [0, 1]");
    }

    cfg.ablate_steps = kv.get_u64_or("ablate", "steps", 100);
    cfg.ablate_batch_size = kv.get_u64_or("ablate", "batch_size", 16);
    const std::vector<std::string> sizes = kv.get_list_or("ablate", "queue_sizes");
    if (!sizes.empty()) {
        cfg.ablate_queue_sizes.clear();
        for (const std::string& s : sizes) {
            const unsigned long long v = std::strtoull(s.c_str(), nullptr, 10);
            if (v == 0) fail(ErrKind::config, "ablate.queue_sizes entries must be positive");
            cfg.ablate_queue_sizes.push_back(static_cast<std::size_t>(v));
        }
    }
    cfg.ablate_eval_queries = kv.get_string_or("ablate", "eval_queries", "");
    cfg.ablate_eval_qrels = kv.get_string_or("ablate", "eval_qrels", "");
    if (!cfg.ablate_eval_queries.empty() && !std::filesystem::exists(cfg.ablate_eval_queries)) {
        fail(ErrKind::config, "ablate.eval_queries does not exist: '" + cfg.ablate_eval_queries + "'");
    }
    if (!cfg.ablate_eval_qrels.empty() && !std::filesystem::exists(cfg.ablate_eval_qrels)) {
        fail(ErrKind::config, "ablate.eval_qrels does not exist: '" + cfg.ablate_eval_qrels + "'");
    }

    const std::vector<std::string> unread = kv.unread_keys();
    if (!unread.empty()) {
        std::string joined;
        for (const std::string& key : unread) {
            if (!joined.empty()) joined += ", ";
            joined += key;
        }
        fail(ErrKind::config, "unknown config keys: " + joined);
    }

    return cfg;
}

}  // namespace densecrab
