#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "litmeth/cluster.hpp"
#include "litmeth/error.hpp"
#include "litmeth/model.hpp"
#include "litmeth/tokenizer.hpp"
#include "litmeth/train.hpp"

namespace litmeth {

// Whole-pipeline configuration file (JSON). Absent keys take defaults;
// unknown keys are rejected by name; values are validated before any
// stage runs. vocab_size and num_labels are bound from the vocab and
// label files at run time, not configured.
struct PipelineConfig {
    struct Paths {
        std::string ontology;
        std::string vocab;
        std::string corpus;
        std::string labels;
        std::string lexicon;
        std::string matrix;
        std::string checkpoint;
        std::string curve;
        std::string metrics;
    } paths;

    ModelConfig model;
    TrainConfig train;
    std::size_t max_len = kDefaultMaxLen;

    int min_score = 5;  // a single SYN match is enough by default
    bool include_synonyms = true;
    bool with_fulltext = false;

    LinkageMethod cluster_method = LinkageMethod::WARD;
    ClusterMetric cluster_metric = ClusterMetric::EUCLIDEAN;
    std::size_t cluster_truncate = 0;  // 0 disables truncation

    void validate() const {
        if (model.d_model == 0 || model.num_heads == 0 || model.num_layers == 0 || model.d_ff == 0)
            throw ConfigError("config: model dimensions must be positive");
        if (model.d_model % model.num_heads != 0)
            throw ConfigError("config: model.d_model must be divisible by model.heads");
        if (model.dropout_rate < 0.0 || model.dropout_rate >= 1.0)
            throw ConfigError("config: model.dropout must lie in [0, 1)");
        if (model.max_positions == 0)
            throw ConfigError("config: model.max_positions must be positive");
        train.validate();
        if (max_len < 2) throw ConfigError("config: train.max_len must be at least 2");
        if (max_len > model.max_positions)
            throw ConfigError("config: train.max_len exceeds model.max_positions");
        if (min_score < 0) throw ConfigError("config: annotate.min_score must be nonnegative");
        if (cluster_truncate == 1)
            throw ConfigError("config: cluster.truncate must be 0 (off) or at least 2");
        if (cluster_method == LinkageMethod::WARD && cluster_metric != ClusterMetric::EUCLIDEAN)
            throw ConfigError("config: cluster method 'ward' requires metric 'euclidean'");
    }
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& obj, const char* section,
                                std::initializer_list<const char*> allowed) {
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) known = known || (item.key() == key);
        if (!known)
            throw ConfigError(std::string("config: unknown key '") + item.key() + "' in " +
                              section);
    }
}

inline void require_exists(const std::string& path, const char* field) {
    if (path.empty()) return;
    if (!std::filesystem::exists(path))
        throw ConfigError(std::string("config: paths.") + field + " does not exist: " + path);
}

}  // namespace detail

inline PipelineConfig parse_config(const nlohmann::json& j, bool check_paths = true) {
    PipelineConfig config;
    if (!j.is_object()) throw ConfigError("config: top level must be an object");
    detail::reject_unknown_keys(j, "the top level",
                                {"paths", "model", "train", "annotate", "cluster"});

    if (j.contains("paths")) {
        const auto& p = j["paths"];
        detail::reject_unknown_keys(p, "paths",
                                    {"ontology", "vocab", "corpus", "labels", "lexicon", "matrix",
                                     "checkpoint", "curve", "metrics"});
        config.paths.ontology = p.value("ontology", "");
        config.paths.vocab = p.value("vocab", "");
        config.paths.corpus = p.value("corpus", "");
        config.paths.labels = p.value("labels", "");
        config.paths.lexicon = p.value("lexicon", "");
        config.paths.matrix = p.value("matrix", "");
        config.paths.checkpoint = p.value("checkpoint", "");
        config.paths.curve = p.value("curve", "");
        config.paths.metrics = p.value("metrics", "");
    }

    if (j.contains("model")) {
        const auto& m = j["model"];
        detail::reject_unknown_keys(
            m, "model", {"d_model", "heads", "layers", "d_ff", "max_positions", "dropout"});
        config.model.d_model = m.value("d_model", config.model.d_model);
        config.model.num_heads = m.value("heads", config.model.num_heads);
        config.model.num_layers = m.value("layers", config.model.num_layers);
        config.model.d_ff = m.value("d_ff", config.model.d_ff);
        config.model.max_positions = m.value("max_positions", config.model.max_positions);
        config.model.dropout_rate = m.value("dropout", config.model.dropout_rate);
    }

    if (j.contains("train")) {
        const auto& t = j["train"];
        detail::reject_unknown_keys(t, "train",
                                    {"learning_rate", "epochs", "batch_size", "seed",
                                     "weight_decay", "beta1", "beta2", "eps", "threshold",
                                     "split_ratio", "max_len"});
        config.train.learning_rate = t.value("learning_rate", config.train.learning_rate);
        config.train.epochs = t.value("epochs", config.train.epochs);
        config.train.batch_size = t.value("batch_size", config.train.batch_size);
        config.train.seed = t.value("seed", config.train.seed);
        config.train.weight_decay = t.value("weight_decay", config.train.weight_decay);
        config.train.beta1 = t.value("beta1", config.train.beta1);
        config.train.beta2 = t.value("beta2", config.train.beta2);
        config.train.eps = t.value("eps", config.train.eps);
        config.train.threshold = t.value("threshold", config.train.threshold);
        config.train.split_ratio = t.value("split_ratio", config.train.split_ratio);
        config.max_len = t.value("max_len", config.max_len);
    }

    if (j.contains("annotate")) {
        const auto& a = j["annotate"];
        detail::reject_unknown_keys(a, "annotate",
                                    {"min_score", "include_synonyms", "with_fulltext"});
        config.min_score = a.value("min_score", config.min_score);
        config.include_synonyms = a.value("include_synonyms", config.include_synonyms);
        config.with_fulltext = a.value("with_fulltext", config.with_fulltext);
    }

    if (j.contains("cluster")) {
        const auto& c = j["cluster"];
        detail::reject_unknown_keys(c, "cluster", {"method", "metric", "truncate"});
        if (c.contains("method"))
            config.cluster_method = linkage_method_from_string(c["method"].get<std::string>());
        if (c.contains("metric"))
            config.cluster_metric = cluster_metric_from_string(c["metric"].get<std::string>());
        config.cluster_truncate = c.value("truncate", config.cluster_truncate);
    }

    config.validate();
    if (check_paths) {
        detail::require_exists(config.paths.ontology, "ontology");
        detail::require_exists(config.paths.vocab, "vocab");
        detail::require_exists(config.paths.corpus, "corpus");
        detail::require_exists(config.paths.labels, "labels");
        detail::require_exists(config.paths.lexicon, "lexicon");
        detail::require_exists(config.paths.matrix, "matrix");
    }
    return config;
}

inline PipelineConfig load_config(const std::string& path, bool check_paths = true) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file: " + path);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config: " + path + " is not valid JSON");
    return parse_config(j, check_paths);
}

inline nlohmann::ordered_json config_to_json(const PipelineConfig& config) {
    nlohmann::ordered_json j;
    j["paths"] = {{"ontology", config.paths.ontology},   {"vocab", config.paths.vocab},
                  {"corpus", config.paths.corpus},       {"labels", config.paths.labels},
                  {"lexicon", config.paths.lexicon},     {"matrix", config.paths.matrix},
                  {"checkpoint", config.paths.checkpoint}, {"curve", config.paths.curve},
                  {"metrics", config.paths.metrics}};
    j["model"] = {{"d_model", config.model.d_model},
                  {"heads", config.model.num_heads},
                  {"layers", config.model.num_layers},
                  {"d_ff", config.model.d_ff},
                  {"max_positions", config.model.max_positions},
                  {"dropout", config.model.dropout_rate}};
    j["train"] = {{"learning_rate", config.train.learning_rate},
                  {"epochs", config.train.epochs},
                  {"batch_size", config.train.batch_size},
                  {"seed", config.train.seed},
                  {"weight_decay", config.train.weight_decay},
                  {"beta1", config.train.beta1},
                  {"beta2", config.train.beta2},
                  {"eps", config.train.eps},
                  {"threshold", config.train.threshold},
                  {"split_ratio", config.train.split_ratio},
                  {"max_len", config.max_len}};
    j["annotate"] = {{"min_score", config.min_score},
                     {"include_synonyms", config.include_synonyms},
                     {"with_fulltext", config.with_fulltext}};
    j["cluster"] = {{"method", to_string(config.cluster_method)},
                    {"metric", to_string(config.cluster_metric)},
                    {"truncate", config.cluster_truncate}};
    return j;
}

}  // namespace litmeth
