#pragma once

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "litmeth/annotate.hpp"
#include "litmeth/checkpoint.hpp"
#include "litmeth/cluster.hpp"
#include "litmeth/config.hpp"
#include "litmeth/corpus.hpp"
#include "litmeth/entrez.hpp"
#include "litmeth/fetch.hpp"
#include "litmeth/metrics.hpp"
#include "litmeth/model.hpp"
#include "litmeth/ontology.hpp"
#include "litmeth/tokenizer.hpp"
#include "litmeth/train.hpp"

namespace litmeth::cli {

namespace detail {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw IoError("write failure: " + path);
}

inline std::vector<std::string> split_csv_list(const std::string& joined) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : joined) {
        if (c == ',') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline TermLexicon load_lexicon_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ParseError("lexicon JSON is malformed: " + path, 0);
    return lexicon_from_json(j);
}

inline LabelSpace load_labels_file(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) throw ParseError("label-space JSON is malformed: " + path, 0);
    return label_space_from_json(j);
}

// Per-document label targets have to exist for every corpus pmid.
inline LabelMatrix matrix_rows_for(const LabelMatrix& matrix,
                                   const std::vector<Document>& docs) {
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < matrix.row_ids.size(); ++r) row_of.emplace(matrix.row_ids[r], r);
    LabelMatrix out;
    out.num_labels = matrix.num_labels;
    for (std::size_t i = 0; i < docs.size(); ++i) {
        auto it = row_of.find(docs[i].pmid);
        if (it == row_of.end())
            throw InvalidInputError("pmid " + docs[i].pmid + " has no row in the label matrix");
        out.row_ids.push_back(docs[i].pmid);
        for (auto cell = matrix.cells.lower_bound({it->second, 0});
             cell != matrix.cells.end() && cell->first == it->second; ++cell)
            out.cells.insert({i, cell->second});
    }
    return out;
}

}  // namespace detail

// Subcommands wired over the library. Exit codes: 0 success, 1 usage
// error, 2 data/config error (the failing stage is named on stderr).
inline int run(int argc, const char* const* argv) {
    CLI::App app{"methodology classification pipeline for biomedical literature"};
    app.require_subcommand(1);
    app.fallthrough(false);

    std::string config_path;
    app.add_option("--config", config_path, "pipeline config JSON; flags override its values")
        ->configurable(false);

    // -- extract-ontology --------------------------------------------------
    auto* cmd_extract = app.add_subcommand(
        "extract-ontology", "parse an OBO file and emit the lexicon and label space");
    struct {
        std::string obo, roots, out_lexicon = "lexicon.json", out_labels = "labels.json";
        bool include_synonyms = false, prefs_only = false;
    } ex;
    cmd_extract->add_option("--obo", ex.obo, "OBO flat file");
    cmd_extract->add_option("--roots", ex.roots, "comma-separated subtree root term ids")
        ->required();
    cmd_extract->add_option("--out-lexicon", ex.out_lexicon, "lexicon JSON output");
    cmd_extract->add_option("--out-labels", ex.out_labels, "label-space JSON output");
    cmd_extract->add_flag("--include-synonyms", ex.include_synonyms,
                          "one label per surface form instead of per term");
    cmd_extract->add_flag("--prefs-only", ex.prefs_only, "one label per term (preferred names)");

    // -- fetch --------------------------------------------------------------
    auto* cmd_fetch =
        app.add_subcommand("fetch", "retrieve article records and write a corpus JSONL");
    struct {
        std::string pmids, fixtures, bioc_fixtures, out = "corpus.jsonl";
        std::size_t max_results = kFetchResultCap;
        bool live = false;
    } fe;
    cmd_fetch->add_option("--pmids", fe.pmids, "file with one pmid per line")->required();
    cmd_fetch->add_option("--offline-fixtures", fe.fixtures,
                          "directory of <pmid>.xml PubMed fixtures (offline client)");
    cmd_fetch->add_option("--bioc-fixtures", fe.bioc_fixtures,
                          "directory of <pmid>.xml BioC files for methods/results enrichment");
    cmd_fetch->add_option("--max-results", fe.max_results, "request cap (at most 10000)");
    cmd_fetch->add_flag("--live", fe.live, "use the live client (requires CONTACT_EMAIL)");
    cmd_fetch->add_option("--out", fe.out, "corpus JSONL output");

    // -- annotate -----------------------------------------------------------
    auto* cmd_annotate = app.add_subcommand(
        "annotate", "match lexicon terms in the corpus and build the label matrix");
    struct {
        std::string corpus, lexicon, labels, out_matrix = "matrix.csv", out_annotations;
        int min_score = -1;
        bool abstract_only = false, with_fulltext = false;
    } an;
    cmd_annotate->add_option("--corpus", an.corpus, "corpus JSONL");
    cmd_annotate->add_option("--lexicon", an.lexicon, "lexicon JSON");
    cmd_annotate->add_option("--labels", an.labels, "label-space JSON");
    cmd_annotate->add_option("--min-score", an.min_score, "annotation score threshold");
    cmd_annotate->add_option("--out-matrix", an.out_matrix, "label matrix CSV output");
    cmd_annotate->add_option("--out-annotations", an.out_annotations,
                             "annotations JSONL output (optional)");
    cmd_annotate->add_flag("--abstract-only", an.abstract_only, "annotate abstracts only");
    cmd_annotate->add_flag("--with-fulltext", an.with_fulltext,
                           "annotate abstracts plus methods and results");

    // -- cluster ------------------------------------------------------------
    auto* cmd_cluster =
        app.add_subcommand("cluster", "agglomerative clustering over label-matrix rows");
    struct {
        std::string matrix, linkage, metric, out = "linkage.csv", newick;
        std::size_t truncate_leaves = 0;
    } cl;
    cmd_cluster->add_option("--matrix", cl.matrix, "label matrix CSV");
    cmd_cluster->add_option("--linkage", cl.linkage, "ward|single|complete|average");
    cmd_cluster->add_option("--metric", cl.metric, "euclidean|jaccard");
    cmd_cluster->add_option("--truncate", cl.truncate_leaves, "collapse to at most N leaf groups");
    cmd_cluster->add_option("--out", cl.out, "linkage CSV output");
    cmd_cluster->add_option("--newick", cl.newick, "Newick output (optional)");

    // -- train --------------------------------------------------------------
    auto* cmd_train = app.add_subcommand("train", "fine-tune the encoder on the label matrix");
    struct {
        std::string corpus, matrix, vocab, out_checkpoint = "model.ckpt", out_curve = "curve.csv";
        std::uint64_t seed = 0;
        bool seed_set = false;
        bool abstract_only = false, with_fulltext = false;
    } tr;
    cmd_train->add_option("--corpus", tr.corpus, "corpus JSONL");
    cmd_train->add_option("--matrix", tr.matrix, "label matrix CSV (training targets)");
    cmd_train->add_option("--vocab", tr.vocab, "vocab file, one token per line");
    cmd_train->add_option("--out-checkpoint", tr.out_checkpoint, "checkpoint output");
    cmd_train->add_option("--out-curve", tr.out_curve, "loss curve CSV output");
    cmd_train->add_option("--seed", tr.seed, "pipeline seed")->each([&](const std::string&) {
        tr.seed_set = true;
    });
    cmd_train->add_flag("--abstract-only", tr.abstract_only, "train on abstracts only");
    cmd_train->add_flag("--with-fulltext", tr.with_fulltext,
                        "train on abstracts plus methods and results");

    // -- evaluate -----------------------------------------------------------
    auto* cmd_eval = app.add_subcommand("evaluate", "score predictions against gold labels");
    struct {
        std::string checkpoint, corpus, matrix, vocab, out = "metrics.json", subset = "all";
        double threshold = -1.0;
        std::uint64_t seed = 0;
        bool seed_set = false;
        bool abstract_only = false, with_fulltext = false;
    } ev;
    cmd_eval->add_option("--checkpoint", ev.checkpoint, "model checkpoint");
    cmd_eval->add_option("--corpus", ev.corpus, "corpus JSONL");
    cmd_eval->add_option("--matrix", ev.matrix, "gold label matrix CSV");
    cmd_eval->add_option("--vocab", ev.vocab, "vocab file");
    cmd_eval->add_option("--threshold", ev.threshold, "sigmoid decision threshold");
    cmd_eval->add_option("--split", ev.subset, "all|train|test: evaluate the whole corpus or "
                                               "one side of the seeded split");
    cmd_eval->add_option("--seed", ev.seed, "pipeline seed (must match training for splits)")
        ->each([&](const std::string&) { ev.seed_set = true; });
    cmd_eval->add_option("--out", ev.out, "metric report JSON output");
    cmd_eval->add_flag("--abstract-only", ev.abstract_only, "evaluate on abstracts only");
    cmd_eval->add_flag("--with-fulltext", ev.with_fulltext,
                       "evaluate on abstracts plus methods and results");

    // -- predict ------------------------------------------------------------
    auto* cmd_predict = app.add_subcommand("predict", "multi-label prediction for one text");
    struct {
        std::string checkpoint, vocab, labels, input_text, input_file, out;
        double threshold = -1.0;
    } pr;
    cmd_predict->add_option("--checkpoint", pr.checkpoint, "model checkpoint");
    cmd_predict->add_option("--vocab", pr.vocab, "vocab file");
    cmd_predict->add_option("--labels", pr.labels, "label-space JSON for surface names");
    cmd_predict->add_option("--text", pr.input_text, "text to classify");
    cmd_predict->add_option("--input", pr.input_file, "file whose contents are classified");
    cmd_predict->add_option("--threshold", pr.threshold, "sigmoid decision threshold");
    cmd_predict->add_option("--out", pr.out, "prediction JSON output (optional)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        std::cerr << app.help();
        return 1;
    }

    try {
        PipelineConfig config =
            config_path.empty() ? PipelineConfig{} : load_config(config_path);

        if (cmd_extract->parsed()) {
            std::string obo_path = ex.obo.empty() ? config.paths.ontology : ex.obo;
            if (obo_path.empty())
                throw ConfigError("extract-ontology: no OBO file (give --obo or paths.ontology)");
            auto terms = parse_obo(detail::read_file(obo_path));
            TermLexicon lexicon = extract_subtrees(terms, detail::split_csv_list(ex.roots));
            bool include_synonyms = config.include_synonyms;
            if (ex.include_synonyms) include_synonyms = true;
            if (ex.prefs_only) include_synonyms = false;
            LabelSpace labels = build_label_space(lexicon, include_synonyms);
            detail::write_file(ex.out_lexicon, lexicon_to_json(lexicon).dump(2) + "\n");
            detail::write_file(ex.out_labels, label_space_to_json(labels).dump(2) + "\n");
            std::cout << "extract-ontology: " << lexicon.terms.size() << " terms, "
                      << labels.size() << " labels -> " << ex.out_lexicon << ", " << ex.out_labels
                      << "\n";
            return 0;
        }

        if (cmd_fetch->parsed()) {
            FetchRequest request;
            std::istringstream pmid_stream(detail::read_file(fe.pmids));
            std::string pmid;
            while (std::getline(pmid_stream, pmid)) {
                if (!pmid.empty() && pmid.back() == '\r') pmid.pop_back();
                if (!pmid.empty()) request.pmids.push_back(pmid);
            }
            request.max_results = fe.max_results;

            std::vector<Document> docs;
            if (fe.live) {
                const char* email = std::getenv("CONTACT_EMAIL");
                EntrezFetchClient::Options options;
                options.contact_email = email ? email : "";
                EntrezFetchClient client(std::move(options));
                docs = fetch_batch(request, client);
            } else {
                if (fe.fixtures.empty())
                    throw ConfigError("fetch: give --offline-fixtures DIR or select --live");
                FixtureFetchClient client(fe.fixtures);
                docs = fetch_batch(request, client);
            }

            if (!fe.bioc_fixtures.empty()) {
                std::unordered_map<std::string, Document> partials;
                for (const auto& doc : docs) {
                    std::filesystem::path file =
                        std::filesystem::path(fe.bioc_fixtures) / (doc.pmid + ".xml");
                    if (!std::filesystem::exists(file)) continue;
                    for (auto& partial : parse_bioc_fulltext(detail::read_file(file.string())))
                        partials.emplace(partial.pmid.empty() ? doc.pmid : partial.pmid,
                                         std::move(partial));
                }
                for (auto& doc : docs) {
                    auto it = partials.find(doc.pmid);
                    if (it == partials.end()) continue;
                    doc.methods = it->second.methods;
                    doc.results = it->second.results;
                }
            }

            std::size_t fetched = docs.size();
            docs = filter_corpus(docs);
            store_corpus(docs, fe.out);
            std::cout << "fetch: " << fetched << " records, " << docs.size()
                      << " kept after abstract filter -> " << fe.out << "\n";
            return 0;
        }

        if (cmd_annotate->parsed()) {
            std::string corpus_path = an.corpus.empty() ? config.paths.corpus : an.corpus;
            std::string lexicon_path = an.lexicon.empty() ? config.paths.lexicon : an.lexicon;
            std::string labels_path = an.labels.empty() ? config.paths.labels : an.labels;
            if (corpus_path.empty() || lexicon_path.empty() || labels_path.empty())
                throw ConfigError("annotate: corpus, lexicon and labels paths are required");
            int min_score = an.min_score >= 0 ? an.min_score : config.min_score;
            bool with_fulltext = config.with_fulltext;
            if (an.abstract_only) with_fulltext = false;
            if (an.with_fulltext) with_fulltext = true;

            auto docs = load_corpus(corpus_path);
            TermLexicon lexicon = detail::load_lexicon_file(lexicon_path);
            LabelSpace labels = detail::load_labels_file(labels_path);
            TermMatcher matcher(lexicon, labels);

            std::vector<std::set<std::size_t>> label_sets;
            label_sets.reserve(docs.size());
            std::ofstream ann_out;
            if (!an.out_annotations.empty()) {
                ann_out.open(an.out_annotations, std::ios::binary);
                if (!ann_out) throw IoError("cannot open " + an.out_annotations);
            }
            std::size_t labeled_docs = 0;
            for (const auto& doc : docs) {
                auto annotations = matcher.match(training_text(doc, with_fulltext));
                if (ann_out.is_open()) write_annotations_jsonl(doc.pmid, annotations, ann_out);
                std::set<std::size_t> set;
                for (const auto& a : annotations)
                    if (annotation_score2(a) >= min_score) set.insert(a.label_id);
                if (!set.empty()) ++labeled_docs;
                label_sets.push_back(std::move(set));
            }
            LabelMatrix matrix = build_label_matrix(docs, label_sets, labels);
            write_label_matrix_csv(matrix, labels, an.out_matrix);
            std::cout << "annotate: " << docs.size() << " documents, " << labeled_docs
                      << " labeled, " << labels.size() << " labels -> " << an.out_matrix << "\n";
            return 0;
        }

        if (cmd_cluster->parsed()) {
            std::string matrix_path = cl.matrix.empty() ? config.paths.matrix : cl.matrix;
            if (matrix_path.empty()) throw ConfigError("cluster: a label matrix CSV is required");
            LinkageMethod method =
                cl.linkage.empty() ? config.cluster_method : linkage_method_from_string(cl.linkage);
            ClusterMetric metric =
                cl.metric.empty() ? config.cluster_metric : cluster_metric_from_string(cl.metric);
            std::size_t truncate_leaves =
                cl.truncate_leaves ? cl.truncate_leaves : config.cluster_truncate;

            auto loaded = read_label_matrix_csv(matrix_path);
            Dendrogram dendro = linkage(loaded.matrix, method, metric);
            if (truncate_leaves >= 2) dendro = truncate(dendro, truncate_leaves);
            detail::write_file(cl.out, export_dendrogram(dendro, DendrogramFormat::LINKAGE_CSV));
            if (!cl.newick.empty())
                detail::write_file(cl.newick,
                                   export_dendrogram(dendro, DendrogramFormat::NEWICK) + "\n");
            std::cout << "cluster: " << loaded.matrix.row_ids.size() << " rows, "
                      << dendro.steps.size() << " merges (" << to_string(method) << "/"
                      << to_string(metric) << ") -> " << cl.out << "\n";
            return 0;
        }

        if (cmd_train->parsed()) {
            std::string corpus_path = tr.corpus.empty() ? config.paths.corpus : tr.corpus;
            std::string matrix_path = tr.matrix.empty() ? config.paths.matrix : tr.matrix;
            std::string vocab_path = tr.vocab.empty() ? config.paths.vocab : tr.vocab;
            if (corpus_path.empty() || matrix_path.empty() || vocab_path.empty())
                throw ConfigError("train: corpus, matrix and vocab paths are required");
            if (tr.seed_set) config.train.seed = tr.seed;
            bool with_fulltext = config.with_fulltext;
            if (tr.abstract_only) with_fulltext = false;
            if (tr.with_fulltext) with_fulltext = true;

            auto docs = load_corpus(corpus_path);
            auto loaded = read_label_matrix_csv(matrix_path);
            Vocab vocab = load_vocab_file(vocab_path);

            ModelConfig model_config = config.model;
            model_config.vocab_size = vocab.size();
            model_config.num_labels = loaded.matrix.num_labels;
            model_config.validate();

            auto examples =
                make_examples(docs, loaded.matrix, vocab, config.max_len, with_fulltext);
            auto [train_set, val_set] =
                split(examples, config.train.split_ratio,
                      fanout_seed(config.train.seed, "split"));
            TrainResult result = train_loop(train_set, val_set, model_config, config.train);
            save_checkpoint(result.params, model_config, tr.out_checkpoint);
            detail::write_file(tr.out_curve, curve_to_csv(result.curve));
            std::cout << "train: " << train_set.size() << "/" << val_set.size()
                      << " train/val examples, best epoch " << result.best_epoch << " (val loss "
                      << result.curve[result.best_epoch - 1].val_loss << ") -> "
                      << tr.out_checkpoint << "\n";
            return 0;
        }

        if (cmd_eval->parsed()) {
            std::string checkpoint_path =
                ev.checkpoint.empty() ? config.paths.checkpoint : ev.checkpoint;
            std::string corpus_path = ev.corpus.empty() ? config.paths.corpus : ev.corpus;
            std::string matrix_path = ev.matrix.empty() ? config.paths.matrix : ev.matrix;
            std::string vocab_path = ev.vocab.empty() ? config.paths.vocab : ev.vocab;
            if (checkpoint_path.empty() || corpus_path.empty() || matrix_path.empty() ||
                vocab_path.empty())
                throw ConfigError("evaluate: checkpoint, corpus, matrix and vocab are required");
            if (ev.seed_set) config.train.seed = ev.seed;
            double threshold = ev.threshold > 0.0 ? ev.threshold : config.train.threshold;
            bool with_fulltext = config.with_fulltext;
            if (ev.abstract_only) with_fulltext = false;
            if (ev.with_fulltext) with_fulltext = true;

            Checkpoint ck = load_checkpoint(checkpoint_path);
            auto docs = load_corpus(corpus_path);
            auto loaded = read_label_matrix_csv(matrix_path);
            Vocab vocab = load_vocab_file(vocab_path);
            if (vocab.size() != ck.config.vocab_size)
                throw IncompatibleCheckpointError(
                    "evaluate: vocab size " + std::to_string(vocab.size()) +
                    " does not match checkpoint vocab_size " +
                    std::to_string(ck.config.vocab_size));
            if (loaded.matrix.num_labels != ck.config.num_labels)
                throw IncompatibleCheckpointError(
                    "evaluate: matrix has " + std::to_string(loaded.matrix.num_labels) +
                    " labels but the checkpoint expects " +
                    std::to_string(ck.config.num_labels));

            if (ev.subset != "all") {
                auto [train_docs, test_docs] =
                    split(docs, config.train.split_ratio, fanout_seed(config.train.seed, "split"));
                if (ev.subset == "train") docs = std::move(train_docs);
                else if (ev.subset == "test") docs = std::move(test_docs);
                else throw ConfigError("evaluate: --split must be all, train or test");
            }

            LabelMatrix gold = detail::matrix_rows_for(loaded.matrix, docs);
            LabelMatrix pred;
            pred.num_labels = gold.num_labels;
            for (std::size_t i = 0; i < docs.size(); ++i) {
                pred.row_ids.push_back(docs[i].pmid);
                Encoding enc =
                    encode(training_text(docs[i], with_fulltext), vocab, config.max_len);
                std::vector<double> logits =
                    encoder_forward(enc.ids, enc.attention_mask, ck.params, ck.config);
                for (std::size_t j = 0; j < logits.size(); ++j)
                    if (1.0 / (1.0 + std::exp(-logits[j])) > threshold) pred.cells.insert({i, j});
            }

            MetricReport report = compute_metrics(pred, gold);
            detail::write_file(ev.out, metric_report_to_json(report) + "\n");
            std::cout << "evaluate: " << docs.size() << " documents (" << ev.subset << ") -> "
                      << ev.out << " " << metric_report_to_json(report) << "\n";
            return 0;
        }

        if (cmd_predict->parsed()) {
            std::string checkpoint_path =
                pr.checkpoint.empty() ? config.paths.checkpoint : pr.checkpoint;
            std::string vocab_path = pr.vocab.empty() ? config.paths.vocab : pr.vocab;
            std::string labels_path = pr.labels.empty() ? config.paths.labels : pr.labels;
            if (checkpoint_path.empty() || vocab_path.empty())
                throw ConfigError("predict: checkpoint and vocab are required");
            if (pr.input_text.empty() && pr.input_file.empty())
                throw ConfigError("predict: give --text or --input");
            double threshold = pr.threshold > 0.0 ? pr.threshold : config.train.threshold;

            Checkpoint ck = load_checkpoint(checkpoint_path);
            Vocab vocab = load_vocab_file(vocab_path);
            LabelSpace labels;
            if (!labels_path.empty()) {
                labels = detail::load_labels_file(labels_path);
                if (labels.size() != ck.config.num_labels)
                    throw IncompatibleCheckpointError(
                        "predict: label space of " + std::to_string(labels.size()) +
                        " does not match checkpoint num_labels " +
                        std::to_string(ck.config.num_labels));
            }
            std::string input =
                pr.input_file.empty() ? pr.input_text : detail::read_file(pr.input_file);

            auto predictions = predict(ck.params, ck.config, input, vocab, threshold);
            nlohmann::ordered_json out_json;
            out_json["threshold"] = threshold;
            out_json["labels"] = nlohmann::ordered_json::array();
            for (const auto& p : predictions) {
                nlohmann::ordered_json entry;
                entry["label_id"] = p.label_id;
                if (!labels.labels.empty()) entry["surface"] = labels.labels[p.label_id].surface;
                char prob[16];
                std::snprintf(prob, sizeof(prob), "%.4f", p.probability);
                entry["probability"] = std::stod(prob);
                out_json["labels"].push_back(std::move(entry));
                std::cout << p.label_id;
                if (!labels.labels.empty()) std::cout << "\t" << labels.labels[p.label_id].surface;
                std::cout << "\t" << prob << "\n";
            }
            if (!pr.out.empty()) detail::write_file(pr.out, out_json.dump(2) + "\n");
            std::cout << "predict: " << predictions.size() << " labels above threshold "
                      << threshold << "\n";
            return 0;
        }
    } catch (const Error& e) {
        const char* stage = "pipeline";
        if (cmd_extract->parsed()) stage = "extract-ontology";
        else if (cmd_fetch->parsed()) stage = "fetch";
        else if (cmd_annotate->parsed()) stage = "annotate";
        else if (cmd_cluster->parsed()) stage = "cluster";
        else if (cmd_train->parsed()) stage = "train";
        else if (cmd_eval->parsed()) stage = "evaluate";
        else if (cmd_predict->parsed()) stage = "predict";
        std::cerr << "litmeth " << stage << ": " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace litmeth::cli
