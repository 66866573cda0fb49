#pragma once

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "litmeth/annotate.hpp"
#include "litmeth/error.hpp"

namespace litmeth {

// Micro (label-wise) confusion counts pooled over every (sample, label)
// cell of a prediction/gold matrix pair.
struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
};

inline ConfusionCounts confusion(const LabelMatrix& pred, const LabelMatrix& gold) {
    if (pred.row_ids.size() != gold.row_ids.size() || pred.num_labels != gold.num_labels)
        throw DimensionError("confusion: prediction " + std::to_string(pred.row_ids.size()) + "x" +
                             std::to_string(pred.num_labels) + " vs gold " +
                             std::to_string(gold.row_ids.size()) + "x" +
                             std::to_string(gold.num_labels));
    ConfusionCounts c;
    for (std::size_t r = 0; r < pred.row_ids.size(); ++r) {
        for (std::size_t l = 0; l < pred.num_labels; ++l) {
            bool p = pred.contains(r, l);
            bool g = gold.contains(r, l);
            if (p && g) ++c.tp;
            else if (p && !g) ++c.fp;
            else if (!p && !g) ++c.tn;
            else ++c.fn;
        }
    }
    return c;
}

inline double accuracy(const ConfusionCounts& c) {
    if (c.total() == 0) throw UndefinedMetricError("accuracy: no cells counted");
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

inline double recall(const ConfusionCounts& c) {
    if (c.tp + c.fn == 0) throw UndefinedMetricError("recall: gold has no positive cells");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
}

inline double precision(const ConfusionCounts& c) {
    if (c.tp + c.fp == 0) throw UndefinedMetricError("precision: no predicted positive cells");
    return static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
}

// Harmonic mean of precision and recall. P = R = 0 follows the common
// zero convention instead of raising.
inline double f1(const ConfusionCounts& c) {
    double p = precision(c);
    double r = recall(c);
    if (p + r == 0.0) return 0.0;
    return 2.0 * p * r / (p + r);
}

inline double hamming_loss(const LabelMatrix& pred, const LabelMatrix& gold) {
    ConfusionCounts c = confusion(pred, gold);
    if (c.total() == 0) throw UndefinedMetricError("hamming_loss: no cells counted");
    return static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total());
}

// The five evaluation measures; metrics with zero denominators are null
// and named in flags rather than silently coerced. The single exception
// is f1 at P = R = 0, reported as 0.0 with a flag.
struct MetricReport {
    std::optional<double> accuracy;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
    std::optional<double> hamming_loss;
    std::vector<std::string> flags;
};

inline MetricReport compute_metrics(const LabelMatrix& pred, const LabelMatrix& gold) {
    ConfusionCounts c = confusion(pred, gold);
    MetricReport report;
    try {
        report.accuracy = accuracy(c);
        report.hamming_loss =
            static_cast<double>(c.fp + c.fn) / static_cast<double>(c.total());
    } catch (const UndefinedMetricError&) {
        report.flags.push_back("accuracy_undefined");
    }
    try {
        report.precision = precision(c);
    } catch (const UndefinedMetricError&) {
        report.flags.push_back("precision_undefined");
    }
    try {
        report.recall = recall(c);
    } catch (const UndefinedMetricError&) {
        report.flags.push_back("recall_undefined");
    }
    if (report.precision && report.recall) {
        if (*report.precision + *report.recall == 0.0) {
            report.f1 = 0.0;
            report.flags.push_back("f1_zero_convention");
        } else {
            report.f1 = 2.0 * *report.precision * *report.recall /
                        (*report.precision + *report.recall);
        }
    } else {
        report.flags.push_back("f1_undefined");
    }
    return report;
}

// Four-decimal rendering to match the usual reporting style.
inline std::string metric_report_to_json(const MetricReport& report) {
    auto field = [](std::optional<double> v) -> std::string {
        if (!v) return "null";
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.4f", *v);
        return buf;
    };
    std::string out = "{";
    out += "\"accuracy\":" + field(report.accuracy);
    out += ",\"precision\":" + field(report.precision);
    out += ",\"recall\":" + field(report.recall);
    out += ",\"f1\":" + field(report.f1);
    out += ",\"hamming_loss\":" + field(report.hamming_loss);
    if (!report.flags.empty()) {
        out += ",\"flags\":[";
        for (std::size_t i = 0; i < report.flags.size(); ++i) {
            if (i) out += ',';
            out += '"' + report.flags[i] + '"';
        }
        out += ']';
    }
    out += "}";
    return out;
}

}  // namespace litmeth
