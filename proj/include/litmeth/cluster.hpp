#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "litmeth/annotate.hpp"
#include "litmeth/error.hpp"

namespace litmeth {

enum class LinkageMethod { WARD, SINGLE, COMPLETE, AVERAGE };
enum class ClusterMetric { EUCLIDEAN, JACCARD };

inline const char* to_string(LinkageMethod m) {
    switch (m) {
        case LinkageMethod::WARD: return "ward";
        case LinkageMethod::SINGLE: return "single";
        case LinkageMethod::COMPLETE: return "complete";
        default: return "average";
    }
}

inline const char* to_string(ClusterMetric m) {
    return m == ClusterMetric::EUCLIDEAN ? "euclidean" : "jaccard";
}

inline LinkageMethod linkage_method_from_string(std::string_view s) {
    if (s == "ward") return LinkageMethod::WARD;
    if (s == "single") return LinkageMethod::SINGLE;
    if (s == "complete") return LinkageMethod::COMPLETE;
    if (s == "average") return LinkageMethod::AVERAGE;
    throw InvalidInputError("unknown linkage method '" + std::string(s) + "'");
}

inline ClusterMetric cluster_metric_from_string(std::string_view s) {
    if (s == "euclidean") return ClusterMetric::EUCLIDEAN;
    if (s == "jaccard") return ClusterMetric::JACCARD;
    throw InvalidInputError("unknown cluster metric '" + std::string(s) + "'");
}

struct LinkageStep {
    std::size_t cluster_a = 0;  // a < b by cluster id
    std::size_t cluster_b = 0;
    double distance = 0.0;
    std::size_t merged_size = 0;
};

// Merge tree over matrix rows. Leaves are row indices for a full
// dendrogram; after truncation they are collapsed groups and leaf_sizes
// records how many original rows each group holds.
struct Dendrogram {
    std::vector<LinkageStep> steps;  // n-1 steps for n leaves
    std::vector<std::size_t> leaf_ids;
    std::vector<std::size_t> leaf_sizes;

    std::size_t num_leaves() const { return leaf_ids.size(); }
};

inline double point_distance(const std::vector<double>& a, const std::vector<double>& b,
                             ClusterMetric metric) {
    if (metric == ClusterMetric::EUCLIDEAN) {
        double sum = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            double d = a[i] - b[i];
            sum += d * d;
        }
        return std::sqrt(sum);
    }
    // Jaccard distance on binary vectors: disagreeing positions over
    // positions where either is set; two empty rows have distance 0.
    std::size_t diff = 0, either = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        bool av = a[i] != 0.0, bv = b[i] != 0.0;
        if (av || bv) {
            ++either;
            if (av != bv) ++diff;
        }
    }
    return either == 0 ? 0.0 : static_cast<double>(diff) / static_cast<double>(either);
}

// Agglomerative clustering via Lance-Williams updates on the pairwise
// distance matrix. Clusters are numbered like the rows 0..n-1, then
// n, n+1, ... in merge order. Ties on the minimal distance pick the
// lexicographically lowest (a, b) pair.
inline Dendrogram linkage(const LabelMatrix& matrix, LinkageMethod method, ClusterMetric metric) {
    const auto rows = matrix.dense_rows();
    const std::size_t n = rows.size();
    if (n < 2) throw InvalidInputError("linkage: need at least 2 rows");
    if (method == LinkageMethod::WARD && metric != ClusterMetric::EUCLIDEAN)
        throw InvalidInputError("linkage: WARD requires the EUCLIDEAN metric");

    // Ward operates on squared distances internally; merge distances are
    // reported as square roots to match the usual convention.
    const bool squared = (method == LinkageMethod::WARD);

    const std::size_t total = 2 * n - 1;
    std::vector<double> dist(total * total, 0.0);
    auto d = [&](std::size_t i, std::size_t j) -> double& { return dist[i * total + j]; };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double base = point_distance(rows[i], rows[j], metric);
            double v = squared ? base * base : base;
            d(i, j) = d(j, i) = v;
        }
    }

    std::vector<bool> active(total, false);
    std::vector<std::size_t> size(total, 0);
    for (std::size_t i = 0; i < n; ++i) {
        active[i] = true;
        size[i] = 1;
    }

    Dendrogram dendro;
    dendro.leaf_ids.resize(n);
    dendro.leaf_sizes.assign(n, 1);
    for (std::size_t i = 0; i < n; ++i) dendro.leaf_ids[i] = i;

    for (std::size_t step = 0; step < n - 1; ++step) {
        std::size_t limit = n + step;
        std::size_t best_a = 0, best_b = 0;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < limit; ++i) {
            if (!active[i]) continue;
            for (std::size_t j = i + 1; j < limit; ++j) {
                if (!active[j]) continue;
                if (d(i, j) < best) {
                    best = d(i, j);
                    best_a = i;
                    best_b = j;
                }
            }
        }

        std::size_t merged = n + step;
        double sa = static_cast<double>(size[best_a]);
        double sb = static_cast<double>(size[best_b]);
        for (std::size_t w = 0; w < limit; ++w) {
            if (!active[w] || w == best_a || w == best_b) continue;
            double daw = d(best_a, w), dbw = d(best_b, w);
            double sw = static_cast<double>(size[w]);
            double updated = 0.0;
            switch (method) {
                case LinkageMethod::SINGLE: updated = std::min(daw, dbw); break;
                case LinkageMethod::COMPLETE: updated = std::max(daw, dbw); break;
                case LinkageMethod::AVERAGE: updated = (sa * daw + sb * dbw) / (sa + sb); break;
                case LinkageMethod::WARD:
                    updated = ((sa + sw) * daw + (sb + sw) * dbw - sw * d(best_a, best_b)) /
                              (sa + sb + sw);
                    break;
            }
            d(merged, w) = d(w, merged) = updated;
        }

        active[best_a] = active[best_b] = false;
        active[merged] = true;
        size[merged] = size[best_a] + size[best_b];
        dendro.steps.push_back(LinkageStep{best_a, best_b,
                                           squared ? std::sqrt(d(best_a, best_b)) : d(best_a, best_b),
                                           size[merged]});
    }
    return dendro;
}

// Collapses early merges so at most max_leaves leaf groups remain; each
// collapsed leaf keeps its member count. A limit at or above the leaf
// count returns the dendrogram unchanged.
inline Dendrogram truncate(const Dendrogram& dendro, std::size_t max_leaves) {
    if (max_leaves < 2) throw InvalidInputError("truncate: max_leaves must be at least 2");
    const std::size_t n = dendro.num_leaves();
    if (max_leaves >= n) return dendro;

    const std::size_t kept = max_leaves - 1;  // top of the merge tree
    const std::size_t first_kept = dendro.steps.size() - kept;

    auto cluster_size = [&](std::size_t id) -> std::size_t {
        return id < n ? dendro.leaf_sizes[id] : dendro.steps[id - n].merged_size;
    };

    // ids referenced by kept steps but produced before them become leaves,
    // renumbered 0.. in order of first appearance
    std::vector<std::size_t> old_leaf_ids;
    std::unordered_map<std::size_t, std::size_t> remap;
    auto map_child = [&](std::size_t id) -> std::size_t {
        if (id >= n + first_kept) return max_leaves + (id - n - first_kept);
        auto it = remap.find(id);
        if (it != remap.end()) return it->second;
        std::size_t fresh = old_leaf_ids.size();
        old_leaf_ids.push_back(id);
        remap.emplace(id, fresh);
        return fresh;
    };

    Dendrogram out;
    for (std::size_t s = first_kept; s < dendro.steps.size(); ++s) {
        const auto& step = dendro.steps[s];
        std::size_t a = map_child(step.cluster_a);
        std::size_t b = map_child(step.cluster_b);
        if (a > b) std::swap(a, b);
        out.steps.push_back(LinkageStep{a, b, step.distance, step.merged_size});
    }
    out.leaf_ids.resize(old_leaf_ids.size());
    out.leaf_sizes.resize(old_leaf_ids.size());
    for (std::size_t i = 0; i < old_leaf_ids.size(); ++i) {
        out.leaf_ids[i] = i;
        out.leaf_sizes[i] = cluster_size(old_leaf_ids[i]);
    }
    return out;
}

enum class DendrogramFormat { LINKAGE_CSV, NEWICK };

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
        s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
        s += ".0";
    return s;
}

inline std::string newick_label(const Dendrogram& d, std::size_t leaf) {
    std::string label = std::to_string(d.leaf_ids[leaf]);
    if (d.leaf_sizes[leaf] > 1) label += "x" + std::to_string(d.leaf_sizes[leaf]);
    return label;
}

inline void newick_node(const Dendrogram& d, std::size_t id, double parent_height,
                        std::string& out) {
    const std::size_t n = d.num_leaves();
    double height = id < n ? 0.0 : d.steps[id - n].distance;
    if (id < n) {
        out += newick_label(d, id);
    } else {
        const auto& step = d.steps[id - n];
        out += '(';
        newick_node(d, step.cluster_a, height, out);
        out += ',';
        newick_node(d, step.cluster_b, height, out);
        out += ')';
    }
    out += ':' + format_double(parent_height - height);
}

}  // namespace detail

// LINKAGE_CSV: one "a,b,distance,size" row per merge. NEWICK: branch
// lengths are height differences between parent and child merges.
inline std::string export_dendrogram(const Dendrogram& dendro, DendrogramFormat format) {
    if (format == DendrogramFormat::LINKAGE_CSV) {
        std::string out;
        for (const auto& step : dendro.steps) {
            out += std::to_string(step.cluster_a) + ',' + std::to_string(step.cluster_b) + ',' +
                   detail::format_double(step.distance) + ',' + std::to_string(step.merged_size) +
                   '\n';
        }
        return out;
    }
    const std::size_t n = dendro.num_leaves();
    std::string out;
    if (dendro.steps.empty()) {
        out = n == 1 ? detail::newick_label(dendro, 0) + ":0.0" : "";
        out += ";";
        return out;
    }
    const auto& root = dendro.steps.back();
    double height = root.distance;
    out += '(';
    detail::newick_node(dendro, root.cluster_a, height, out);
    out += ',';
    detail::newick_node(dendro, root.cluster_b, height, out);
    out += ");";
    return out;
}

}  // namespace litmeth
