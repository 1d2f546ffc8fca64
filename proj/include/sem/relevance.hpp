#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "sem/tensor.hpp"

namespace sem {

/// Total map from fine class id to superclass id.
struct SuperclassMap {
    std::vector<int> class_to_super;
    std::vector<std::string> class_names;
    std::vector<std::string> super_names;

    void validate() const;
    bool same_super(int a, int b) const { return class_to_super.at(a) == class_to_super.at(b); }

    /// Two-column text (class_name,superclass_name); '#' starts a comment.
    /// Every name in `class_names` must appear exactly once.
    static SuperclassMap parse(std::istream& in, const std::vector<std::string>& class_names);
};

struct Edge {
    int cls = 0;
    Index feature = 0;
    Scalar weight = 0.0;

    friend bool operator==(const Edge&, const Edge&) = default;
};

struct Component {
    int label = 0;  // smallest class id in the component
    std::vector<int> classes;
    std::vector<Index> features;

    friend bool operator==(const Component&, const Component&) = default;
};

/// Bipartite class-feature graph of the top-K probe weights per class, with
/// features selected by a single class removed.
struct RelevanceGraph {
    Index K = 0;
    int num_classes = 0;
    Index num_features = 0;
    std::vector<Edge> edges;               // sorted by (class, feature)
    std::vector<Index> pruned_features;    // selected by exactly one class
    std::vector<Component> components;     // sorted by label

    std::vector<int> class_degrees() const;
};

/// W is N features x C classes. Ties in the top-K go to the lowest feature
/// index. With `abs_weights` the ranking uses |W|.
RelevanceGraph build_wk(const Matrix& W, Index K, bool abs_weights = false);

std::vector<Component> connected_components(const RelevanceGraph& graph);

/// Sum over classes of the fraction of a class's feature-sharing partners
/// that belong to its superclass. Classes without partners contribute 0.
Scalar relevance_score(const RelevanceGraph& graph, const SuperclassMap& supers);

/// Edge list CSV: header `class_name,feature_id,weight`, one line per edge.
void export_graph(std::ostream& out, const RelevanceGraph& graph,
                  const std::vector<std::string>& class_names);
/// One line per component: label, class names, feature ids.
void export_components(std::ostream& out, const RelevanceGraph& graph,
                       const std::vector<std::string>& class_names);
std::vector<Edge> import_graph(std::istream& in, const std::vector<std::string>& class_names);

nlohmann::json relevance_summary(const RelevanceGraph& graph, Scalar relevance);

struct WeightTable {
    Matrix W;                              // N x C
    std::vector<std::string> class_names;  // C
};

/// CSV with a header of class names followed by N rows of C weights.
WeightTable read_weights_csv(std::istream& in);
void write_weights_csv(std::ostream& out, const WeightTable& table);

}  // namespace sem
