#include "sem/relevance.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <queue>
#include <set>
#include <sstream>

#include "sem/csv.hpp"

namespace sem {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void SuperclassMap::validate() const {
    if (class_to_super.empty()) throw DataError("empty superclass map");
    for (int s : class_to_super) {
        if (s < 0 || (!super_names.empty() && s >= static_cast<int>(super_names.size()))) {
            throw DataError("superclass id out of range");
        }
    }
}

SuperclassMap SuperclassMap::parse(std::istream& in, const std::vector<std::string>& class_names) {
    std::map<std::string, int> class_ids;
    for (std::size_t i = 0; i < class_names.size(); ++i) class_ids[class_names[i]] = static_cast<int>(i);
    SuperclassMap map;
    map.class_names = class_names;
    map.class_to_super.assign(class_names.size(), -1);
    std::map<std::string, int> super_ids;
    std::string line;
    while (std::getline(in, line)) {
        if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
        if (trim(line).empty()) continue;
        std::istringstream ls(line);
        auto fields = read_csv(ls);
        if (fields.size() != 1 || fields[0].size() != 2) {
            throw FormatError("superclass line needs two columns: '" + line + "'");
        }
        const std::string cls = trim(fields[0][0]);
        const std::string sup = trim(fields[0][1]);
        auto it = class_ids.find(cls);
        if (it == class_ids.end()) continue;  // classes absent from the probe are ignored
        if (map.class_to_super[it->second] != -1) throw DataError("class listed twice: " + cls);
        auto [sit, inserted] = super_ids.emplace(sup, static_cast<int>(map.super_names.size()));
        if (inserted) map.super_names.push_back(sup);
        map.class_to_super[it->second] = sit->second;
    }
    for (std::size_t i = 0; i < class_names.size(); ++i) {
        if (map.class_to_super[i] == -1) throw DataError("class has no superclass: " + class_names[i]);
    }
    return map;
}

std::vector<int> RelevanceGraph::class_degrees() const {
    std::vector<int> deg(num_classes, 0);
    for (const Edge& e : edges) deg[e.cls] += 1;
    return deg;
}

RelevanceGraph build_wk(const Matrix& W, Index K, bool abs_weights) {
    const Index n = W.rows();
    const int c = static_cast<int>(W.cols());
    if (K < 1 || K > n) throw ParameterError("K must lie in [1, N]");

    std::vector<std::vector<Index>> chosen(c);
    std::vector<int> feature_degree(n, 0);
    std::vector<Index> order(n);
    for (int cls = 0; cls < c; ++cls) {
        std::iota(order.begin(), order.end(), Index{0});
        auto key = [&](Index f) { return abs_weights ? std::abs(W(f, cls)) : W(f, cls); };
        std::stable_sort(order.begin(), order.end(),
                         [&](Index a, Index b) { return key(a) > key(b); });
        chosen[cls].assign(order.begin(), order.begin() + K);
        std::sort(chosen[cls].begin(), chosen[cls].end());
        for (Index f : chosen[cls]) feature_degree[f] += 1;
    }

    RelevanceGraph g;
    g.K = K;
    g.num_classes = c;
    g.num_features = n;
    for (Index f = 0; f < n; ++f) {
        if (feature_degree[f] == 1) g.pruned_features.push_back(f);
    }
    for (int cls = 0; cls < c; ++cls) {
        for (Index f : chosen[cls]) {
            if (feature_degree[f] >= 2) g.edges.push_back({cls, f, W(f, cls)});
        }
    }
    g.components = connected_components(g);
    return g;
}

std::vector<Component> connected_components(const RelevanceGraph& graph) {
    // Node ids: classes [0, C), features C + f.
    const Index c = graph.num_classes;
    const Index total = c + graph.num_features;
    std::vector<std::vector<Index>> adj(total);
    for (const Edge& e : graph.edges) {
        adj[e.cls].push_back(c + e.feature);
        adj[c + e.feature].push_back(e.cls);
    }
    std::vector<char> seen(total, 0);
    std::vector<Component> out;
    for (Index start = 0; start < c; ++start) {
        if (seen[start] || adj[start].empty()) continue;
        Component comp;
        comp.label = static_cast<int>(start);
        std::queue<Index> frontier;
        frontier.push(start);
        seen[start] = 1;
        while (!frontier.empty()) {
            const Index u = frontier.front();
            frontier.pop();
            if (u < c) {
                comp.classes.push_back(static_cast<int>(u));
            } else {
                comp.features.push_back(u - c);
            }
            for (Index v : adj[u]) {
                if (!seen[v]) {
                    seen[v] = 1;
                    frontier.push(v);
                }
            }
        }
        std::sort(comp.classes.begin(), comp.classes.end());
        std::sort(comp.features.begin(), comp.features.end());
        out.push_back(std::move(comp));
    }
    return out;
}

Scalar relevance_score(const RelevanceGraph& graph, const SuperclassMap& supers) {
    std::vector<std::vector<int>> classes_of_feature(graph.num_features);
    for (const Edge& e : graph.edges) {
        if (e.cls >= static_cast<int>(supers.class_to_super.size())) {
            throw DataError("class " + std::to_string(e.cls) + " missing from superclass map");
        }
        classes_of_feature[e.feature].push_back(e.cls);
    }
    std::vector<std::set<int>> partners(graph.num_classes);
    for (const auto& cls : classes_of_feature) {
        for (int a : cls) {
            for (int b : cls) {
                if (a != b) partners[a].insert(b);
            }
        }
    }
    Scalar total = 0.0;
    for (int i = 0; i < graph.num_classes; ++i) {
        if (partners[i].empty()) continue;
        int same = 0;
        for (int j : partners[i]) same += supers.same_super(i, j) ? 1 : 0;
        total += static_cast<Scalar>(same) / static_cast<Scalar>(partners[i].size());
    }
    return total;
}

void export_graph(std::ostream& out, const RelevanceGraph& graph,
                  const std::vector<std::string>& class_names) {
    CsvWriter csv(out);
    csv.row({"class_name", "feature_id", "weight"});
    for (const Edge& e : graph.edges) {
        csv.row({class_names.at(e.cls), std::to_string(e.feature), format_double(e.weight)});
    }
}

void export_components(std::ostream& out, const RelevanceGraph& graph,
                       const std::vector<std::string>& class_names) {
    CsvWriter csv(out);
    csv.row({"component", "classes", "features"});
    for (const Component& comp : graph.components) {
        std::string cls;
        for (int c : comp.classes) cls += (cls.empty() ? "" : " ") + class_names.at(c);
        std::string feats;
        for (Index f : comp.features) feats += (feats.empty() ? "" : " ") + std::to_string(f);
        csv.row({class_names.at(comp.label), cls, feats});
    }
}

std::vector<Edge> import_graph(std::istream& in, const std::vector<std::string>& class_names) {
    auto rows = read_csv(in);
    if (rows.empty() || rows[0] != std::vector<std::string>{"class_name", "feature_id", "weight"}) {
        throw FormatError("edge list is missing its header");
    }
    std::map<std::string, int> ids;
    for (std::size_t i = 0; i < class_names.size(); ++i) ids[class_names[i]] = static_cast<int>(i);
    std::vector<Edge> edges;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != 3) throw FormatError("edge line needs three fields");
        auto it = ids.find(rows[r][0]);
        if (it == ids.end()) throw DataError("unknown class in edge list: " + rows[r][0]);
        edges.push_back({it->second, static_cast<Index>(std::stoll(rows[r][1])), parse_double(rows[r][2])});
    }
    return edges;
}

nlohmann::json relevance_summary(const RelevanceGraph& graph, Scalar relevance) {
    return {{"K", graph.K},
            {"n_edges", graph.edges.size()},
            {"n_components", graph.components.size()},
            {"relevance", relevance}};
}

WeightTable read_weights_csv(std::istream& in) {
    auto rows = read_csv(in);
    if (rows.empty()) throw FormatError("weights CSV is empty");
    WeightTable t;
    t.class_names = rows[0];
    const Index c = static_cast<Index>(t.class_names.size());
    t.W.resize(static_cast<Index>(rows.size()) - 1, c);
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (static_cast<Index>(rows[r].size()) != c) {
            throw FormatError("weights row " + std::to_string(r) + " has the wrong column count");
        }
        for (Index j = 0; j < c; ++j) t.W(static_cast<Index>(r) - 1, j) = parse_double(rows[r][j]);
    }
    return t;
}

void write_weights_csv(std::ostream& out, const WeightTable& table) {
    CsvWriter csv(out);
    csv.row(table.class_names);
    for (Index r = 0; r < table.W.rows(); ++r) {
        std::vector<std::string> fields;
        for (Index j = 0; j < table.W.cols(); ++j) fields.push_back(format_double(table.W(r, j)));
        csv.row(fields);
    }
}

}  // namespace sem
