#include <doctest.h>

#include <sstream>

#include "sem/relevance.hpp"
#include "sem/rng.hpp"
#include "support/relevance_oracle.hpp"

using namespace sem;
using namespace sem::testing;

namespace {

SuperclassMap supers_of(std::vector<int> map) {
    SuperclassMap m;
    int top = 0;
    for (std::size_t c = 0; c < map.size(); ++c) {
        m.class_names.push_back("c" + std::to_string(c));
        top = std::max(top, map[c]);
    }
    for (int s = 0; s <= top; ++s) m.super_names.push_back("s" + std::to_string(s));
    m.class_to_super = std::move(map);
    return m;
}

}  // namespace

TEST_CASE("build_wk examples") {
    const Matrix I = Matrix::Identity(5, 5);
    for (Index K : {1, 2, 5}) {
        const RelevanceGraph g = build_wk(I, K);
        if (K == 1) CHECK(g.edges.empty());
        for (int d : g.class_degrees()) CHECK(d <= K);
    }
    CHECK(build_wk(I, 1).pruned_features.size() == 5);

    Matrix twin(3, 2);
    twin << 0.1, 0.1, 0.9, 0.9, 0.3, 0.3;
    const RelevanceGraph g = build_wk(twin, 1);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0] == Edge{0, 1, 0.9});
    CHECK(g.edges[1] == Edge{1, 1, 0.9});
    REQUIRE(g.components.size() == 1);
    CHECK(g.components[0].classes.size() + g.components[0].features.size() == 3);

    CHECK(relevance_score(g, supers_of({0, 0})) == 2.0);
    CHECK(relevance_score(g, supers_of({0, 1})) == 0.0);
    CHECK_THROWS_AS(relevance_score(g, supers_of({0})), DataError);

    CHECK_THROWS_AS(build_wk(twin, 0), ParameterError);
    CHECK_THROWS_AS(build_wk(twin, 4), ParameterError);
}

TEST_CASE("ties go to the lowest feature index") {
    Matrix W(4, 2);
    W << 1, 1, 2, 2, 2, 2, 0, 0;
    const RelevanceGraph g = build_wk(W, 1);
    REQUIRE(g.edges.size() == 2);
    CHECK(g.edges[0].feature == 1);
}

TEST_CASE("empty graph has no components and a header-only export") {
    const RelevanceGraph g = build_wk(Matrix::Identity(3, 3), 1);
    CHECK(connected_components(g).empty());
    std::stringstream out;
    export_graph(out, g, {"a", "b", "c"});
    CHECK(out.str() == "class_name,feature_id,weight\r\n");
}

TEST_CASE("export and import round-trip") {
    Rng rng(2);
    const Matrix W = random_weights(12, 5, rng);
    const RelevanceGraph g = build_wk(W, 3);
    const std::vector<std::string> names{"apple", "b,c", "cat \"x\"", "dog", "eel"};
    std::stringstream out;
    export_graph(out, g, names);
    std::size_t lines = 0;
    for (std::string line; std::getline(out, line);) ++lines;
    CHECK(lines == g.edges.size() + 1);
    out.clear();
    out.seekg(0);
    CHECK(import_graph(out, names) == g.edges);

    const nlohmann::json j = relevance_summary(g, 1.5);
    CHECK(j["K"] == 3);
    CHECK(j["n_edges"] == g.edges.size());
    CHECK(j["n_components"] == g.components.size());
}

TEST_CASE("pipeline matches the naive oracle on random instances") {
    Rng rng = Rng::stream(21, "relevance");
    for (int trial = 0; trial < 100; ++trial) {
        const Index N = 3 + static_cast<Index>(rng.below(23));
        const int C = 2 + static_cast<int>(rng.below(7));
        const Index K = 1 + static_cast<Index>(rng.below(std::min<std::uint64_t>(4, N)));
        const Matrix W = random_weights(N, C, rng);
        const SuperclassMap supers = random_supers(C, 3, rng);
        for (bool abs_weights : {false, true}) {
            const RelevanceGraph g = build_wk(W, K, abs_weights);
            const NaiveGraph ref = naive_pipeline(W, K, supers, abs_weights);
            CHECK(g.edges == ref.edges);
            CHECK(g.pruned_features == ref.pruned);
            CHECK(g.components == ref.components);
            CHECK(connected_components(g) == ref.components);
            const double score = relevance_score(g, supers);
            CHECK(score == ref.relevance);
            CHECK(score >= 0.0);
            CHECK(score <= C);
        }
    }
}

TEST_CASE("relevance is invariant under positive column rescaling") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        Matrix W(15, 6);
        for (Index i = 0; i < W.size(); ++i) W.data()[i] = rng.normal();
        const SuperclassMap supers = random_supers(6, 2, rng);
        Matrix scaled = W;
        for (Index c = 0; c < 6; ++c) scaled.col(c) *= 0.1 + 5.0 * rng.uniform();
        const RelevanceGraph a = build_wk(W, 3);
        const RelevanceGraph b = build_wk(scaled, 3);
        CHECK(relevance_score(a, supers) == relevance_score(b, supers));
        CHECK(a.components == b.components);
    }
}

TEST_CASE("superclass map parsing") {
    const std::vector<std::string> classes{"apple", "pear", "shark"};
    std::istringstream ok("# fruit and fish\napple,fruit\npear,fruit\nshark,fish\nwhale,fish\n");
    const SuperclassMap m = SuperclassMap::parse(ok, classes);
    CHECK(m.same_super(0, 1));
    CHECK_FALSE(m.same_super(0, 2));
    std::istringstream missing("apple,fruit\npear,fruit\n");
    CHECK_THROWS_AS(SuperclassMap::parse(missing, classes), DataError);
    std::istringstream dup("apple,fruit\napple,fish\npear,fruit\nshark,fish\n");
    CHECK_THROWS_AS(SuperclassMap::parse(dup, classes), DataError);
}

TEST_CASE("weights csv round-trip") {
    WeightTable t;
    t.W = Matrix(2, 3);
    t.W << 0.1, -2.5, 1e-17, 3, 4, 5.125;
    t.class_names = {"a", "b c", "d,e"};
    std::stringstream s;
    write_weights_csv(s, t);
    const WeightTable back = read_weights_csv(s);
    CHECK(back.W == t.W);
    CHECK(back.class_names == t.class_names);
}
