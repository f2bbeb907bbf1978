#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <vector>

#include "tailcausal/dag.hpp"

using namespace tailcausal;

namespace {

Dag chain3() { return Dag(3, {{1, 2}, {2, 3}}); }
Dag diamond() { return Dag(4, {{1, 2}, {1, 3}, {2, 4}, {3, 4}}); }

/// Independent oracle: reflexive-free transitive closure by repeated boolean
/// composition of the edge relation.
std::vector<std::vector<bool>> closure_by_composition(const Dag& dag) {
    const int d = dag.node_count();
    std::vector reach(static_cast<std::size_t>(d + 1), std::vector<bool>(static_cast<std::size_t>(d + 1), false));
    for (const auto& [j, i] : dag.edges()) reach[j][i] = true;
    for (bool changed = true; changed;) {
        changed = false;
        for (int a = 1; a <= d; ++a) {
            for (int b = 1; b <= d; ++b) {
                if (!reach[a][b]) continue;
                for (int c = 1; c <= d; ++c) {
                    if (reach[b][c] && !reach[a][c]) {
                        reach[a][c] = true;
                        changed = true;
                    }
                }
            }
        }
    }
    return reach;
}

} // namespace

TEST_CASE("topological order on small graphs", "[dag]") {
    REQUIRE(topological_order(chain3()) == std::vector<int>{1, 2, 3});
    REQUIRE(topological_order(Dag(3, {})) == std::vector<int>{1, 2, 3});
    REQUIRE(topological_order(Dag(3, {{3, 1}, {3, 2}})) == std::vector<int>{3, 1, 2});
}

TEST_CASE("construction rejects malformed graphs", "[dag]") {
    REQUIRE_THROWS_AS(Dag(3, {{1, 2}, {2, 3}, {3, 1}}), StructuralError);
    REQUIRE_THROWS_WITH(Dag(3, {{1, 2}, {2, 3}, {3, 1}}), Catch::Matchers::ContainsSubstring("cycle"));
    REQUIRE_THROWS_AS(Dag(3, {{1, 1}}), StructuralError);
    REQUIRE_THROWS_AS(Dag(3, {{1, 2}, {1, 2}}), StructuralError);
    REQUIRE_THROWS_AS(Dag(3, {{1, 4}}), ValidationError);
    REQUIRE_THROWS_AS(Dag(0, {}), ValidationError);
}

TEST_CASE("ancestor and descendant queries", "[dag]") {
    const Dag dia = diamond();
    REQUIRE(ancestors(dia, 4) == std::vector<int>{1, 2, 3});
    REQUIRE(ancestors(chain3(), 1).empty());
    REQUIRE(ancestors(chain3(), 3) == std::vector<int>{1, 2});
    REQUIRE(descendants(dia, 1) == std::vector<int>{2, 3, 4});
    REQUIRE(descendants(dia, 4).empty());
    REQUIRE_THROWS_AS(ancestors(dia, 5), ValidationError);
    REQUIRE_THROWS_AS(descendants(dia, 0), ValidationError);
}

TEST_CASE("ancestors, descendants, and paths agree with the closure oracle", "[dag]") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const Dag dag = random_dag(8, 0.4, seed);
        const auto reach = closure_by_composition(dag);
        for (int i = 1; i <= 8; ++i) {
            const auto an = ancestors(dag, i);
            const auto de = descendants(dag, i);
            for (int j = 1; j <= 8; ++j) {
                if (j == i) continue;
                const bool is_anc = std::binary_search(an.begin(), an.end(), j);
                REQUIRE(is_anc == reach[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]);
                // duality
                const auto de_j = descendants(dag, j);
                REQUIRE(is_anc == std::binary_search(de_j.begin(), de_j.end(), i));
                REQUIRE(std::binary_search(de.begin(), de.end(), j) ==
                        reach[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]);
                // path existence
                REQUIRE(!enumerate_paths(dag, j, i).empty() == is_anc);
            }
        }
    }
}

TEST_CASE("path enumeration", "[dag]") {
    REQUIRE(enumerate_paths(diamond(), 1, 4) ==
            std::vector<std::vector<int>>{{1, 2, 4}, {1, 3, 4}});
    REQUIRE(enumerate_paths(chain3(), 1, 3) == std::vector<std::vector<int>>{{1, 2, 3}});
    REQUIRE(enumerate_paths(diamond(), 2, 3).empty());
    REQUIRE_THROWS_AS(enumerate_paths(diamond(), 2, 2), ValidationError);

    // complete DAG on 12 nodes has 2^10 = 1024 paths from 1 to 12
    const Dag complete = random_dag(12, 1.0, 3);
    const auto order = topological_order(complete);
    REQUIRE(enumerate_paths(complete, order.front(), order.back()).size() == 1024);
    REQUIRE_THROWS_AS(enumerate_paths(complete, order.front(), order.back(), 100), ResourceError);
}

TEST_CASE("paths come out in lexicographic order", "[dag]") {
    const Dag dag = random_dag(7, 0.6, 17);
    const auto order = topological_order(dag);
    const auto paths = enumerate_paths(dag, order.front(), order.back());
    REQUIRE(std::is_sorted(paths.begin(), paths.end()));
}

TEST_CASE("random dag generation", "[dag]") {
    const Dag single = random_dag(1, 0.7, 5);
    REQUIRE(single.node_count() == 1);
    REQUIRE(single.edges().empty());

    REQUIRE(random_dag(5, 1.0, 9).edges().size() == 10);
    REQUIRE(random_dag(5, 0.0, 9).edges().size() == 0);

    const Dag a = random_dag(8, 0.3, 7);
    REQUIRE(a.edges().size() <= 28);
    REQUIRE(topological_order(a).size() == 8); // acyclic by construction
    REQUIRE(a.edges() == random_dag(8, 0.3, 7).edges());
    REQUIRE(a.edges() != random_dag(8, 0.3, 8).edges());

    REQUIRE_THROWS_AS(random_dag(3, 1.5, 1), ValidationError);
    REQUIRE_THROWS_AS(random_dag(0, 0.5, 1), ValidationError);
}

TEST_CASE("every edge respects the topological order", "[dag]") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Dag dag = random_dag(10, 0.5, seed);
        const auto order = topological_order(dag);
        std::vector<int> position(11, 0);
        for (std::size_t k = 0; k < order.size(); ++k) position[static_cast<std::size_t>(order[k])] = static_cast<int>(k);
        for (const auto& [j, i] : dag.edges()) {
            REQUIRE(position[static_cast<std::size_t>(j)] < position[static_cast<std::size_t>(i)]);
        }
    }
}
