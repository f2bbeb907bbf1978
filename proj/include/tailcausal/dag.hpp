#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "tailcausal/common.hpp"
#include "tailcausal/rng.hpp"

namespace tailcausal {

namespace dag_detail {

/// Kahn's algorithm with ties broken by ascending node id. Returns fewer
/// than d nodes iff the graph has a cycle.
inline std::vector<int> kahn_order(int d, const std::vector<std::vector<int>>& children,
                                   std::vector<int> indegree) {
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    for (int v = 1; v <= d; ++v) {
        if (indegree[static_cast<std::size_t>(v)] == 0) ready.push(v);
    }
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(d));
    while (!ready.empty()) {
        const int v = ready.top();
        ready.pop();
        order.push_back(v);
        for (int c : children[static_cast<std::size_t>(v)]) {
            if (--indegree[static_cast<std::size_t>(c)] == 0) ready.push(c);
        }
    }
    return order;
}

/// Extracts one directed cycle for error messages; only called when one exists.
inline std::string find_cycle(int d, const std::vector<std::vector<int>>& children) {
    std::vector<int> color(static_cast<std::size_t>(d) + 1, 0); // 0 unseen, 1 in stack, 2 done
    std::vector<int> parent(static_cast<std::size_t>(d) + 1, 0);
    int cycle_tail = 0, cycle_head = 0;

    std::function<bool(int)> dfs = [&](int v) {
        color[static_cast<std::size_t>(v)] = 1;
        for (int c : children[static_cast<std::size_t>(v)]) {
            if (color[static_cast<std::size_t>(c)] == 1) {
                cycle_tail = v;
                cycle_head = c;
                return true;
            }
            if (color[static_cast<std::size_t>(c)] == 0) {
                parent[static_cast<std::size_t>(c)] = v;
                if (dfs(c)) return true;
            }
        }
        color[static_cast<std::size_t>(v)] = 2;
        return false;
    };

    for (int v = 1; v <= d; ++v) {
        if (color[static_cast<std::size_t>(v)] == 0 && dfs(v)) break;
    }
    std::vector<int> nodes{cycle_head};
    for (int v = cycle_tail; v != cycle_head; v = parent[static_cast<std::size_t>(v)]) nodes.push_back(v);
    std::reverse(nodes.begin() + 1, nodes.end());
    std::string out;
    for (int v : nodes) out += std::to_string(v) + " -> ";
    out += std::to_string(cycle_head);
    return out;
}

} // namespace dag_detail

/// Immutable directed acyclic graph over nodes {1, ..., d}. An edge (j, i)
/// means j -> i. Construction rejects self-loops, duplicate edges, ids out
/// of range, and cycles; all queries afterwards are read-only and safe to
/// run concurrently.
class Dag {
public:
    Dag(int node_count, std::vector<std::pair<int, int>> edge_list)
        : d_(node_count), edges_(std::move(edge_list)) {
        if (d_ < 1) throw ValidationError("node count must be >= 1, got " + std::to_string(d_));
        parents_.assign(static_cast<std::size_t>(d_) + 1, {});
        children_.assign(static_cast<std::size_t>(d_) + 1, {});
        std::set<std::pair<int, int>> seen;
        for (const auto& [j, i] : edges_) {
            if (j < 1 || j > d_ || i < 1 || i > d_) {
                throw ValidationError("edge (" + std::to_string(j) + "," + std::to_string(i) +
                                      ") out of range for d=" + std::to_string(d_));
            }
            if (j == i) throw StructuralError("self-loop at node " + std::to_string(j));
            if (!seen.insert({j, i}).second) {
                throw StructuralError("duplicate edge (" + std::to_string(j) + "," + std::to_string(i) + ")");
            }
            children_[static_cast<std::size_t>(j)].push_back(i);
            parents_[static_cast<std::size_t>(i)].push_back(j);
        }
        for (int v = 1; v <= d_; ++v) {
            std::sort(children_[static_cast<std::size_t>(v)].begin(), children_[static_cast<std::size_t>(v)].end());
            std::sort(parents_[static_cast<std::size_t>(v)].begin(), parents_[static_cast<std::size_t>(v)].end());
        }
        std::sort(edges_.begin(), edges_.end());

        std::vector<int> indegree(static_cast<std::size_t>(d_) + 1, 0);
        for (int v = 1; v <= d_; ++v) {
            indegree[static_cast<std::size_t>(v)] = static_cast<int>(parents_[static_cast<std::size_t>(v)].size());
        }
        if (dag_detail::kahn_order(d_, children_, indegree).size() != static_cast<std::size_t>(d_)) {
            throw StructuralError("graph contains a cycle: " + dag_detail::find_cycle(d_, children_));
        }
    }

    int node_count() const { return d_; }

    /// Edges sorted lexicographically.
    const std::vector<std::pair<int, int>>& edges() const { return edges_; }

    const std::vector<int>& parents(int i) const {
        check_node(i);
        return parents_[static_cast<std::size_t>(i)];
    }

    const std::vector<int>& children(int j) const {
        check_node(j);
        return children_[static_cast<std::size_t>(j)];
    }

    void check_node(int v) const {
        if (v < 1 || v > d_) {
            throw ValidationError("node id " + std::to_string(v) + " out of range [1," + std::to_string(d_) + "]");
        }
    }

private:
    int d_;
    std::vector<std::pair<int, int>> edges_;
    std::vector<std::vector<int>> parents_;
    std::vector<std::vector<int>> children_;
};

/// Deterministic topological order: every edge (j,i) has j before i, ties
/// broken by ascending node id.
inline std::vector<int> topological_order(const Dag& dag) {
    const int d = dag.node_count();
    std::vector<std::vector<int>> children(static_cast<std::size_t>(d) + 1);
    std::vector<int> indegree(static_cast<std::size_t>(d) + 1, 0);
    for (int v = 1; v <= d; ++v) {
        children[static_cast<std::size_t>(v)] = dag.children(v);
        indegree[static_cast<std::size_t>(v)] = static_cast<int>(dag.parents(v).size());
    }
    std::vector<int> order = dag_detail::kahn_order(d, children, std::move(indegree));
    if (order.size() != static_cast<std::size_t>(d)) {
        throw StructuralError("graph contains a cycle: " + dag_detail::find_cycle(d, children));
    }
    return order;
}

namespace dag_detail {

/// Reachability sweep along parents (towards = true) or children.
inline std::vector<int> reachable(const Dag& dag, int start, bool towards_parents) {
    dag.check_node(start);
    std::vector<char> seen(static_cast<std::size_t>(dag.node_count()) + 1, 0);
    std::vector<int> stack{start};
    seen[static_cast<std::size_t>(start)] = 1;
    std::vector<int> out;
    while (!stack.empty()) {
        const int v = stack.back();
        stack.pop_back();
        const auto& next = towards_parents ? dag.parents(v) : dag.children(v);
        for (int u : next) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = 1;
                out.push_back(u);
                stack.push_back(u);
            }
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace dag_detail

/// an(i): all j != i with a directed path j ~> i, sorted ascending.
inline std::vector<int> ancestors(const Dag& dag, int i) { return dag_detail::reachable(dag, i, true); }

/// de(j): all i != j with a directed path j ~> i, sorted ascending.
inline std::vector<int> descendants(const Dag& dag, int j) { return dag_detail::reachable(dag, j, false); }

/// All directed paths from h to i as node sequences, in lexicographic order.
/// Empty when h is not an ancestor of i. Throws ResourceError once the path
/// count exceeds max_paths (path counts can be exponential in d).
inline std::vector<std::vector<int>> enumerate_paths(const Dag& dag, int h, int i,
                                                     std::uint64_t max_paths = 1'000'000) {
    dag.check_node(h);
    dag.check_node(i);
    if (h == i) throw ValidationError("enumerate_paths requires distinct endpoints, got " + std::to_string(h));

    // Restrict the search to nodes that can still reach i.
    std::vector<char> feeds_i(static_cast<std::size_t>(dag.node_count()) + 1, 0);
    feeds_i[static_cast<std::size_t>(i)] = 1;
    for (int a : ancestors(dag, i)) feeds_i[static_cast<std::size_t>(a)] = 1;

    std::vector<std::vector<int>> paths;
    std::vector<int> current{h};
    std::function<void(int)> dfs = [&](int v) {
        if (v == i) {
            if (paths.size() >= max_paths) {
                throw ResourceError("path count from " + std::to_string(h) + " to " + std::to_string(i) +
                                    " exceeds cap " + std::to_string(max_paths));
            }
            paths.push_back(current);
            return;
        }
        for (int c : dag.children(v)) {
            if (!feeds_i[static_cast<std::size_t>(c)]) continue;
            current.push_back(c);
            dfs(c);
            current.pop_back();
        }
    };
    if (feeds_i[static_cast<std::size_t>(h)]) dfs(h);
    return paths;
}

/// Samples a DAG: draws a uniform random permutation of {1,...,d} as a latent
/// order and includes each forward edge independently with probability
/// edge_prob. Deterministic given seed.
inline Dag random_dag(int d, double edge_prob, std::uint64_t seed) {
    if (d < 1) throw ValidationError("node count must be >= 1, got " + std::to_string(d));
    if (!(edge_prob >= 0.0 && edge_prob <= 1.0)) {
        throw ValidationError("edge probability must be in [0,1], got " + std::to_string(edge_prob));
    }
    SplitMix64 rng(seed);
    std::vector<int> perm(static_cast<std::size_t>(d));
    for (int v = 1; v <= d; ++v) perm[static_cast<std::size_t>(v - 1)] = v;
    for (std::size_t k = perm.size() - 1; k > 0; --k) {
        const std::size_t swap_with = static_cast<std::size_t>(rng.next_below(k + 1));
        std::swap(perm[k], perm[swap_with]);
    }
    std::vector<std::pair<int, int>> edges;
    for (std::size_t a = 0; a + 1 < perm.size(); ++a) {
        for (std::size_t b = a + 1; b < perm.size(); ++b) {
            if (rng.next_unit() < edge_prob) edges.emplace_back(perm[a], perm[b]);
        }
    }
    return Dag(d, std::move(edges));
}

} // namespace tailcausal
