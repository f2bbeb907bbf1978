#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tailcausal/air.hpp"
#include "tailcausal/common.hpp"
#include "tailcausal/ctc.hpp"
#include "tailcausal/matrix.hpp"

namespace tailcausal {

enum class Verdict { i_causes_j, j_causes_i, no_link, common_cause, inconsistent };

inline std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::i_causes_j: return "i_causes_j";
        case Verdict::j_causes_i: return "j_causes_i";
        case Verdict::no_link: return "no_link";
        case Verdict::common_cause: return "common_cause";
        case Verdict::inconsistent: return "inconsistent";
    }
    return "?";
}

struct PairVerdict {
    int i = 1;
    int j = 2;
    Verdict verdict = Verdict::inconsistent;
    double gamma_ij = 0.0;
    double gamma_ji = 0.0;
    double delta_used = 0.0;
};

/// Pairwise taxonomy: with "~1" meaning >= 1-delta and "~0" meaning <= delta,
///   (~1, interior) -> i causes j      (interior, ~1) -> j causes i
///   (~0, ~0)       -> no causal link  (interior, interior) -> common cause
/// and every other combination is inconsistent with the model class.
inline PairVerdict classify_pair(double gamma_ij, double gamma_ji, double delta, int i = 1, int j = 2) {
    auto in_range = [](double g) { return g >= 0.0 && g <= 1.0; };
    if (!in_range(gamma_ij) || !in_range(gamma_ji)) {
        throw ValidationError("tail coefficients must lie in [0,1]");
    }
    if (!(delta >= 0.0 && delta < 0.5)) {
        throw ValidationError("delta must lie in [0, 0.5), got " + std::to_string(delta));
    }
    enum class Level { zero, interior, one };
    auto level = [&](double g) {
        if (g >= 1.0 - delta) return Level::one;
        if (g <= delta) return Level::zero;
        return Level::interior;
    };
    const Level a = level(gamma_ij);
    const Level b = level(gamma_ji);
    Verdict verdict = Verdict::inconsistent;
    if (a == Level::one && b == Level::interior) verdict = Verdict::i_causes_j;
    else if (a == Level::interior && b == Level::one) verdict = Verdict::j_causes_i;
    else if (a == Level::zero && b == Level::zero) verdict = Verdict::no_link;
    else if (a == Level::interior && b == Level::interior) verdict = Verdict::common_cause;
    return PairVerdict{i, j, verdict, gamma_ij, gamma_ji, delta};
}

struct AncestorSets {
    std::vector<std::vector<int>> sets; // sets[k] = an(k+1), sorted ascending
    std::vector<int> sizes;
    std::vector<std::string> diagnostics;

    const std::vector<int>& of(int node) const { return sets[static_cast<std::size_t>(node - 1)]; }
};

/// Reads ancestor sets off the saturated entries: an(j) = { i != j :
/// gamma[i][j] >= 1-delta }. Mutually saturated pairs (a 2-cycle no DAG can
/// produce) are excluded from both sets and reported as diagnostics.
inline AncestorSets ancestor_sets(const CtcMatrix& gamma, double delta) {
    if (!(delta >= 0.0 && delta < 0.5)) {
        throw ValidationError("delta must lie in [0, 0.5), got " + std::to_string(delta));
    }
    const int d = gamma.gamma.dim();
    AncestorSets out;
    out.sets.assign(static_cast<std::size_t>(d), {});
    out.sizes.assign(static_cast<std::size_t>(d), 0);
    const double threshold = 1.0 - delta;
    for (int j = 1; j <= d; ++j) {
        for (int i = 1; i <= d; ++i) {
            if (i == j || gamma.gamma.at(i, j) < threshold) continue;
            if (gamma.gamma.at(j, i) >= threshold) {
                if (i < j) {
                    out.diagnostics.push_back("2-cycle: gamma(" + std::to_string(i) + "," + std::to_string(j) +
                                              ") and gamma(" + std::to_string(j) + "," + std::to_string(i) +
                                              ") both saturate; pair excluded from ancestor sets");
                }
                continue;
            }
            out.sets[static_cast<std::size_t>(j - 1)].push_back(i);
        }
        out.sizes[static_cast<std::size_t>(j - 1)] = static_cast<int>(out.sets[static_cast<std::size_t>(j - 1)].size());
    }
    return out;
}

/// Recursive weight recovery (affine in W): nodes are processed by ascending
/// ancestor-set size; for each j,
///   W[j][i] = 0                                    for i outside De(j),
///   W[j][i] = gamma[i][j] - sum_{k in an(j)} W[k][i]  for i in De(j), i != j,
///   W[j][j] = 1 - sum_{k in an(j)} W[k][j].
/// Tiny negatives (|.| <= 10*delta) clamp to 0 with a diagnostic; anything
/// more negative means no weight matrix can produce this gamma.
inline WeightMatrix recover_weights(const CtcMatrix& gamma, double delta,
                                    std::vector<std::string>* diagnostics = nullptr) {
    const int d = gamma.gamma.dim();
    const AncestorSets anc = ancestor_sets(gamma, delta);
    auto note = [&](const std::string& msg) {
        if (diagnostics) diagnostics->push_back(msg);
    };
    for (const auto& msg : anc.diagnostics) note(msg);

    // de(j) mirrors the cleaned ancestor sets: i in de(j) iff j in an(i).
    std::vector<std::vector<char>> is_descendant(static_cast<std::size_t>(d) + 1,
                                                 std::vector<char>(static_cast<std::size_t>(d) + 1, 0));
    for (int i = 1; i <= d; ++i) {
        for (int j : anc.of(i)) is_descendant[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] = 1;
    }

    std::vector<int> order(static_cast<std::size_t>(d));
    for (int j = 1; j <= d; ++j) order[static_cast<std::size_t>(j - 1)] = j;
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return anc.sizes[static_cast<std::size_t>(a - 1)] <
                                                anc.sizes[static_cast<std::size_t>(b - 1)]; });

    // The recursion is valid when every ancestor precedes its descendants in
    // this order, i.e. |an(k)| < |an(j)| for k in an(j). True ancestral
    // relations always satisfy this; noisy ones may not, which makes the
    // affected entries unreliable (flagged, not fatal).
    for (int j = 1; j <= d; ++j) {
        for (int k : anc.of(j)) {
            if (anc.sizes[static_cast<std::size_t>(k - 1)] >= anc.sizes[static_cast<std::size_t>(j - 1)]) {
                note("ancestor relation is not consistent at nodes (" + std::to_string(k) + "," +
                     std::to_string(j) + "); recovered weights involving them are unreliable");
            }
        }
    }

    WeightMatrix wm{SquareMatrix(d)};
    auto settle = [&](int j, int i, double value) {
        if (value < 0.0) {
            if (value < -10.0 * delta - 1e-15) {
                throw InfeasibleError("recovered weight (" + std::to_string(j) + "," + std::to_string(i) + ") = " +
                                      std::to_string(value) + " is below -10*delta; gamma matrix is infeasible");
            }
            note("clamped tiny negative weight (" + std::to_string(j) + "," + std::to_string(i) + ") = " +
                 std::to_string(value) + " to 0");
            value = 0.0;
        }
        wm.w.at(j, i) = value;
    };

    for (int j : order) {
        const auto& an_j = anc.of(j);
        for (int i = 1; i <= d; ++i) {
            if (i == j) continue;
            if (!is_descendant[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)]) {
                wm.w.at(j, i) = 0.0;
                continue;
            }
            double value = gamma.gamma.at(i, j);
            for (int k : an_j) value -= wm.w.at(k, i);
            settle(j, i, value);
        }
        // Diagonal as the explicit column complement; coincides with running
        // the recursion at i = j when the stored diagonal is 1.
        double diag = 1.0;
        for (int k : an_j) diag -= wm.w.at(k, j);
        const double stored = gamma.gamma.at(j, j);
        if (stored != 1.0) {
            note("input gamma diagonal at node " + std::to_string(j) + " is " + std::to_string(stored) +
                 ", expected 1; using the complement value");
        }
        settle(j, j, diag);
    }
    return wm;
}

/// Layer index: 0 for nodes with no ancestors, else one plus the maximum
/// layer among ancestors. Throws if the relation is cyclic.
inline std::vector<int> generations(const std::vector<std::vector<int>>& ancestor_sets) {
    const int d = static_cast<int>(ancestor_sets.size());
    std::vector<int> layer(static_cast<std::size_t>(d), -1);
    std::vector<char> visiting(static_cast<std::size_t>(d), 0);
    std::function<int(int)> resolve = [&](int node) {
        auto& cached = layer[static_cast<std::size_t>(node - 1)];
        if (cached >= 0) return cached;
        if (visiting[static_cast<std::size_t>(node - 1)]) {
            throw InfeasibleError("ancestor relation is cyclic at node " + std::to_string(node));
        }
        visiting[static_cast<std::size_t>(node - 1)] = 1;
        int value = 0;
        for (int h : ancestor_sets[static_cast<std::size_t>(node - 1)]) {
            if (h < 1 || h > d) throw ValidationError("ancestor id " + std::to_string(h) + " out of range");
            value = std::max(value, resolve(h) + 1);
        }
        visiting[static_cast<std::size_t>(node - 1)] = 0;
        cached = value;
        return cached;
    };
    for (int v = 1; v <= d; ++v) resolve(v);
    return layer;
}

enum class OrderMode { exact, ease };

inline std::string to_string(OrderMode m) { return m == OrderMode::exact ? "exact" : "ease"; }

inline OrderMode order_mode_from_string(const std::string& s) {
    if (s == "exact") return OrderMode::exact;
    if (s == "ease") return OrderMode::ease;
    throw ValidationError("unknown order mode '" + s + "'");
}

/// Causal order of the nodes.
///   exact  topological sort of the recovered ancestor relation (population
///          inputs only; throws if the relation is cyclic);
///   ease   repeatedly append the most source-like remaining node,
///          argmax_i min_{j != i} (gamma[i][j] - gamma[j][i]).
/// Ties break by ascending node id in both modes.
inline std::vector<int> causal_order(const CtcMatrix& gamma, double delta, OrderMode mode) {
    const int d = gamma.gamma.dim();
    if (mode == OrderMode::exact) {
        const AncestorSets anc = ancestor_sets(gamma, delta);
        std::vector<std::vector<int>> children(static_cast<std::size_t>(d) + 1);
        std::vector<int> indegree(static_cast<std::size_t>(d) + 1, 0);
        for (int i = 1; i <= d; ++i) {
            indegree[static_cast<std::size_t>(i)] = anc.sizes[static_cast<std::size_t>(i - 1)];
            for (int h : anc.of(i)) children[static_cast<std::size_t>(h)].push_back(i);
        }
        std::vector<int> order = dag_detail::kahn_order(d, children, std::move(indegree));
        if (order.size() != static_cast<std::size_t>(d)) {
            throw InfeasibleError("recovered ancestor relation is cyclic; exact ordering impossible");
        }
        return order;
    }

    std::vector<int> remaining(static_cast<std::size_t>(d));
    for (int v = 1; v <= d; ++v) remaining[static_cast<std::size_t>(v - 1)] = v;
    std::vector<int> order;
    order.reserve(static_cast<std::size_t>(d));
    while (remaining.size() > 1) {
        int best = remaining.front();
        double best_score = -std::numeric_limits<double>::infinity();
        for (int i : remaining) {
            double score = std::numeric_limits<double>::infinity();
            for (int j : remaining) {
                if (j == i) continue;
                score = std::min(score, gamma.gamma.at(i, j) - gamma.gamma.at(j, i));
            }
            if (score > best_score) {
                best_score = score;
                best = i;
            }
        }
        order.push_back(best);
        remaining.erase(std::find(remaining.begin(), remaining.end(), best));
    }
    order.push_back(remaining.front());
    return order;
}

/// Everything the pipeline reports for one CTC matrix.
struct DiscoveryReport {
    int d = 0;
    double delta = 0.0;
    OrderMode order_mode = OrderMode::ease;
    std::vector<PairVerdict> verdicts; // all unordered pairs, i < j
    AncestorSets ancestors;
    std::vector<int> generation;                        // empty if the relation is cyclic
    std::vector<int> order;                             // per order_mode
    std::optional<std::vector<int>> order_exact;        // nullopt if cyclic
    WeightMatrix recovered_weights;
    std::optional<StandardizedAir> recovered_standardized_air; // requires alpha
    std::optional<double> alpha;
    std::vector<std::string> diagnostics;
};

/// Full discovery pass over a CTC matrix: pairwise verdicts,
/// ancestor sets, generations, causal orders, and the recovered weight
/// matrix (plus the standardized AIR when alpha is supplied; the raw AIR is
/// not recoverable because standardization discards column scale).
inline DiscoveryReport discover(const CtcMatrix& gamma, double delta, OrderMode mode,
                                std::optional<double> alpha = std::nullopt) {
    DiscoveryReport report;
    report.d = gamma.gamma.dim();
    report.delta = delta;
    report.order_mode = mode;
    report.alpha = alpha;

    for (int i = 1; i <= report.d; ++i) {
        for (int j = i + 1; j <= report.d; ++j) {
            report.verdicts.push_back(classify_pair(gamma.gamma.at(i, j), gamma.gamma.at(j, i), delta, i, j));
        }
    }

    report.ancestors = ancestor_sets(gamma, delta);
    report.recovered_weights = recover_weights(gamma, delta, &report.diagnostics);

    try {
        report.generation = generations(report.ancestors.sets);
    } catch (const InfeasibleError& e) {
        report.diagnostics.push_back(std::string("generations unavailable: ") + e.what());
    }
    try {
        report.order_exact = causal_order(gamma, delta, OrderMode::exact);
    } catch (const InfeasibleError& e) {
        report.diagnostics.push_back(std::string("exact order unavailable: ") + e.what());
    }
    if (mode == OrderMode::exact) {
        if (!report.order_exact) {
            throw InfeasibleError("recovered ancestor relation is cyclic; exact ordering impossible");
        }
        report.order = *report.order_exact;
    } else {
        report.order = causal_order(gamma, delta, OrderMode::ease);
    }

    if (alpha) {
        if (!(*alpha > 0.0)) throw ValidationError("alpha must be > 0");
        StandardizedAir st{SquareMatrix(report.d), *alpha};
        for (int h = 1; h <= report.d; ++h) {
            for (int i = 1; i <= report.d; ++i) {
                st.f.at(h, i) = std::pow(report.recovered_weights.w.at(h, i), 1.0 / *alpha);
            }
        }
        report.recovered_standardized_air = std::move(st);
    }
    return report;
}

} // namespace tailcausal
