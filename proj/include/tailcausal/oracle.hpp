#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tailcausal/air.hpp"
#include "tailcausal/common.hpp"
#include "tailcausal/ctc.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/discovery.hpp"
#include "tailcausal/model.hpp"

// Independent brute-force and Monte Carlo checks. These deliberately avoid
// the analytic code paths they validate (beyond shared simulation), and ship
// behind a CLI subcommand so every derived number stays reproducible.

namespace tailcausal {

inline constexpr std::size_t kMinExceedances = 200;

struct TailRatioResult {
    double ratio = 0.0;        // empirical P(X_node > x) / exact P(eps > x)
    double target = 0.0;       // sum over An(node) of F^alpha
    double threshold = 0.0;    // x, the noise quantile at the requested level
    std::size_t exceedances = 0;
    std::size_t n = 0;
};

/// Monte Carlo check of the tail-ratio limit P(X_i > x) / P(eps > x) ->
/// sum_{h in An(i)} F[h][i]^alpha at a high noise quantile.
inline TailRatioResult mc_tail_ratio(const HscmModel& model, int node, double quantile, std::size_t n,
                                     std::uint64_t seed) {
    model.validate();
    model.dag.check_node(node);
    if (!(quantile > 0.9 && quantile < 1.0)) {
        throw ValidationError("quantile must lie in (0.9, 1), got " + std::to_string(quantile));
    }

    TailRatioResult result;
    result.n = n;
    result.threshold = model.noise.quantile(quantile);

    const SampleMatrix samples = simulate(model, n, seed);
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (samples.at(r, node) > result.threshold) ++count;
    }
    result.exceedances = count;
    if (count < kMinExceedances) {
        throw EstimationError("too few exceedances for a stable tail ratio: achieved " + std::to_string(count) +
                              ", need >= " + std::to_string(kMinExceedances) +
                              " (raise n or lower the quantile)");
    }
    const double noise_tail = model.noise.tail_prob(result.threshold);
    result.ratio = (static_cast<double>(count) / static_cast<double>(n)) / noise_tail;

    const AirMatrix air = air_by_impulse(model);
    double target = 0.0;
    target += 1.0; // F[node][node] = 1
    for (int h : ancestors(model.dag, node)) target += std::pow(air.f.at(h, node), model.noise.alpha);
    result.target = target;
    return result;
}

/// Direct conditional-mean estimate of the standardized CTC: the average of
/// 2 G^_i(X_i) - 1 over rows where X_j exceeds its empirical quantile.
/// Shares nothing with empirical_ctc beyond simulation: the threshold is an
/// order statistic rather than a top-k set, and G^ is evaluated by binary
/// search in a sorted copy rather than a precomputed rank table.
inline double brute_force_ctc(const HscmModel& model, int j, int i, std::size_t n, double quantile,
                              std::uint64_t seed) {
    model.validate();
    model.dag.check_node(j);
    model.dag.check_node(i);
    if (i == j) throw ValidationError("brute_force_ctc requires distinct nodes");
    if (!(quantile > 0.9 && quantile < 1.0)) {
        throw ValidationError("quantile must lie in (0.9, 1), got " + std::to_string(quantile));
    }

    const SampleMatrix samples = simulate(model, n, seed);
    const std::vector<double> col_j = samples.column(j);
    const std::vector<double> col_i = samples.column(i);

    std::vector<double> sorted_j = col_j;
    std::sort(sorted_j.begin(), sorted_j.end());
    // nearest-rank quantile: the ceil(q*n)-th smallest value
    const double rank = std::ceil(quantile * static_cast<double>(n));
    const std::size_t pos = std::min(n - 2, static_cast<std::size_t>(std::max(1.0, rank)) - 1);
    const double threshold = sorted_j[pos];

    std::vector<double> sorted_i = col_i;
    std::sort(sorted_i.begin(), sorted_i.end());
    auto ecdf = [&](double v) {
        // average rank of v in column i, divided by n+1
        const auto lo = std::lower_bound(sorted_i.begin(), sorted_i.end(), v);
        const auto hi = std::upper_bound(lo, sorted_i.end(), v);
        const double below = static_cast<double>(lo - sorted_i.begin());
        const double ties = static_cast<double>(hi - lo);
        const double mean_rank = below + 0.5 * (ties + 1.0);
        return mean_rank / (static_cast<double>(n) + 1.0);
    };

    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r) {
        if (col_j[r] > threshold) {
            sum += 2.0 * ecdf(col_i[r]) - 1.0;
            ++count;
        }
    }
    if (count < kMinExceedances) {
        throw EstimationError("too few exceedances for a stable estimate: achieved " + std::to_string(count) +
                              ", need >= " + std::to_string(kMinExceedances));
    }
    return sum / static_cast<double>(count);
}

struct RoundTripWorstCase {
    int d = 0;
    int graph_index = 0;
    std::string family;
    double alpha = 0.0;
    double error = 0.0;
};

struct RoundTripSummary {
    int d_max = 0;
    int graphs_per_size = 0;
    std::size_t total_graphs = 0;
    double max_error = 0.0;
    bool support_exact = true; // recovered support == ancestral closure on every graph
    std::map<std::string, double> per_family_max_error;
    RoundTripWorstCase worst;
};

/// Full-population round trip on random weighted DAGs: model -> AIR ->
/// standardize -> population CTC -> recover, recording the worst recovery
/// error per family and overall.
inline RoundTripSummary exhaustive_roundtrip(int d_max, int graphs_per_size, std::uint64_t seed) {
    if (d_max < 1 || d_max > 10) throw ValidationError("d_max must lie in [1, 10]");
    if (graphs_per_size < 1) throw ValidationError("graphs_per_size must be >= 1");

    const double alphas[] = {0.8, 1.0, 1.5, 2.7};
    const double edge_probs[] = {0.2, 0.5, 0.8};
    const double lp_exponents[] = {0.5, 2.0, 3.0};
    const char* family_names[] = {"linear", "max_linear", "lp", "mixed"};

    RoundTripSummary summary;
    summary.d_max = d_max;
    summary.graphs_per_size = graphs_per_size;
    for (const char* name : family_names) summary.per_family_max_error[name] = 0.0;

    SplitMix64 rng(seed);
    for (int d = 1; d <= d_max; ++d) {
        for (int g = 0; g < graphs_per_size; ++g) {
            const int family_pick = static_cast<int>(rng.next_below(4));
            const double alpha = alphas[rng.next_below(4)];
            const Dag dag = random_dag(d, edge_probs[rng.next_below(3)], rng.next_u64());

            HscmModel model{dag, {}, NoiseSpec{NoiseFamily::pareto, alpha, 1.0}};
            for (int node = 1; node <= d; ++node) {
                StructuralFunctionSpec spec;
                const int pick = family_pick == 3 ? static_cast<int>(rng.next_below(3)) : family_pick;
                spec.family = static_cast<StructuralFamily>(pick);
                if (spec.family == StructuralFamily::lp) spec.p = lp_exponents[rng.next_below(3)];
                for (int parent : dag.parents(node)) {
                    spec.parent_coefficients[parent] = rng.uniform(0.3, 1.8);
                }
                model.node_functions.push_back(std::move(spec));
            }

            const auto [st, weights] = standardize(air_by_impulse(model), alpha);
            const CtcMatrix gamma = population_ctc(weights, dag);
            const WeightMatrix recovered = recover_weights(gamma, 1e-9);

            double err = 0.0;
            bool support_ok = true;
            for (int h = 1; h <= d; ++h) {
                for (int i = 1; i <= d; ++i) {
                    err = std::max(err, std::abs(recovered.w.at(h, i) - weights.w.at(h, i)));
                    if ((recovered.w.at(h, i) != 0.0) != (weights.w.at(h, i) != 0.0)) support_ok = false;
                }
            }
            summary.support_exact = summary.support_exact && support_ok;
            summary.total_graphs += 1;
            auto& family_err = summary.per_family_max_error[family_names[family_pick]];
            family_err = std::max(family_err, err);
            if (err > summary.max_error) {
                summary.max_error = err;
                summary.worst = {d, g, family_names[family_pick], alpha, err};
            }
        }
    }
    return summary;
}

} // namespace tailcausal
