#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailcausal/air.hpp"
#include "tailcausal/common.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/matrix.hpp"
#include "tailcausal/model.hpp"

namespace tailcausal {

enum class CtcKind { population, estimated };

inline std::string to_string(CtcKind k) { return k == CtcKind::population ? "population" : "estimated"; }

inline CtcKind ctc_kind_from_string(const std::string& s) {
    if (s == "population") return CtcKind::population;
    if (s == "estimated") return CtcKind::estimated;
    throw ValidationError("unknown CTC kind '" + s + "'");
}

/// Standardized causal tail coefficient matrix. Row j = conditioning
/// variable, column i = evaluated variable. Diagonal
/// entries are stored as 1 by convention and never consumed by decisions.
struct CtcMatrix {
    SquareMatrix gamma;
    CtcKind kind = CtcKind::population;
    std::optional<std::size_t> k_used; // exceedance count, estimated only

    /// The unstandardized coefficient of the prior linear-SCM work,
    /// Gamma = (Gamma* + 1) / 2, with range [1/2, 1] on the support.
    double unstandardized(int j, int i) const { return 0.5 * (gamma.at(j, i) + 1.0); }
};

/// Exact population CTC: Gamma*[j][i] = sum over h in An(i) n An(j) of
/// W[h][j]. Saturates to 1 whenever j is an ancestor of i and vanishes
/// exactly when the ancestries are disjoint.
inline CtcMatrix population_ctc(const WeightMatrix& weights, const Dag& dag) {
    const int d = weights.w.dim();
    if (d != dag.node_count()) {
        throw ValidationError("weight matrix dimension " + std::to_string(d) + " does not match graph d=" +
                              std::to_string(dag.node_count()));
    }
    // The weight support must be exactly the reflexive ancestral closure.
    std::vector<std::vector<char>> in_an(static_cast<std::size_t>(d) + 1,
                                         std::vector<char>(static_cast<std::size_t>(d) + 1, 0));
    for (int i = 1; i <= d; ++i) {
        in_an[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = 1;
        for (int h : ancestors(dag, i)) in_an[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] = 1;
    }
    for (int h = 1; h <= d; ++h) {
        for (int i = 1; i <= d; ++i) {
            const bool ancestral = in_an[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] != 0;
            const bool positive = weights.w.at(h, i) > 0.0;
            if (ancestral != positive) {
                throw ValidationError("weight support mismatch at (" + std::to_string(h) + "," + std::to_string(i) +
                                      "): entry " + std::to_string(weights.w.at(h, i)) +
                                      (ancestral ? " should be positive" : " should be zero"));
            }
        }
    }

    CtcMatrix out{SquareMatrix(d), CtcKind::population, std::nullopt};
    for (int j = 1; j <= d; ++j) {
        for (int i = 1; i <= d; ++i) {
            if (i == j) {
                out.gamma.at(j, j) = 1.0;
                continue;
            }
            double sum = 0.0;
            for (int h = 1; h <= d; ++h) {
                if (in_an[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] &&
                    in_an[static_cast<std::size_t>(j)][static_cast<std::size_t>(h)]) {
                    sum += weights.w.at(h, j);
                }
            }
            out.gamma.at(j, i) = sum;
        }
    }
    return out;
}

namespace ctc_detail {

/// Ranks 1..n ascending with ties averaged; deterministic.
inline std::vector<double> average_ranks(std::span<const double> column) {
    const std::size_t n = column.size();
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return column[a] < column[b] || (column[a] == column[b] && a < b);
    });
    std::vector<double> ranks(n);
    std::size_t pos = 0;
    while (pos < n) {
        std::size_t end = pos + 1;
        while (end < n && column[idx[end]] == column[idx[pos]]) ++end;
        const double mean_rank = 0.5 * static_cast<double>(pos + 1 + end); // average of pos+1 .. end
        for (std::size_t k = pos; k < end; ++k) ranks[idx[k]] = mean_rank;
        pos = end;
    }
    return ranks;
}

/// Row indices of the k largest values, ties broken by ascending row index.
inline std::vector<std::size_t> top_k_rows(std::span<const double> column, std::size_t k) {
    std::vector<std::size_t> idx(column.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(),
                      [&](std::size_t a, std::size_t b) {
                          return column[a] > column[b] || (column[a] == column[b] && a < b);
                      });
    idx.resize(k);
    return idx;
}

} // namespace ctc_detail

/// Rank-based estimator of the standardized CTC:
///   Gamma^[j][i] = (1/k) sum over the k largest rows of column j of
///                  (2 G^_i(X_i) - 1),  G^_i = average rank / (n+1),
/// clamped to [0,1]. Deterministic (ties by average rank / row index).
inline CtcMatrix empirical_ctc(const SampleMatrix& samples, std::size_t k) {
    const std::size_t n = samples.n;
    const int d = samples.d;
    if (n < 2 || d < 1) throw ValidationError("sample matrix must have n >= 2 rows and d >= 1 columns");
    if (k < 1 || k >= n) {
        throw ValidationError("exceedance count k=" + std::to_string(k) + " must satisfy 1 <= k < n=" +
                              std::to_string(n));
    }
    for (double v : samples.values) {
        if (!std::isfinite(v)) throw ValidationError("sample matrix contains a non-finite entry");
    }

    std::vector<std::vector<double>> columns(static_cast<std::size_t>(d));
    std::vector<std::vector<double>> ranks(static_cast<std::size_t>(d));
    for (int c = 1; c <= d; ++c) {
        auto col = samples.column(c);
        const auto [lo, hi] = std::minmax_element(col.begin(), col.end());
        if (*lo == *hi) {
            throw EstimationError("column " + std::to_string(c) + " is constant; ranks are degenerate");
        }
        ranks[static_cast<std::size_t>(c - 1)] = ctc_detail::average_ranks(col);
        columns[static_cast<std::size_t>(c - 1)] = std::move(col);
    }

    CtcMatrix out{SquareMatrix(d), CtcKind::estimated, k};
    const double denom = static_cast<double>(n) + 1.0;
    for (int j = 1; j <= d; ++j) {
        const auto top = ctc_detail::top_k_rows(columns[static_cast<std::size_t>(j - 1)], k);
        for (int i = 1; i <= d; ++i) {
            if (i == j) {
                out.gamma.at(j, j) = 1.0;
                continue;
            }
            double mean_g = 0.0;
            for (std::size_t row : top) mean_g += ranks[static_cast<std::size_t>(i - 1)][row];
            mean_g /= denom * static_cast<double>(k);
            out.gamma.at(j, i) = std::clamp(2.0 * mean_g - 1.0, 0.0, 1.0);
        }
    }
    return out;
}

enum class KRule { power, fixed };

inline KRule k_rule_from_string(const std::string& s) {
    if (s == "power") return KRule::power;
    if (s == "fixed") return KRule::fixed;
    throw ValidationError("unknown k rule '" + s + "'");
}

/// Exceedance-count rule: power gives floor(n^param), fixed gives
/// floor(param); both clamped to [10, n/4].
inline std::size_t choose_k(std::size_t n, KRule rule, double param) {
    if (n < 10) throw ValidationError("choose_k requires n >= 10, got " + std::to_string(n));
    double raw = 0.0;
    switch (rule) {
        case KRule::power:
            if (!(param > 0.0 && param < 1.0)) {
                throw ValidationError("power rule exponent must be in (0,1), got " + std::to_string(param));
            }
            // Nudge before flooring so exact powers are not floored down by
            // representation error (e.g. (10^5)^0.4 = 100).
            raw = std::floor(std::pow(static_cast<double>(n), param) + 1e-9);
            break;
        case KRule::fixed:
            if (!(param >= 1.0)) throw ValidationError("fixed rule requires param >= 1");
            raw = std::floor(param);
            break;
    }
    const std::size_t hi = std::max<std::size_t>(1, n / 4);
    const std::size_t lo = std::min<std::size_t>(10, hi);
    return std::clamp(static_cast<std::size_t>(raw), lo, hi);
}

} // namespace tailcausal
