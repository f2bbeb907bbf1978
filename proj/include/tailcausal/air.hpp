#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tailcausal/common.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/matrix.hpp"
#include "tailcausal/model.hpp"

namespace tailcausal {

/// Ancestral impulse-response matrix. Row h = impulse source, column i =
/// observed node; F[h][i] > 0 iff h in An(i), with unit diagonal.
struct AirMatrix {
    SquareMatrix f;
};

/// AIR with every column normalized to unit alpha-norm over An(i).
struct StandardizedAir {
    SquareMatrix f;
    double alpha = 1.0;
};

/// Entrywise alpha-th power of the standardized AIR. Columns sum to 1 over
/// An(i); this is the object the recovery algorithm reconstructs.
struct WeightMatrix {
    SquareMatrix w;
};

/// Forward-evaluates the model with noise = magnitude at `source` and 0
/// elsewhere; returns the resulting node values (index k <-> node k+1).
inline std::vector<double> impulse_response(const HscmModel& model, int source, double magnitude = 1.0) {
    model.dag.check_node(source);
    const int d = model.dag.node_count();
    std::vector<double> x(static_cast<std::size_t>(d), 0.0);
    std::vector<double> parent_vals;
    for (int node : topological_order(model.dag)) {
        const auto& spec = model.node_functions[static_cast<std::size_t>(node - 1)];
        parent_vals.clear();
        for (int p : model.dag.parents(node)) parent_vals.push_back(x[static_cast<std::size_t>(p - 1)]);
        x[static_cast<std::size_t>(node - 1)] =
            eval_structural(spec, parent_vals, node == source ? magnitude : 0.0);
    }
    return x;
}

/// Generic AIR: one unit-impulse propagation per source node. Exact for any
/// 1-homogeneous structural mix, O(d * |E|).
inline AirMatrix air_by_impulse(const HscmModel& model) {
    model.validate();
    const int d = model.dag.node_count();
    AirMatrix air{SquareMatrix(d)};
    for (int h = 1; h <= d; ++h) {
        const std::vector<double> x = impulse_response(model, h);
        for (int i = 1; i <= d; ++i) air.f.at(h, i) = x[static_cast<std::size_t>(i - 1)];
    }
    return air;
}

/// Closed-form AIR by explicit path enumeration, for uniform-family models:
///   linear       F_hi = sum over paths of the edge-coefficient product
///   max_linear   F_hi = max over paths of the product
///   lp           F_hi = (sum over paths of product^p)^{1/p}
/// with unit diagonal and zero off the ancestral support.
inline AirMatrix air_by_paths(const HscmModel& model, std::uint64_t max_paths = 1'000'000) {
    model.validate();
    const auto family = model.uniform_family();
    if (!family) {
        throw ValidationError("air_by_paths requires a single structural family "
                              "(and a single p for lp); use air_by_impulse for mixed models");
    }
    const double p = model.node_functions.front().p;
    const int d = model.dag.node_count();

    AirMatrix air{SquareMatrix(d)};
    for (int i = 1; i <= d; ++i) {
        air.f.at(i, i) = 1.0;
        for (int h : ancestors(model.dag, i)) {
            double acc = 0.0;
            for (const auto& path : enumerate_paths(model.dag, h, i, max_paths)) {
                double product = 1.0;
                for (std::size_t s = 0; s + 1 < path.size(); ++s) {
                    const auto& coefs =
                        model.node_functions[static_cast<std::size_t>(path[s + 1] - 1)].parent_coefficients;
                    product *= coefs.at(path[s]);
                }
                switch (*family) {
                    case StructuralFamily::linear: acc += product; break;
                    case StructuralFamily::max_linear: acc = std::max(acc, product); break;
                    case StructuralFamily::lp: acc += std::pow(product, p); break;
                }
            }
            air.f.at(h, i) = *family == StructuralFamily::lp ? std::pow(acc, 1.0 / p) : acc;
        }
    }
    return air;
}

/// Column-normalizes F: F~[h][i] = F[h][i] / (sum_k F[k][i]^alpha)^{1/alpha},
/// and W = F~^alpha (computed directly as F^alpha over the column alpha-sum,
/// so W columns sum to 1 to machine precision).
inline std::pair<StandardizedAir, WeightMatrix> standardize(const AirMatrix& air, double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
        throw ValidationError("alpha must be > 0, got " + std::to_string(alpha));
    }
    const int d = air.f.dim();
    StandardizedAir st{SquareMatrix(d), alpha};
    WeightMatrix wm{SquareMatrix(d)};
    for (int i = 1; i <= d; ++i) {
        if (air.f.at(i, i) <= 0.0) {
            throw ValidationError("invalid AIR matrix: zero diagonal in column " + std::to_string(i));
        }
        double denom = 0.0;
        for (int h = 1; h <= d; ++h) {
            const double f = air.f.at(h, i);
            if (f < 0.0) throw ValidationError("invalid AIR matrix: negative entry");
            if (f > 0.0) denom += std::pow(f, alpha);
        }
        const double inv_norm = std::pow(denom, -1.0 / alpha);
        for (int h = 1; h <= d; ++h) {
            const double f = air.f.at(h, i);
            if (f > 0.0) {
                st.f.at(h, i) = f * inv_norm;
                wm.w.at(h, i) = std::pow(f, alpha) / denom;
            }
        }
    }
    return {std::move(st), std::move(wm)};
}

} // namespace tailcausal
