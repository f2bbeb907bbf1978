#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "tailcausal/common.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/rng.hpp"

namespace tailcausal {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseFamily { pareto, frechet, log_perturbed_pareto };

inline std::string to_string(NoiseFamily f) {
    switch (f) {
        case NoiseFamily::pareto: return "pareto";
        case NoiseFamily::frechet: return "frechet";
        case NoiseFamily::log_perturbed_pareto: return "log_perturbed_pareto";
    }
    return "?";
}

inline NoiseFamily noise_family_from_string(const std::string& s) {
    if (s == "pareto") return NoiseFamily::pareto;
    if (s == "frechet") return NoiseFamily::frechet;
    if (s == "log_perturbed_pareto") return NoiseFamily::log_perturbed_pareto;
    throw ValidationError("unknown noise family '" + s + "'");
}

/// I.i.d. nonnegative regularly varying noise, P(eps > x) ~ l(x) x^{-alpha}:
///   pareto                P(eps > x) = (x/scale)^{-alpha} for x >= scale
///   frechet               P(eps > x) = 1 - exp(-(x/scale)^{-alpha})
///   log_perturbed_pareto  P(eps > x) = (1 + (alpha/2) ln(x/scale)) (x/scale)^{-alpha}
/// The third family has a genuinely non-constant slowly varying part and
/// exists to stress-test estimators; the analytic formulas never use it.
struct NoiseSpec {
    NoiseFamily family = NoiseFamily::pareto;
    double alpha = 1.0;
    double scale = 1.0;

    void validate() const {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) {
            throw ValidationError("noise tail index alpha must be > 0, got " + std::to_string(alpha));
        }
        if (!(scale > 0.0) || !std::isfinite(scale)) {
            throw ValidationError("noise scale must be > 0, got " + std::to_string(scale));
        }
    }

    /// Deterministic sampling map from one uniform (0,1) draw:
    /// pareto scale*u^{-1/alpha}, frechet scale*(-ln u)^{-1/alpha},
    /// log-perturbed pareto by Newton inversion of the survival function.
    double from_uniform(double u) const {
        switch (family) {
            case NoiseFamily::pareto:
                return scale * std::pow(u, -1.0 / alpha);
            case NoiseFamily::frechet:
                return scale * std::pow(-std::log(u), -1.0 / alpha);
            case NoiseFamily::log_perturbed_pareto:
                return invert_log_perturbed(u);
        }
        return 0.0;
    }

    /// P(eps > x), exact.
    double tail_prob(double x) const {
        switch (family) {
            case NoiseFamily::pareto:
                return x <= scale ? 1.0 : std::pow(x / scale, -alpha);
            case NoiseFamily::frechet:
                return x <= 0.0 ? 1.0 : -std::expm1(-std::pow(x / scale, -alpha));
            case NoiseFamily::log_perturbed_pareto: {
                if (x <= scale) return 1.0;
                const double t = x / scale;
                return (1.0 + 0.5 * alpha * std::log(t)) * std::pow(t, -alpha);
            }
        }
        return 0.0;
    }

    /// Inverse CDF: P(eps <= quantile(q)) = q.
    double quantile(double q) const {
        if (!(q > 0.0 && q < 1.0)) throw ValidationError("quantile level must be in (0,1), got " + std::to_string(q));
        switch (family) {
            case NoiseFamily::pareto:
                return scale * std::pow(1.0 - q, -1.0 / alpha);
            case NoiseFamily::frechet:
                return scale * std::pow(-std::log(q), -1.0 / alpha);
            case NoiseFamily::log_perturbed_pareto:
                return invert_log_perturbed(1.0 - q);
        }
        return 0.0;
    }

private:
    // Solves (1 + b*y) e^{-alpha*y} = u for y = ln(x/scale) >= 0, b = alpha/2.
    // g(y) = alpha*y - ln(1+b*y) + ln u is increasing and convex with
    // g(0) <= 0, so Newton from any point right of the root converges
    // monotonically.
    double invert_log_perturbed(double u) const {
        if (u >= 1.0) return scale;
        const double b = 0.5 * alpha;
        const double log_u = std::log(u);
        double y = -2.0 * log_u / alpha; // g(y0) >= 0 since ln(1+b*y) <= b*y
        for (int iter = 0; iter < 64; ++iter) {
            const double g = alpha * y - std::log1p(b * y) + log_u;
            const double dg = alpha - b / (1.0 + b * y);
            const double step = g / dg;
            y -= step;
            if (std::abs(step) <= 1e-15 * (1.0 + std::abs(y))) break;
        }
        return scale * std::exp(std::max(y, 0.0));
    }
};

// ---------------------------------------------------------------------------
// Structural functions
// ---------------------------------------------------------------------------

enum class StructuralFamily { linear, max_linear, lp };

inline std::string to_string(StructuralFamily f) {
    switch (f) {
        case StructuralFamily::linear: return "linear";
        case StructuralFamily::max_linear: return "max_linear";
        case StructuralFamily::lp: return "lp";
    }
    return "?";
}

inline StructuralFamily structural_family_from_string(const std::string& s) {
    if (s == "linear") return StructuralFamily::linear;
    if (s == "max_linear") return StructuralFamily::max_linear;
    if (s == "lp") return StructuralFamily::lp;
    throw ValidationError("unknown structural family '" + s + "'");
}

/// One node's structural assignment. Coefficients are keyed by parent node id
/// and must be strictly positive; a structural zero is an absent edge.
struct StructuralFunctionSpec {
    StructuralFamily family = StructuralFamily::linear;
    double p = 2.0; // lp only
    std::map<int, double> parent_coefficients;

    void validate() const {
        if (family == StructuralFamily::lp && (!(p > 0.0) || !std::isfinite(p))) {
            throw ValidationError("lp family requires p in (0,inf), got " + std::to_string(p));
        }
        for (const auto& [id, c] : parent_coefficients) {
            if (!(c > 0.0) || !std::isfinite(c)) {
                throw ValidationError("coefficient for parent " + std::to_string(id) +
                                      " must be strictly positive, got " + std::to_string(c));
            }
        }
    }
};

/// Evaluates one structural assignment. parent_values must align with
/// parent_coefficients in ascending parent-id order.
///   linear      sum_h c_h x_h + z
///   max_linear  (max_h c_h x_h) v z
///   lp          (sum_h (c_h x_h)^p + z^p)^{1/p}
inline double eval_structural(const StructuralFunctionSpec& spec, std::span<const double> parent_values,
                              double noise_value) {
    if (parent_values.size() != spec.parent_coefficients.size()) {
        throw ValidationError("eval_structural: got " + std::to_string(parent_values.size()) + " parent values for " +
                              std::to_string(spec.parent_coefficients.size()) + " coefficients");
    }
    auto check_domain = [](double v) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw ValidationError("structural inputs must be nonnegative and finite, got " + std::to_string(v));
        }
    };
    check_domain(noise_value);

    std::size_t idx = 0;
    switch (spec.family) {
        case StructuralFamily::linear: {
            double sum = noise_value;
            for (const auto& [id, c] : spec.parent_coefficients) {
                (void)id;
                check_domain(parent_values[idx]);
                sum += c * parent_values[idx++];
            }
            return sum;
        }
        case StructuralFamily::max_linear: {
            double m = noise_value;
            for (const auto& [id, c] : spec.parent_coefficients) {
                (void)id;
                check_domain(parent_values[idx]);
                m = std::max(m, c * parent_values[idx++]);
            }
            return m;
        }
        case StructuralFamily::lp: {
            double acc = std::pow(noise_value, spec.p);
            for (const auto& [id, c] : spec.parent_coefficients) {
                (void)id;
                check_domain(parent_values[idx]);
                acc += std::pow(c * parent_values[idx++], spec.p);
            }
            return std::pow(acc, 1.0 / spec.p);
        }
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// Model and simulation
// ---------------------------------------------------------------------------

/// Heavy-tailed homogeneous SCM: a DAG, one structural spec per node (mixing
/// families across nodes is allowed), and one shared i.i.d. noise spec.
struct HscmModel {
    Dag dag;
    std::vector<StructuralFunctionSpec> node_functions; // index k <-> node k+1
    NoiseSpec noise;

    void validate() const {
        noise.validate();
        const int d = dag.node_count();
        if (node_functions.size() != static_cast<std::size_t>(d)) {
            throw ValidationError("model has " + std::to_string(node_functions.size()) + " node functions for d=" +
                                  std::to_string(d));
        }
        for (int i = 1; i <= d; ++i) {
            const auto& spec = node_functions[static_cast<std::size_t>(i - 1)];
            spec.validate();
            const auto& pa = dag.parents(i);
            if (spec.parent_coefficients.size() != pa.size() ||
                !std::equal(pa.begin(), pa.end(), spec.parent_coefficients.begin(),
                            [](int id, const auto& kv) { return kv.first == id; })) {
                throw ValidationError("node " + std::to_string(i) +
                                      ": coefficient keys must equal the parent set exactly");
            }
        }
    }

    /// The common structural family, or nullopt for mixed-family models.
    /// For lp, a shared family requires a shared exponent p as well.
    std::optional<StructuralFamily> uniform_family() const {
        const StructuralFamily f = node_functions.front().family;
        for (const auto& spec : node_functions) {
            if (spec.family != f) return std::nullopt;
            if (f == StructuralFamily::lp && spec.p != node_functions.front().p) return std::nullopt;
        }
        return f;
    }
};

/// n x d matrix of simulated values, row-major; column i holds draws of X_i.
struct SampleMatrix {
    std::size_t n = 0;
    int d = 0;
    std::vector<double> values;

    double at(std::size_t row, int node) const {
        return values[row * static_cast<std::size_t>(d) + static_cast<std::size_t>(node - 1)];
    }

    std::vector<double> column(int node) const {
        std::vector<double> out(n);
        for (std::size_t r = 0; r < n; ++r) out[r] = at(r, node);
        return out;
    }
};

/// n i.i.d. noise draws; draw k comes from replication block k/4096.
inline std::vector<double> sample_noise(const NoiseSpec& spec, std::size_t n, std::uint64_t seed) {
    spec.validate();
    if (n < 1) throw ValidationError("sample count must be >= 1");
    const BlockRng rng(seed, 1);
    std::vector<double> out(n);
    for (std::size_t k = 0; k < n; ++k) out[k] = spec.from_uniform(rng.unit(k, 0));
    return out;
}

struct SimulationResult {
    SampleMatrix x;
    SampleMatrix noise;
};

namespace model_detail {

struct NodePlan {
    const StructuralFunctionSpec* spec;
    std::vector<int> parent_index; // 0-based column indices in topo-eval buffer
};

inline std::vector<NodePlan> build_plan(const HscmModel& model) {
    std::vector<NodePlan> plan(static_cast<std::size_t>(model.dag.node_count()));
    for (int i = 1; i <= model.dag.node_count(); ++i) {
        auto& entry = plan[static_cast<std::size_t>(i - 1)];
        entry.spec = &model.node_functions[static_cast<std::size_t>(i - 1)];
        for (int p : model.dag.parents(i)) entry.parent_index.push_back(p - 1);
    }
    return plan;
}

} // namespace model_detail

/// Simulates n replications: each row draws d i.i.d. noise values and
/// evaluates nodes in topological order. Deterministic given seed, and
/// identical for any thread count (replication blocks own their streams).
inline SimulationResult simulate_with_noise(const HscmModel& model, std::size_t n, std::uint64_t seed,
                                            int threads = 1) {
    model.validate();
    if (n < 1) throw ValidationError("replication count must be >= 1");
    const int d = model.dag.node_count();
    const std::vector<int> topo = topological_order(model.dag);
    const auto plan = model_detail::build_plan(model);
    const BlockRng rng(seed, static_cast<std::uint64_t>(d));

    SimulationResult result;
    result.x = SampleMatrix{n, d, std::vector<double>(n * static_cast<std::size_t>(d))};
    result.noise = SampleMatrix{n, d, std::vector<double>(n * static_cast<std::size_t>(d))};

    auto run_rows = [&](std::size_t row_begin, std::size_t row_end) {
        std::vector<double> eps(static_cast<std::size_t>(d));
        std::vector<double> x(static_cast<std::size_t>(d));
        std::vector<double> parent_vals;
        for (std::size_t r = row_begin; r < row_end; ++r) {
            for (int i = 0; i < d; ++i) {
                eps[static_cast<std::size_t>(i)] =
                    model.noise.from_uniform(rng.unit(r, static_cast<std::uint64_t>(i)));
            }
            for (int node : topo) {
                const auto& entry = plan[static_cast<std::size_t>(node - 1)];
                parent_vals.clear();
                for (int pi : entry.parent_index) parent_vals.push_back(x[static_cast<std::size_t>(pi)]);
                x[static_cast<std::size_t>(node - 1)] =
                    eval_structural(*entry.spec, parent_vals, eps[static_cast<std::size_t>(node - 1)]);
            }
            const std::size_t base = r * static_cast<std::size_t>(d);
            std::copy(x.begin(), x.end(), result.x.values.begin() + static_cast<std::ptrdiff_t>(base));
            std::copy(eps.begin(), eps.end(), result.noise.values.begin() + static_cast<std::ptrdiff_t>(base));
        }
    };

    const std::size_t block = BlockRng::kBlockSize;
    const std::size_t n_blocks = (n + block - 1) / block;
    const int t = std::max(1, std::min<int>(threads, static_cast<int>(n_blocks)));
    if (t == 1) {
        run_rows(0, n);
    } else {
        std::vector<std::thread> workers;
        workers.reserve(static_cast<std::size_t>(t));
        for (int w = 0; w < t; ++w) {
            workers.emplace_back([&, w]() {
                for (std::size_t b = static_cast<std::size_t>(w); b < n_blocks; b += static_cast<std::size_t>(t)) {
                    run_rows(b * block, std::min(n, (b + 1) * block));
                }
            });
        }
        for (auto& worker : workers) worker.join();
    }
    return result;
}

inline SampleMatrix simulate(const HscmModel& model, std::size_t n, std::uint64_t seed, int threads = 1) {
    return simulate_with_noise(model, n, seed, threads).x;
}

// ---------------------------------------------------------------------------
// Axiom checks
// ---------------------------------------------------------------------------

struct AxiomCheck {
    std::string name;
    bool passed = true;
    std::string counterexample;
};

struct AxiomReport {
    std::vector<AxiomCheck> checks;

    bool all_passed() const {
        for (const auto& c : checks) {
            if (!c.passed) return false;
        }
        return true;
    }
};

/// Numerically checks the five structural-function properties on random
/// inputs: nonnegativity, vanishing only at the origin, continuity (probe at
/// shrinking perturbations), 1-homogeneity |f(c x)-c f(x)| <= tol (1+c f(x)),
/// and coordinate-deletion monotonicity f(x) >= f(x restricted to J).
/// Failures are report entries carrying the first counterexample.
inline AxiomReport check_axioms(const StructuralFunctionSpec& spec, std::size_t trials, double tol,
                                std::uint64_t seed) {
    spec.validate();
    if (trials < 1) throw ValidationError("trials must be >= 1");

    const std::size_t arity = spec.parent_coefficients.size() + 1; // parents + own noise slot
    SplitMix64 rng(seed);

    AxiomReport report;
    report.checks = {{"nonnegativity", true, ""},
                     {"vanishing_only_at_origin", true, ""},
                     {"continuity", true, ""},
                     {"homogeneity", true, ""},
                     {"deletion_monotonicity", true, ""}};
    AxiomCheck& nonneg = report.checks[0];
    AxiomCheck& vanish = report.checks[1];
    AxiomCheck& continuity = report.checks[2];
    AxiomCheck& homogeneity = report.checks[3];
    AxiomCheck& deletion = report.checks[4];

    auto describe = [](std::span<const double> x, double extra) {
        std::ostringstream os;
        os << "x=(";
        for (std::size_t k = 0; k < x.size(); ++k) os << (k ? "," : "") << x[k];
        os << ") value=" << extra;
        return os.str();
    };

    auto eval = [&](std::span<const double> full) {
        return eval_structural(spec, full.subspan(0, arity - 1), full[arity - 1]);
    };

    for (std::size_t trial = 0; trial < trials; ++trial) {
        const double magnitude = std::pow(10.0, rng.uniform(-2.0, 2.0));
        std::vector<double> x(arity);
        bool all_zero = trial % 8 == 0;
        for (auto& v : x) {
            const bool force_zero = all_zero || rng.next_unit() < 0.15;
            v = force_zero ? 0.0 : rng.next_unit() * magnitude;
        }
        const bool is_zero = std::all_of(x.begin(), x.end(), [](double v) { return v == 0.0; });
        const double fx = eval(x);

        if (nonneg.passed && !(fx >= 0.0 && std::isfinite(fx))) {
            nonneg.passed = false;
            nonneg.counterexample = describe(x, fx);
        }
        if (vanish.passed) {
            if (is_zero ? (fx != 0.0) : !(fx > 0.0)) {
                vanish.passed = false;
                vanish.counterexample = describe(x, fx);
            }
        }
        if (homogeneity.passed) {
            const double c = std::pow(10.0, rng.uniform(-2.0, 2.0));
            std::vector<double> cx(arity);
            for (std::size_t k = 0; k < arity; ++k) cx[k] = c * x[k];
            const double fcx = eval(cx);
            if (!(std::abs(fcx - c * fx) <= tol * (1.0 + c * fx))) {
                homogeneity.passed = false;
                homogeneity.counterexample = describe(x, fcx - c * fx) + " c=" + std::to_string(c);
            }
        }
        if (deletion.passed) {
            std::vector<double> restricted(arity, 0.0);
            bool nonempty = false;
            for (std::size_t k = 0; k < arity; ++k) {
                if (rng.next_unit() < 0.5) {
                    restricted[k] = x[k];
                    nonempty = true;
                }
            }
            if (!nonempty) {
                const std::size_t k = rng.next_below(arity);
                restricted[k] = x[k];
            }
            const double fr = eval(restricted);
            if (!(fx >= fr - tol * (1.0 + fx))) {
                deletion.passed = false;
                deletion.counterexample = describe(x, fx) + " restricted value=" + std::to_string(fr);
            }
        }
        if (continuity.passed && !is_zero) {
            const double span = 1.0 + *std::max_element(x.begin(), x.end());
            const std::size_t coord = rng.next_below(arity);
            auto delta_at = [&](double h) {
                std::vector<double> y = x;
                y[coord] += h * span;
                return std::abs(eval(y) - fx);
            };
            const double big = delta_at(1e-4);
            const double small = delta_at(1e-12);
            if (!(small <= 0.5 * big + tol * (1.0 + fx))) {
                continuity.passed = false;
                continuity.counterexample = describe(x, small) + " coarse delta=" + std::to_string(big);
            }
        }
    }
    return report;
}

} // namespace tailcausal
