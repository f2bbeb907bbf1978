#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "tailcausal/air.hpp"
#include "tailcausal/common.hpp"
#include "tailcausal/ctc.hpp"
#include "tailcausal/dag.hpp"
#include "tailcausal/discovery.hpp"
#include "tailcausal/matrix.hpp"
#include "tailcausal/model.hpp"
#include "tailcausal/oracle.hpp"

namespace tailcausal::io {

using nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr const char* kToolName = "tailcausal";
inline constexpr const char* kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Files and hashing
// ---------------------------------------------------------------------------

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "' for reading");
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ValidationError("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw ValidationError("failed writing '" + path + "'");
}

inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= static_cast<std::uint64_t>(c);
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof(out), "%016llx", static_cast<unsigned long long>(h));
    return out;
}

/// Content hash recorded in output metadata: "fnv1a64:<hex>".
inline std::string hash_file(const std::string& path) { return std::string("fnv1a64:") + fnv1a_hex(read_file(path)); }

/// Provenance block embedded in every JSON artifact.
struct Meta {
    std::optional<std::string> input_hash;
    json config = json::object();
    bool with_timestamp = true;

    json to_json() const {
        json m;
        m["tool"] = kToolName;
        m["tool_version"] = kToolVersion;
        if (input_hash) m["input_hash"] = *input_hash;
        m["config"] = config;
        if (with_timestamp) {
            const std::time_t now = std::time(nullptr);
            char buf[32];
            std::tm tm_utc{};
            gmtime_r(&now, &tm_utc);
            std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
            m["timestamp"] = buf;
        }
        return m;
    }
};

inline void write_json_file(const std::string& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

inline json parse_json_file(const std::string& path) {
    try {
        return json::parse(read_file(path));
    } catch (const json::parse_error& e) {
        throw ValidationError("'" + path + "' is not valid JSON: " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Strict schema helpers
// ---------------------------------------------------------------------------

namespace schema {

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ValidationError(where + ": expected an object");
}

inline void reject_unknown(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        bool known = false;
        for (const char* a : allowed) {
            if (key == a) {
                known = true;
                break;
            }
        }
        if (!known) throw ValidationError(where + ": unknown field '" + key + "'");
    }
}

inline const json& require(const json& j, const char* key, const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ValidationError(where + ": missing required field '" + std::string(key) + "'");
    return *it;
}

inline double require_number(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number()) throw ValidationError(where + ": field '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

inline int require_int(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_number_integer()) throw ValidationError(where + ": field '" + std::string(key) + "' must be an integer");
    return v.get<int>();
}

inline std::string require_string(const json& j, const char* key, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_string()) throw ValidationError(where + ": field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

inline void check_version(const json& j, const std::string& where) {
    if (require_int(j, "version", where) != kFormatVersion) {
        throw ValidationError(where + ": unsupported format version");
    }
}

inline std::vector<double> matrix_entries(const json& j, const char* key, int d, const std::string& where) {
    const json& v = require(j, key, where);
    if (!v.is_array() || v.size() != static_cast<std::size_t>(d) * static_cast<std::size_t>(d)) {
        throw ValidationError(where + ": '" + std::string(key) + "' must be a dense row-major array of d*d numbers");
    }
    std::vector<double> out;
    out.reserve(v.size());
    for (const auto& e : v) {
        if (!e.is_number()) throw ValidationError(where + ": matrix entries must be numbers");
        const double x = e.get<double>();
        if (!std::isfinite(x)) throw ValidationError(where + ": matrix entries must be finite");
        out.push_back(x);
    }
    return out;
}

} // namespace schema

// ---------------------------------------------------------------------------
// Model file
// ---------------------------------------------------------------------------

inline json model_to_json(const HscmModel& model, const Meta& meta) {
    json nodes = json::array();
    for (int i = 1; i <= model.dag.node_count(); ++i) {
        const auto& spec = model.node_functions[static_cast<std::size_t>(i - 1)];
        json parents = json::array();
        for (const auto& [id, coef] : spec.parent_coefficients) {
            parents.push_back(json{{"id", id}, {"coef", coef}});
        }
        json node{{"id", i}, {"family", to_string(spec.family)}, {"parents", std::move(parents)}};
        if (spec.family == StructuralFamily::lp) node["p"] = spec.p;
        nodes.push_back(std::move(node));
    }
    return json{{"version", kFormatVersion},
                {"alpha", model.noise.alpha},
                {"noise", json{{"family", to_string(model.noise.family)}, {"scale", model.noise.scale}}},
                {"nodes", std::move(nodes)},
                {"meta", meta.to_json()}};
}

inline HscmModel model_from_json(const json& j) {
    const std::string where = "model";
    schema::require_object(j, where);
    schema::reject_unknown(j, {"version", "alpha", "noise", "nodes", "meta"}, where);
    schema::check_version(j, where);

    NoiseSpec noise;
    noise.alpha = schema::require_number(j, "alpha", where);
    const json& jn = schema::require(j, "noise", where);
    schema::require_object(jn, where + ".noise");
    schema::reject_unknown(jn, {"family", "scale"}, where + ".noise");
    noise.family = noise_family_from_string(schema::require_string(jn, "family", where + ".noise"));
    noise.scale = jn.contains("scale") ? schema::require_number(jn, "scale", where + ".noise") : 1.0;

    const json& jnodes = schema::require(j, "nodes", where);
    if (!jnodes.is_array() || jnodes.empty()) throw ValidationError(where + ": 'nodes' must be a nonempty array");
    const int d = static_cast<int>(jnodes.size());

    std::vector<StructuralFunctionSpec> specs(static_cast<std::size_t>(d));
    std::vector<char> seen(static_cast<std::size_t>(d) + 1, 0);
    std::vector<std::pair<int, int>> edges;
    for (const json& jnode : jnodes) {
        const std::string nw = where + ".nodes[]";
        schema::require_object(jnode, nw);
        schema::reject_unknown(jnode, {"id", "family", "p", "parents"}, nw);
        const int id = schema::require_int(jnode, "id", nw);
        if (id < 1 || id > d || seen[static_cast<std::size_t>(id)]) {
            throw ValidationError(where + ": node ids must be exactly 1..d with no repeats (bad id " +
                                  std::to_string(id) + ")");
        }
        seen[static_cast<std::size_t>(id)] = 1;
        auto& spec = specs[static_cast<std::size_t>(id - 1)];
        spec.family = structural_family_from_string(schema::require_string(jnode, "family", nw));
        if (spec.family == StructuralFamily::lp) {
            spec.p = schema::require_number(jnode, "p", nw);
        } else if (jnode.contains("p")) {
            throw ValidationError(nw + ": field 'p' is only valid for the lp family");
        }
        const json& jparents = schema::require(jnode, "parents", nw);
        if (!jparents.is_array()) throw ValidationError(nw + ": 'parents' must be an array");
        for (const json& jp : jparents) {
            const std::string pw = nw + ".parents[]";
            schema::require_object(jp, pw);
            schema::reject_unknown(jp, {"id", "coef"}, pw);
            const int pid = schema::require_int(jp, "id", pw);
            const double coef = schema::require_number(jp, "coef", pw);
            if (!spec.parent_coefficients.emplace(pid, coef).second) {
                throw ValidationError(pw + ": duplicate parent id " + std::to_string(pid) + " for node " +
                                      std::to_string(id));
            }
            edges.emplace_back(pid, id);
        }
    }

    HscmModel model{Dag(d, std::move(edges)), std::move(specs), noise};
    model.validate();
    return model;
}

inline void save_model(const HscmModel& model, const std::string& path, const Meta& meta) {
    write_json_file(path, model_to_json(model, meta));
}

inline HscmModel load_model(const std::string& path) { return model_from_json(parse_json_file(path)); }

// ---------------------------------------------------------------------------
// Samples CSV
// ---------------------------------------------------------------------------

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Header "X1,...,Xd", one row per replication, 17 significant digits,
/// '.' decimal separator, LF line endings.
inline void save_samples_csv(const SampleMatrix& samples, const std::string& path) {
    std::string out;
    out.reserve(samples.values.size() * 20);
    for (int c = 1; c <= samples.d; ++c) {
        out += (c == 1 ? "X" : ",X") + std::to_string(c);
    }
    out += '\n';
    for (std::size_t r = 0; r < samples.n; ++r) {
        for (int c = 1; c <= samples.d; ++c) {
            if (c > 1) out += ',';
            out += format_double(samples.at(r, c));
        }
        out += '\n';
    }
    write_file(path, out);
}

inline SampleMatrix load_samples_csv(const std::string& path) {
    std::istringstream in(read_file(path));
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("'" + path + "': empty samples file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    int d = 0;
    {
        std::istringstream header(line);
        std::string cell;
        while (std::getline(header, cell, ',')) {
            ++d;
            if (cell != "X" + std::to_string(d)) {
                throw ValidationError("'" + path + "': expected header column X" + std::to_string(d) + ", got '" +
                                      cell + "'");
            }
        }
    }
    if (d < 1) throw ValidationError("'" + path + "': no columns in header");

    SampleMatrix samples;
    samples.d = d;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cell;
        int c = 0;
        while (std::getline(row, cell, ',')) {
            ++c;
            char* end = nullptr;
            const double v = std::strtod(cell.c_str(), &end);
            if (end == cell.c_str() || *end != '\0' || !std::isfinite(v) || v < 0.0) {
                throw ValidationError("'" + path + "' line " + std::to_string(line_no) +
                                      ": expected a finite nonnegative number, got '" + cell + "'");
            }
            samples.values.push_back(v);
        }
        if (c != d) {
            throw ValidationError("'" + path + "' line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(d) + " columns, got " + std::to_string(c));
        }
        ++samples.n;
    }
    if (samples.n == 0) throw ValidationError("'" + path + "': no data rows");
    return samples;
}

// ---------------------------------------------------------------------------
// Edge-list text format
// ---------------------------------------------------------------------------

/// One "j i" pair per line, 1-based, meaning j -> i.
inline void save_edge_list(const Dag& dag, const std::string& path) {
    std::string out;
    for (const auto& [j, i] : dag.edges()) {
        out += std::to_string(j) + " " + std::to_string(i) + "\n";
    }
    write_file(path, out);
}

inline Dag load_edge_list(const std::string& path, std::optional<int> node_count = std::nullopt) {
    std::istringstream in(read_file(path));
    std::vector<std::pair<int, int>> edges;
    int max_id = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream row(line);
        int j = 0, i = 0;
        if (!(row >> j)) continue; // blank line
        std::string trailing;
        if (!(row >> i) || (row >> trailing)) {
            throw ValidationError("'" + path + "' line " + std::to_string(line_no) +
                                  ": expected exactly two node ids");
        }
        edges.emplace_back(j, i);
        max_id = std::max({max_id, j, i});
    }
    const int d = node_count.value_or(max_id);
    if (d < 1) throw ValidationError("'" + path + "': cannot infer node count from an empty edge list");
    return Dag(d, std::move(edges));
}

// ---------------------------------------------------------------------------
// Matrix artifacts
// ---------------------------------------------------------------------------

inline json matrix_to_json(const SquareMatrix& m) {
    json out = json::array();
    for (double v : m.data()) out.push_back(v);
    return out;
}

/// air.json: the raw AIR plus its standardized form and weights, with a note
/// on whether the path method corroborated the impulse method.
inline json air_to_json(const AirMatrix& air, const StandardizedAir& st, const WeightMatrix& w,
                        std::optional<double> max_method_disagreement, const std::string& paths_note,
                        const Meta& meta) {
    json methods{{"impulse", true}, {"paths", max_method_disagreement.has_value()}};
    if (max_method_disagreement) methods["max_disagreement"] = *max_method_disagreement;
    if (!paths_note.empty()) methods["paths_note"] = paths_note;
    return json{{"version", kFormatVersion}, {"d", air.f.dim()},        {"alpha", st.alpha},
                {"f", matrix_to_json(air.f)}, {"f_standardized", matrix_to_json(st.f)},
                {"w", matrix_to_json(w.w)},   {"methods", std::move(methods)},
                {"meta", meta.to_json()}};
}

inline json weights_to_json(const WeightMatrix& w, std::optional<double> alpha,
                            const std::optional<StandardizedAir>& st, const Meta& meta) {
    json out{{"version", kFormatVersion}, {"d", w.w.dim()}, {"w", matrix_to_json(w.w)}, {"meta", meta.to_json()}};
    if (alpha) out["alpha"] = *alpha;
    if (st) out["f_standardized"] = matrix_to_json(st->f);
    return out;
}

inline WeightMatrix weights_from_json(const json& j) {
    const std::string where = "weights";
    schema::require_object(j, where);
    schema::reject_unknown(j, {"version", "d", "alpha", "w", "f_standardized", "meta"}, where);
    schema::check_version(j, where);
    const int d = schema::require_int(j, "d", where);
    if (d < 1) throw ValidationError(where + ": d must be >= 1");
    return WeightMatrix{SquareMatrix(d, schema::matrix_entries(j, "w", d, where))};
}

/// gamma.json: the orientation is explicit in the file so downstream
/// tools never have to guess ("rows_condition": true).
inline json ctc_to_json(const CtcMatrix& gamma, const Meta& meta) {
    json out{{"version", kFormatVersion},
             {"kind", to_string(gamma.kind)},
             {"d", gamma.gamma.dim()},
             {"rows_condition", true},
             {"gamma", matrix_to_json(gamma.gamma)},
             {"meta", meta.to_json()}};
    if (gamma.k_used) out["k_used"] = *gamma.k_used;
    return out;
}

inline CtcMatrix ctc_from_json(const json& j) {
    const std::string where = "gamma";
    schema::require_object(j, where);
    schema::reject_unknown(j, {"version", "kind", "d", "k_used", "rows_condition", "gamma", "meta"}, where);
    schema::check_version(j, where);
    const int d = schema::require_int(j, "d", where);
    if (d < 1) throw ValidationError(where + ": d must be >= 1");
    const json& rc = schema::require(j, "rows_condition", where);
    if (!rc.is_boolean() || !rc.get<bool>()) {
        throw ValidationError(where + ": 'rows_condition' must be true (conditioning variable on rows)");
    }
    CtcMatrix out{SquareMatrix(d, schema::matrix_entries(j, "gamma", d, where)),
                  ctc_kind_from_string(schema::require_string(j, "kind", where)), std::nullopt};
    if (j.contains("k_used")) {
        const int k = schema::require_int(j, "k_used", where);
        if (k < 1) throw ValidationError(where + ": k_used must be >= 1");
        out.k_used = static_cast<std::size_t>(k);
    }
    return out;
}

inline void save_ctc(const CtcMatrix& gamma, const std::string& path, const Meta& meta) {
    write_json_file(path, ctc_to_json(gamma, meta));
}

inline CtcMatrix load_ctc(const std::string& path) { return ctc_from_json(parse_json_file(path)); }

/// CSV export of a square matrix, rows labelled X1..Xd. For gamma matrices
/// the row is the conditioning node, same as the JSON orientation.
inline void save_matrix_csv(const SquareMatrix& m, const std::string& path, const std::string& corner_label) {
    std::string out = corner_label;
    for (int c = 1; c <= m.dim(); ++c) out += ",X" + std::to_string(c);
    out += '\n';
    for (int r = 1; r <= m.dim(); ++r) {
        out += "X" + std::to_string(r);
        for (int c = 1; c <= m.dim(); ++c) {
            out += ',';
            out += format_double(m.at(r, c));
        }
        out += '\n';
    }
    write_file(path, out);
}

// ---------------------------------------------------------------------------
// Discovery report
// ---------------------------------------------------------------------------

inline json report_to_json(const DiscoveryReport& report, const Meta& meta) {
    json verdicts = json::array();
    for (const auto& v : report.verdicts) {
        verdicts.push_back(json{{"i", v.i},
                                {"j", v.j},
                                {"verdict", to_string(v.verdict)},
                                {"gamma_ij", v.gamma_ij},
                                {"gamma_ji", v.gamma_ji},
                                {"delta_used", v.delta_used}});
    }
    json sets = json::array();
    for (const auto& s : report.ancestors.sets) sets.push_back(s);

    json out{{"version", kFormatVersion},
             {"d", report.d},
             {"delta", report.delta},
             {"order_mode", to_string(report.order_mode)},
             {"verdicts", std::move(verdicts)},
             {"ancestor_sets", std::move(sets)},
             {"ancestor_set_sizes", report.ancestors.sizes},
             {"generations", report.generation},
             {"causal_order", report.order},
             {"recovered_weights", matrix_to_json(report.recovered_weights.w)},
             {"conventions",
              json{{"ctc", "gamma[j][i] = sum over h in An(i) n An(j) of w[h][j], with w = f_standardized^alpha"},
                   {"alternate_reading",
                    "summing f_standardized instead of w matches only when alpha = 1; this tool always sums w"},
                   {"raw_air", "not recoverable from w: standardization discards column scale"}}},
             {"diagnostics", report.diagnostics},
             {"meta", meta.to_json()}};
    out["causal_order_exact"] = report.order_exact ? json(*report.order_exact) : json();
    out["alpha"] = report.alpha ? json(*report.alpha) : json();
    out["recovered_standardized_air"] =
        report.recovered_standardized_air ? matrix_to_json(report.recovered_standardized_air->f) : json();
    return out;
}

// ---------------------------------------------------------------------------
// Oracle summaries
// ---------------------------------------------------------------------------

inline json tail_ratio_to_json(const TailRatioResult& r, const Meta& meta) {
    return json{{"version", kFormatVersion},
                {"ratio", r.ratio},
                {"target", r.target},
                {"relative_error", r.target > 0.0 ? std::abs(r.ratio - r.target) / r.target : 0.0},
                {"threshold", r.threshold},
                {"exceedances", r.exceedances},
                {"n", r.n},
                {"meta", meta.to_json()}};
}

inline json roundtrip_to_json(const RoundTripSummary& s, const Meta& meta) {
    json per_family = json::object();
    for (const auto& [name, err] : s.per_family_max_error) per_family[name] = err;
    return json{{"version", kFormatVersion},
                {"d_max", s.d_max},
                {"graphs_per_size", s.graphs_per_size},
                {"total_graphs", s.total_graphs},
                {"max_error", s.max_error},
                {"support_exact", s.support_exact},
                {"per_family_max_error", std::move(per_family)},
                {"worst",
                 json{{"d", s.worst.d},
                      {"graph_index", s.worst.graph_index},
                      {"family", s.worst.family},
                      {"alpha", s.worst.alpha},
                      {"error", s.worst.error}}},
                {"meta", meta.to_json()}};
}

} // namespace tailcausal::io
