#pragma once

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "recur/error.hpp"
#include "recur/harness.hpp"
#include "recur/inference.hpp"
#include "recur/metrics.hpp"
#include "recur/simulate.hpp"
#include "recur/stats_core.hpp"

namespace recur {

inline constexpr std::string_view kToolVersion = "1.0.0";

/// Shortest text that round-trips: 17 significant digits.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// Dataset CSV

namespace detail {

inline std::vector<std::string_view> split_line(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(sep, start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_number(std::string_view field, double& out) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    if (field.empty()) return false;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
    return ec == std::errc() && ptr == field.data() + field.size();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInput("cannot write '" + path + "'");
    out << content;
    if (!out) throw InvalidInput("failed writing '" + path + "'");
}

}  // namespace detail

struct Dataset {
    std::vector<std::string> header;  // empty when the file has none
    Sample sample;
};

/// Comma-separated reals, one observation per row. A first row that does not
/// parse as numbers is taken as the header. Rows and columns in messages are
/// 1-based file positions.
inline Dataset parse_dataset(std::string_view text) {
    if (text.size() >= 3 && static_cast<unsigned char>(text[0]) == 0xEF &&
        static_cast<unsigned char>(text[1]) == 0xBB && static_cast<unsigned char>(text[2]) == 0xBF) {
        text.remove_prefix(3);
    }
    Dataset ds;
    std::vector<double> values;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_line(line, ',');

        if (rows == 0 && ds.header.empty()) {
            double probe = 0.0;
            bool numeric = true;
            for (auto f : fields) numeric = numeric && detail::parse_number(f, probe);
            if (!numeric) {
                for (auto f : fields) ds.header.emplace_back(detail::trim(f));
                cols = fields.size();
                continue;
            }
        }
        if (cols == 0) cols = fields.size();
        if (fields.size() != cols) {
            throw InvalidInput("row " + std::to_string(line_no) + ": expected " + std::to_string(cols) +
                               " columns, found " + std::to_string(fields.size()));
        }
        for (std::size_t c = 0; c < fields.size(); ++c) {
            double v = 0.0;
            if (!detail::parse_number(fields[c], v) || !std::isfinite(v)) {
                throw InvalidInput("row " + std::to_string(line_no) + ", column " + std::to_string(c + 1) +
                                   ": not a finite number: '" + std::string(detail::trim(fields[c])) + "'");
            }
            values.push_back(v);
        }
        ++rows;
    }
    if (rows < 2) throw InvalidInput("dataset needs at least two data rows, found " + std::to_string(rows));
    ds.sample = Sample(rows, cols, std::move(values));
    return ds;
}

inline Dataset read_dataset(const std::string& path) {
    try {
        return parse_dataset(detail::read_file(path));
    } catch (const InvalidInput& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

inline std::string format_dataset(const Sample& s) {
    std::string out;
    for (std::size_t i = 0; i < s.n(); ++i) {
        for (std::size_t k = 0; k < s.d(); ++k) {
            if (k > 0) out.push_back(',');
            out += format_double(s(i, k));
        }
        out.push_back('\n');
    }
    return out;
}

inline void write_dataset(const std::string& path, const Sample& s) { detail::write_file(path, format_dataset(s)); }

// ---------------------------------------------------------------------------
// Report JSON

/// Serialized outcome of `recur test`.
struct ReportFile {
    StatisticSpec spec;
    std::size_t n = 0;
    double observed = 0.0;
    double p_value = 1.0;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, bool>> alpha_decisions;  // level text -> reject
    double elapsed_ms = 0.0;
    std::string tool_version{kToolVersion};

    friend bool operator==(const ReportFile&, const ReportFile&) = default;
};

/// Canonical text of a level, e.g. 0.05 -> "0.05".
inline std::string level_key(double level) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.15g", level);
    return buf;
}

inline ReportFile make_report(const TestReport& r, const std::vector<double>& levels, bool with_timing) {
    ReportFile f;
    f.spec = r.spec;
    f.n = r.n;
    f.observed = r.observed;
    f.p_value = r.p_value;
    f.m = r.m;
    f.seed = r.seed;
    for (double a : levels) f.alpha_decisions.emplace_back(level_key(a), r.rejects(a));
    f.elapsed_ms = with_timing ? std::chrono::duration<double, std::milli>(r.elapsed).count() : 0.0;
    return f;
}

inline nlohmann::ordered_json to_json(const ReportFile& f) {
    nlohmann::ordered_json j;
    j["statistic"] = {{"functional", std::string(to_string(f.spec.functional))},
                      {"metric_x", std::string(to_string(f.spec.metric_x))},
                      {"metric_y", std::string(to_string(f.spec.metric_y))}};
    j["n"] = f.n;
    j["observed"] = f.observed;
    j["p_value"] = f.p_value;
    j["m"] = f.m;
    j["seed"] = f.seed;
    nlohmann::ordered_json decisions = nlohmann::ordered_json::object();
    for (const auto& [k, v] : f.alpha_decisions) decisions[k] = v;
    j["alpha_decisions"] = decisions;
    j["elapsed_ms"] = f.elapsed_ms;
    j["tool_version"] = f.tool_version;
    return j;
}

inline std::string format_report(const ReportFile& f) { return to_json(f).dump(2) + "\n"; }

inline ReportFile parse_report(std::string_view text) {
    try {
        const auto j = nlohmann::ordered_json::parse(text);
        ReportFile f;
        const auto& st = j.at("statistic");
        f.spec.functional = parse_functional(st.at("functional").get<std::string>());
        f.spec.metric_x = parse_metric(st.at("metric_x").get<std::string>());
        f.spec.metric_y = parse_metric(st.at("metric_y").get<std::string>());
        f.n = j.at("n").get<std::size_t>();
        f.observed = j.at("observed").get<double>();
        f.p_value = j.at("p_value").get<double>();
        f.m = j.at("m").get<std::size_t>();
        f.seed = j.at("seed").get<std::uint64_t>();
        for (const auto& [k, v] : j.at("alpha_decisions").items()) f.alpha_decisions.emplace_back(k, v.get<bool>());
        f.elapsed_ms = j.at("elapsed_ms").get<double>();
        f.tool_version = j.at("tool_version").get<std::string>();
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("malformed report: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Power-study configuration
//
// {
//   "schema_version": 1,
//   "seed": 1, "reps": 200, "perms": 100, "alpha": 0.05, "threads": 0,
//   "specs": ["T2,l1,l1", "T2,linf,linf"],
//   "scenarios": [{"id": "D3", "n": 50, "len": 100, "phi": [0.1]}]
// }
//
// "scenario" (one object) may replace "scenarios". Scenario keys: id, n,
// len, phi, theta, hurst, lambda, lambda1, lambda2, sigma. Unknown keys are
// rejected.

inline constexpr int kConfigSchemaVersion = 1;

namespace detail {

template <typename T>
T config_value(const nlohmann::json& obj, const std::string& key, const std::string& where) {
    try {
        return obj.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw InvalidInput("config key '" + where + key + "' is missing or has the wrong type");
    }
}

inline void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [k, v] : obj.items()) {
        if (!known.count(k)) throw InvalidInput("unknown config key '" + where + k + "'");
    }
}

inline ScenarioConfig parse_scenario_json(const nlohmann::json& s, const std::string& where) {
    if (!s.is_object()) throw InvalidInput("config key '" + where + "' must be an object");
    reject_unknown(s, {"id", "n", "len", "phi", "theta", "hurst", "lambda", "lambda1", "lambda2", "sigma"}, where + ".");
    ScenarioConfig cfg;
    cfg.id = parse_scenario(config_value<std::string>(s, "id", where + "."));
    if (s.contains("n")) cfg.n = config_value<std::size_t>(s, "n", where + ".");
    if (s.contains("len")) cfg.len = config_value<std::size_t>(s, "len", where + ".");
    if (s.contains("phi")) cfg.phi = config_value<std::vector<double>>(s, "phi", where + ".");
    if (s.contains("theta")) cfg.theta = config_value<double>(s, "theta", where + ".");
    if (s.contains("hurst")) cfg.hurst = config_value<double>(s, "hurst", where + ".");
    if (s.contains("lambda")) cfg.lambda = config_value<double>(s, "lambda", where + ".");
    if (s.contains("lambda1")) cfg.lambda1 = config_value<double>(s, "lambda1", where + ".");
    if (s.contains("lambda2")) cfg.lambda2 = config_value<double>(s, "lambda2", where + ".");
    if (s.contains("sigma")) cfg.sigma = config_value<double>(s, "sigma", where + ".");
    return cfg;
}

}  // namespace detail

/// One PowerStudySpec per configured scenario.
inline std::vector<PowerStudySpec> parse_power_config(std::string_view text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw InvalidInput("config must be a JSON object");
    detail::reject_unknown(j, {"schema_version", "seed", "reps", "perms", "alpha", "threads", "specs", "scenario", "scenarios"}, "");
    const int version = detail::config_value<int>(j, "schema_version", "");
    if (version != kConfigSchemaVersion) {
        throw InvalidInput("config key 'schema_version' must be " + std::to_string(kConfigSchemaVersion));
    }
    PowerStudySpec base;
    if (j.contains("seed")) base.seed = detail::config_value<std::uint64_t>(j, "seed", "");
    if (j.contains("reps")) base.reps = detail::config_value<std::size_t>(j, "reps", "");
    if (j.contains("perms")) base.m = detail::config_value<std::size_t>(j, "perms", "");
    if (j.contains("alpha")) base.alpha = detail::config_value<double>(j, "alpha", "");
    if (j.contains("threads")) base.threads = detail::config_value<unsigned>(j, "threads", "");
    for (const auto& s : detail::config_value<std::vector<std::string>>(j, "specs", "")) base.specs.push_back(parse_spec(s));

    std::vector<ScenarioConfig> scenarios;
    if (j.contains("scenario") == j.contains("scenarios")) {
        throw InvalidInput("config key 'scenarios' (or 'scenario') is required exactly once");
    }
    if (j.contains("scenario")) {
        scenarios.push_back(detail::parse_scenario_json(j["scenario"], "scenario"));
    } else {
        const auto& arr = j["scenarios"];
        if (!arr.is_array() || arr.empty()) throw InvalidInput("config key 'scenarios' must be a non-empty array");
        for (std::size_t i = 0; i < arr.size(); ++i) {
            scenarios.push_back(detail::parse_scenario_json(arr[i], "scenarios[" + std::to_string(i) + "]"));
        }
    }
    std::vector<PowerStudySpec> out;
    for (auto& s : scenarios) {
        PowerStudySpec p = base;
        p.scenario = std::move(s);
        validate(p);
        out.push_back(std::move(p));
    }
    return out;
}

inline constexpr std::string_view kPowerCsvHeader = "scenario,n,len,statistic,rate,se,rejections,reps,m,alpha,seconds";

/// One CSV row per statistic; the statistic label is quoted since it holds commas.
inline std::string format_power_rows(const PowerResult& r, bool with_timing) {
    std::string out;
    for (const auto& s : r.per_spec) {
        out += std::string(to_string(r.scenario.id)) + "," + std::to_string(r.scenario.n) + "," +
               std::to_string(r.scenario.len) + ",\"" + label(s.spec) + "\"," + format_double(s.rate) + "," +
               format_double(s.se) + "," + std::to_string(s.rejections) + "," + std::to_string(r.reps) + "," +
               std::to_string(r.m) + "," + format_double(r.alpha) + "," +
               format_double(with_timing ? s.seconds : 0.0) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// Column groups "name=c0:c1;name=c2" (0-based, inclusive ranges)

struct ColumnGroup {
    std::string name;
    std::size_t first = 0;
    std::size_t last = 0;  // inclusive
    friend bool operator==(const ColumnGroup&, const ColumnGroup&) = default;
};

/// Parses a group spec against a data file with `columns` columns. Ranges
/// must not partially overlap; a range repeated verbatim is allowed (a
/// deliberate self-pairing).
inline std::vector<ColumnGroup> parse_groups(std::string_view spec, std::size_t columns) {
    std::vector<ColumnGroup> out;
    for (auto part : detail::split_line(spec, ';')) {
        part = detail::trim(part);
        if (part.empty()) continue;
        const auto eq = part.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw InvalidInput("group '" + std::string(part) + "' must look like name=first:last");
        }
        ColumnGroup g;
        g.name = std::string(detail::trim(part.substr(0, eq)));
        const auto range = detail::trim(part.substr(eq + 1));
        const auto colon = range.find(':');
        auto parse_index = [&](std::string_view s) {
            s = detail::trim(s);
            std::size_t v = 0;
            const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc() || ptr != s.data() + s.size() || s.empty()) {
                throw InvalidInput("group '" + g.name + "': bad column index '" + std::string(s) + "'");
            }
            return v;
        };
        g.first = parse_index(colon == std::string_view::npos ? range : range.substr(0, colon));
        g.last = colon == std::string_view::npos ? g.first : parse_index(range.substr(colon + 1));
        if (g.first > g.last) throw InvalidInput("group '" + g.name + "': range is reversed");
        if (g.last >= columns) {
            throw InvalidInput("group '" + g.name + "': column " + std::to_string(g.last) + " is out of range (file has " +
                               std::to_string(columns) + " columns)");
        }
        for (const auto& other : out) {
            if (other.name == g.name) throw InvalidInput("duplicate group name '" + g.name + "'");
            const bool same = other.first == g.first && other.last == g.last;
            const bool overlap = g.first <= other.last && other.first <= g.last;
            if (overlap && !same) {
                throw InvalidInput("groups '" + other.name + "' and '" + g.name + "' overlap");
            }
        }
        out.push_back(std::move(g));
    }
    if (out.size() < 2) throw InvalidInput("at least two groups are required");
    return out;
}

inline std::string format_dependogram(const Dependogram& d) {
    std::string out = "pair,first,second,observed,p_value";
    for (double a : d.levels) out += ",critical@" + level_key(a);
    for (double a : d.levels) out += ",reject@" + level_key(a);
    out += "\n";
    for (const auto& e : d.entries) {
        out += d.labels[e.first] + "~" + d.labels[e.second] + "," + d.labels[e.first] + "," + d.labels[e.second] + "," +
               format_double(e.report.observed) + "," + format_double(e.report.p_value);
        for (double c : e.critical) out += "," + format_double(c);
        for (bool r : e.reject) out += r ? ",true" : ",false";
        out += "\n";
    }
    return out;
}

}  // namespace recur
