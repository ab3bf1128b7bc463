#include "p2plearn/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

namespace p2plearn {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json parse(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // Convert the byte offset into a line:column position.
        std::size_t line = 1;
        std::size_t column = 1;
        const std::size_t end = std::min(e.byte == 0 ? 0 : e.byte - 1, text.size());
        for (std::size_t i = 0; i < end; ++i) {
            if (text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw Error(ErrorCode::ParseError,
                    "malformed JSON at line " + std::to_string(line) + ", column " + std::to_string(column) + ": " +
                        e.what());
    }
}

const json& field(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object()) throw Error(ErrorCode::SchemaError, where + ": expected an object");
    const auto it = obj.find(key);
    if (it == obj.end()) throw Error(ErrorCode::SchemaError, where + ": missing field '" + key + "'");
    return *it;
}

double number(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_number()) throw Error(ErrorCode::SchemaError, where + ": field '" + key + "' must be a number");
    return v.get<double>();
}

std::uint64_t unsigned_number(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_number_unsigned()) {
        throw Error(ErrorCode::SchemaError, where + ": field '" + key + "' must be a non-negative integer");
    }
    return v.get<std::uint64_t>();
}

std::string text(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_string()) throw Error(ErrorCode::SchemaError, where + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

bool flag(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_boolean()) throw Error(ErrorCode::SchemaError, where + ": field '" + key + "' must be a boolean");
    return v.get<bool>();
}

const json& array(const json& obj, const char* key, const std::string& where) {
    const auto& v = field(obj, key, where);
    if (!v.is_array()) throw Error(ErrorCode::SchemaError, where + ": field '" + key + "' must be an array");
    return v;
}

void check_version(const json& doc, const std::string& what) {
    const auto version = unsigned_number(doc, "format_version", what);
    if (version != static_cast<std::uint64_t>(kFormatVersion)) {
        throw Error(ErrorCode::SchemaError, what + ": unsupported format_version " + std::to_string(version));
    }
}

Role parse_role(const json& obj, const std::string& where) {
    const auto r = text(obj, "role", where);
    if (r == "seller") return Role::Seller;
    if (r == "buyer") return Role::Buyer;
    throw Error(ErrorCode::SchemaError, where + ": role must be \"seller\" or \"buyer\", got \"" + r + "\"");
}

json topology_json(const Topology& t) {
    if (const auto* r = std::get_if<RandomTopology>(&t)) {
        return {{"kind", "random"}, {"degree", r->degree}, {"seed", r->seed}};
    }
    return {{"kind", "complete"}};
}

Topology parse_topology(const json& doc) {
    const auto& t = field(doc, "topology", "scenario");
    const auto kind = text(t, "kind", "topology");
    if (kind == "complete") return CompleteTopology{};
    if (kind == "random") return RandomTopology{number(t, "degree", "topology"), unsigned_number(t, "seed", "topology")};
    throw Error(ErrorCode::SchemaError, "topology: unknown kind \"" + kind + "\"");
}

// JSON has no infinity; an unbounded upper end is written as null.
json bound_json(const Bound& b) {
    return {{"lo", b.lo},
            {"hi", std::isinf(b.hi) ? json(nullptr) : json(b.hi)},
            {"lo_open", b.lo_open},
            {"hi_open", b.hi_open}};
}

Bound parse_bound(const json& obj, const std::string& where) {
    Bound b;
    b.lo = number(obj, "lo", where);
    const auto& hi = field(obj, "hi", where);
    if (hi.is_null()) {
        b.hi = std::numeric_limits<double>::infinity();
    } else if (hi.is_number()) {
        b.hi = hi.get<double>();
    } else {
        throw Error(ErrorCode::SchemaError, where + ": field 'hi' must be a number or null");
    }
    b.lo_open = flag(obj, "lo_open", where);
    b.hi_open = flag(obj, "hi_open", where);
    return b;
}

json trace_summary(const ConsensusTrace& t) {
    return {{"rounds_executed", t.rounds_executed()},
            {"converged_at", t.converged_at ? json(*t.converged_at) : json(nullptr)},
            {"tolerance", t.tolerance},
            {"masked", t.masked}};
}

// Restores the summary only; the per-round states are not part of the report.
ConsensusTrace parse_trace_summary(const json& obj, const std::string& where) {
    ConsensusTrace t;
    const auto rounds = unsigned_number(obj, "rounds_executed", where);
    t.rounds.resize(rounds + 1);
    const auto& c = field(obj, "converged_at", where);
    if (!c.is_null()) t.converged_at = c.get<int>();
    t.tolerance = number(obj, "tolerance", where);
    t.masked = flag(obj, "masked", where);
    return t;
}

std::vector<double> numbers(const json& arr, const std::string& where) {
    std::vector<double> out;
    out.reserve(arr.size());
    for (const auto& v : arr) {
        if (!v.is_number()) throw Error(ErrorCode::SchemaError, where + ": expected numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

SelectionRule parse_rule(const std::string& s) {
    for (auto r : {SelectionRule::MultiSided, SelectionRule::SingleBuyer, SelectionRule::SingleSeller}) {
        if (to_string(r) == s) return r;
    }
    throw Error(ErrorCode::SchemaError, "report: unknown selection rule \"" + s + "\"");
}

ConstraintTag parse_tag(const std::string& s) {
    for (auto t : {ConstraintTag::SignViolation, ConstraintTag::UpperBound, ConstraintTag::LowerBound}) {
        if (to_string(t) == s) return t;
    }
    throw Error(ErrorCode::SchemaError, "report: unknown violation tag \"" + s + "\"");
}

}  // namespace

std::string scenario_to_json(const MarketScenario& scenario) {
    json prosumers = json::array();
    for (const auto& p : scenario.prosumers) {
        prosumers.push_back({{"id", p.id},
                             {"role", to_string(p.role)},
                             {"bound_kw", p.bound_kw},
                             {"price_lo", p.price.lower},
                             {"price_hi", p.price.upper}});
    }
    json doc = {{"format_version", kFormatVersion},
                {"meta", {{"n", scenario.size()}, {"label", scenario.meta.label}, {"currency", scenario.meta.currency}}},
                {"prosumers", std::move(prosumers)},
                {"topology", topology_json(scenario.topology)}};
    return doc.dump(2) + "\n";
}

MarketScenario scenario_from_json(const std::string& source) {
    const json doc = parse(source);
    check_version(doc, "scenario");
    MarketScenario s;
    const auto& meta = field(doc, "meta", "scenario");
    s.meta.label = text(meta, "label", "meta");
    s.meta.currency = text(meta, "currency", "meta");
    const auto n = unsigned_number(meta, "n", "meta");

    const auto& prosumers = array(doc, "prosumers", "scenario");
    for (std::size_t i = 0; i < prosumers.size(); ++i) {
        const auto& p = prosumers[i];
        std::string who = "prosumer at index " + std::to_string(i);
        ProsumerSpec spec;
        spec.id = unsigned_number(p, "id", who);
        who = "prosumer " + std::to_string(spec.id);
        spec.role = parse_role(p, who);
        spec.bound_kw = number(p, "bound_kw", who);
        spec.price = {number(p, "price_lo", who), number(p, "price_hi", who)};
        s.prosumers.push_back(spec);
    }
    if (n != s.prosumers.size()) {
        throw Error(ErrorCode::SchemaError, "meta: n = " + std::to_string(n) + " but " +
                                                std::to_string(s.prosumers.size()) + " prosumers listed");
    }
    s.topology = parse_topology(doc);
    s.validate();
    return s;
}

MarketScenario load_scenario(const fs::path& path) { return scenario_from_json(read_file(path)); }

void save_scenario(const fs::path& path, const MarketScenario& scenario) {
    write_file_atomic(path, scenario_to_json(scenario));
}

std::string report_to_json(const PipelineReport& r) {
    json prosumers = json::array();
    for (std::size_t i = 0; i < r.roles.size(); ++i) {
        json p = {{"id", i},
                  {"role", to_string(r.roles[i])},
                  {"p_buy_min", r.bounds[i].p_buy_min},
                  {"p_sell_max", r.bounds[i].p_sell_max}};
        if (i < r.intervals.size()) p["intervals"] = {{"b", bound_json(r.intervals[i].b)}, {"a", bound_json(r.intervals[i].a)}};
        if (i < r.params.size()) p["params"] = {{"a", r.params[i].a}, {"b", r.params[i].b}};
        if (i < r.clearing.trades.size()) p["trade_kw"] = r.clearing.trades[i];
        prosumers.push_back(std::move(p));
    }
    json violations = json::array();
    for (const auto& v : r.clearing.violations) violations.push_back({{"id", v.id}, {"tag", to_string(v.tag)}});

    json doc = {{"format_version", kFormatVersion},
                {"label", r.label},
                {"seed", r.seed},
                {"negotiated_interval", {{"lower", r.negotiated.lower}, {"upper", r.negotiated.upper}}},
                {"sum_sell_max", r.sum_sell_max},
                {"sum_buy_min", r.sum_buy_min},
                {"xi", r.xi},
                {"k_min", r.k_min},
                {"k", {{"k", r.k.k}, {"k_s", r.k.k_s}, {"k_b", r.k.k_b}}},
                {"selection_rule", to_string(r.rule)},
                {"prosumers", std::move(prosumers)},
                {"masked_limit", r.masked_limit},
                {"lambda_star", r.clearing.lambda_star},
                {"analytic_price", r.analytic_price},
                {"masked_price_error", r.masked_price_error},
                {"feasible", r.clearing.feasible},
                {"violations", std::move(violations)},
                {"negotiation_consensus", trace_summary(r.negotiation_trace)},
                {"clearing_consensus", trace_summary(r.clearing_trace)}};
    return doc.dump(2) + "\n";
}

PipelineReport report_from_json(const std::string& source) {
    const json doc = parse(source);
    check_version(doc, "report");
    PipelineReport r;
    r.label = text(doc, "label", "report");
    r.seed = unsigned_number(doc, "seed", "report");
    const auto& band = field(doc, "negotiated_interval", "report");
    r.negotiated = {number(band, "lower", "negotiated_interval"), number(band, "upper", "negotiated_interval")};
    r.sum_sell_max = number(doc, "sum_sell_max", "report");
    r.sum_buy_min = number(doc, "sum_buy_min", "report");
    r.xi = number(doc, "xi", "report");
    r.k_min = number(doc, "k_min", "report");
    const auto& k = field(doc, "k", "report");
    r.k = {number(k, "k", "k"), number(k, "k_s", "k"), number(k, "k_b", "k")};
    r.rule = parse_rule(text(doc, "selection_rule", "report"));

    const auto& prosumers = array(doc, "prosumers", "report");
    for (std::size_t i = 0; i < prosumers.size(); ++i) {
        const auto& p = prosumers[i];
        const std::string who = "prosumer " + std::to_string(i);
        if (unsigned_number(p, "id", who) != i) throw Error(ErrorCode::SchemaError, who + ": ids must be dense and ordered");
        r.roles.push_back(parse_role(p, who));
        r.bounds.push_back({number(p, "p_buy_min", who), number(p, "p_sell_max", who)});
        const auto& iv = field(p, "intervals", who);
        r.intervals.push_back({parse_bound(field(iv, "b", who), who + " b-interval"),
                               parse_bound(field(iv, "a", who), who + " a-interval")});
        const auto& params = field(p, "params", who);
        r.params.push_back({number(params, "a", who), number(params, "b", who)});
        r.clearing.trades.push_back(number(p, "trade_kw", who));
    }
    r.masked_limit = numbers(array(doc, "masked_limit", "report"), "masked_limit");
    r.clearing.lambda_star = number(doc, "lambda_star", "report");
    r.analytic_price = number(doc, "analytic_price", "report");
    r.masked_price_error = number(doc, "masked_price_error", "report");
    r.clearing.feasible = flag(doc, "feasible", "report");
    for (const auto& v : array(doc, "violations", "report")) {
        r.clearing.violations.push_back({unsigned_number(v, "id", "violation"), parse_tag(text(v, "tag", "violation"))});
    }
    r.negotiation_trace = parse_trace_summary(field(doc, "negotiation_consensus", "report"), "negotiation_consensus");
    r.clearing_trace = parse_trace_summary(field(doc, "clearing_consensus", "report"), "clearing_consensus");
    return r;
}

PipelineReport load_report(const fs::path& path) { return report_from_json(read_file(path)); }

void save_report(const fs::path& path, const PipelineReport& report) {
    write_file_atomic(path, report_to_json(report));
}

std::vector<CostParams> load_params(const fs::path& path) {
    const json doc = parse(read_file(path));
    check_version(doc, "params");
    const auto& list = array(doc, "params", "params");
    std::vector<CostParams> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        const std::string who = "params entry " + std::to_string(i);
        if (unsigned_number(list[i], "id", who) != i) {
            throw Error(ErrorCode::SchemaError, who + ": ids must be dense and ordered");
        }
        out.push_back({number(list[i], "a", who), number(list[i], "b", who)});
    }
    return out;
}

void save_params(const fs::path& path, const std::vector<CostParams>& params) {
    json list = json::array();
    for (std::size_t i = 0; i < params.size(); ++i) list.push_back({{"id", i}, {"a", params[i].a}, {"b", params[i].b}});
    const json doc = {{"format_version", kFormatVersion}, {"params", std::move(list)}};
    write_file_atomic(path, doc.dump(2) + "\n");
}

void save_trace(const fs::path& path, const ConsensusTrace& trace) {
    std::ostringstream out;
    write_trace_csv(out, trace);
    write_file_atomic(path, out.str());
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::IoError, "cannot open " + tmp.string() + " for writing");
        out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
        out.flush();
        if (!out) throw Error(ErrorCode::IoError, "write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error(ErrorCode::IoError, "cannot move " + tmp.string() + " to " + path.string());
    }
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace p2plearn
