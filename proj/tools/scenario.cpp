#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "qmg/error.hpp"

namespace qmg::cli {

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ValidationError("scenario " + (where.empty() ? std::string("/") : where) + ": " + what);
}

void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) fail(where, "expected an object");
}

void only_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : j.items()) {
        const bool known = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; });
        if (!known) {
            std::string list;
            for (const char* a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
            fail(where + "/" + key, "unknown field (expected one of: " + list + ")");
        }
    }
}

double number(const json& j, const char* key, const std::string& where, std::optional<double> fallback) {
    const std::string at = where + "/" + key;
    if (!j.contains(key) || j.at(key).is_null()) {
        if (!fallback) fail(at, "missing required number");
        return *fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_number()) fail(at, "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) fail(at, "must be finite");
    return x;
}

long long integer(const json& j, const char* key, const std::string& where, std::optional<long long> fallback) {
    const std::string at = where + "/" + key;
    if (!j.contains(key) || j.at(key).is_null()) {
        if (!fallback) fail(at, "missing required integer");
        return *fallback;
    }
    const auto& v = j.at(key);
    if (!v.is_number_integer()) fail(at, "expected an integer");
    return v.get<long long>();
}

std::string text(const json& j, const char* key, const std::string& where, std::optional<std::string> fallback) {
    const std::string at = where + "/" + key;
    if (!j.contains(key) || j.at(key).is_null()) {
        if (!fallback) fail(at, "missing required string");
        return *fallback;
    }
    if (!j.at(key).is_string()) fail(at, "expected a string");
    return j.at(key).get<std::string>();
}

// Runs a module constructor, prefixing its validation message with the field path.
template <class F>
auto with_path(const std::string& where, F&& f) {
    try {
        return f();
    } catch (const ValidationError& e) {
        fail(where, e.what());
    }
}

Grid1D parse_grid(const json& j, const std::string& where, const Grid1D& fallback, json& resolved) {
    if (!j.is_null()) {
        require_object(j, where);
        only_keys(j, where, {"lo", "hi", "n"});
    }
    const json empty = json::object();
    const json& g = j.is_null() ? empty : j;
    const double lo = number(g, "lo", where, fallback.lo());
    const double hi = number(g, "hi", where, fallback.hi());
    const long long n = integer(g, "n", where, static_cast<long long>(fallback.size()));
    if (n < 0) fail(where + "/n", "must be positive");
    resolved = {{"lo", lo}, {"hi", hi}, {"n", n}};
    return with_path(where, [&] { return Grid1D(lo, hi, static_cast<std::size_t>(n)); });
}

MarketSpec parse_market(const json& j, json& resolved) {
    const std::string where = "/market";
    require_object(j, where);
    only_keys(j, where, {"h_E", "mode", "grid", "risk", "tol"});
    MarketSpec market;
    market.h_E = number(j, "h_E", where, 2.0 * pi);
    if (!(market.h_E > 0.0)) fail(where + "/h_E", "must be positive");

    const std::string mode = text(j, "mode", where, "capital");
    if (mode == "capital") {
        market.mode = FlowMode::capital;
    } else if (mode == "probability") {
        market.mode = FlowMode::probability;
    } else {
        fail(where + "/mode", "unknown mode '" + mode + "' (expected capital or probability)");
    }

    json grid_resolved;
    market.grid = parse_grid(j.value("grid", json()), where + "/grid", default_grid(), grid_resolved);

    const json risk = j.value("risk", json::object());
    require_object(risk, where + "/risk");
    only_keys(risk, where + "/risk", {"m", "theta", "theta_nc"});
    market.risk.m = number(risk, "m", where + "/risk", 1.0);
    market.risk.theta = number(risk, "theta", where + "/risk", 2.0 * pi);
    market.risk.theta_nc = number(risk, "theta_nc", where + "/risk", 0.0);
    market.risk.h_E = market.h_E;
    with_path(where + "/risk", [&] { market.risk.validate(); return 0; });

    market.tol = number(j, "tol", where, default_clearing_tol);
    if (!(market.tol > 0.0)) fail(where + "/tol", "must be positive");

    resolved = {{"h_E", market.h_E},
                {"mode", mode},
                {"grid", grid_resolved},
                {"risk", {{"m", market.risk.m}, {"theta", market.risk.theta}, {"theta_nc", market.risk.theta_nc}}},
                {"tol", market.tol}};
    return market;
}

// Strategy spec with defaults filled in.
json resolve_strategy(const json& spec, const std::string& where) {
    require_object(spec, where);
    const std::string kind = text(spec, "kind", where, std::nullopt);
    if (kind == "gaussian") {
        only_keys(spec, where, {"kind", "q0", "sigma_q"});
        return {{"kind", kind}, {"q0", number(spec, "q0", where, 0.0)}, {"sigma_q", number(spec, "sigma_q", where, 1.0)}};
    }
    if (kind == "coherent") {
        only_keys(spec, where, {"kind", "r", "eta", "p0", "q0"});
        return {{"kind", kind},
                {"r", number(spec, "r", where, 0.0)},
                {"eta", number(spec, "eta", where, 1.0)},
                {"p0", number(spec, "p0", where, 0.0)},
                {"q0", number(spec, "q0", where, 0.0)}};
    }
    if (kind == "oscillator") {
        only_keys(spec, where, {"kind", "n", "p0", "q0"});
        return {{"kind", kind},
                {"n", integer(spec, "n", where, std::nullopt)},
                {"p0", number(spec, "p0", where, 0.0)},
                {"q0", number(spec, "q0", where, 0.0)}};
    }
    if (kind == "demand_eigenstate") {
        only_keys(spec, where, {"kind", "a"});
        return {{"kind", kind}, {"a", number(spec, "a", where, std::nullopt)}};
    }
    if (kind == "supply_eigenstate") {
        only_keys(spec, where, {"kind", "b"});
        return {{"kind", kind}, {"b", number(spec, "b", where, std::nullopt)}};
    }
    std::string list;
    for (const auto& k : supported_strategy_kinds()) list += (list.empty() ? "" : ", ") + k;
    fail(where + "/kind", "unknown strategy kind '" + kind + "' (supported: " + list + ")");
}

ZenoSpec parse_zeno(const json& j, const std::vector<TraderSpec>& traders, json& resolved) {
    const std::string where = "/zeno";
    require_object(j, where);
    only_keys(j, where, {"traders", "center", "width", "repetitions"});
    ZenoSpec zeno;
    json listed = "all";
    if (j.contains("traders") && !(j.at("traders").is_string() && j.at("traders") == "all")) {
        const auto& t = j.at("traders");
        if (!t.is_array()) fail(where + "/traders", "expected \"all\" or a list of trader ids");
        for (std::size_t i = 0; i < t.size(); ++i) {
            const std::string at = where + "/traders/" + std::to_string(i);
            if (!t[i].is_number_integer()) fail(at, "expected a trader id");
            const int id = t[i].get<int>();
            if (std::none_of(traders.begin(), traders.end(), [&](const TraderSpec& s) { return s.id == id; }))
                fail(at, "unknown trader id " + std::to_string(id));
            zeno.traders.push_back(id);
        }
        std::sort(zeno.traders.begin(), zeno.traders.end());
        zeno.traders.erase(std::unique(zeno.traders.begin(), zeno.traders.end()), zeno.traders.end());
        listed = zeno.traders;
    }
    zeno.center = number(j, "center", where, 0.0);
    zeno.width = number(j, "width", where, 0.05);
    if (!(zeno.width > 0.0)) fail(where + "/width", "must be positive");
    const long long reps = integer(j, "repetitions", where, 1);
    if (reps < 1 || reps > 1000) fail(where + "/repetitions", "must lie in [1, 1000]");
    zeno.repetitions = static_cast<int>(reps);
    for (const auto& t : traders) {
        if (zeno.applies_to(t.id) && t.strategy.is_eigenstate())
            fail(where, "trader " + std::to_string(t.id) + " holds a price eigenstate; demand collapse needs a grid strategy");
    }
    resolved = {{"traders", listed}, {"center", zeno.center}, {"width", zeno.width}, {"repetitions", reps}};
    return zeno;
}

ReportSpec parse_report(const json& j, const MarketSpec& market, const std::vector<TraderSpec>& traders,
                        json& resolved) {
    const std::string where = "/report";
    ReportSpec report;
    const json empty = json::object();
    const json& r = j.is_null() ? empty : j;
    require_object(r, where);
    only_keys(r, where, {"source", "wigner", "phase_grid", "fixed_point", "p_slice", "q_slice"});
    resolved = json::object();

    if (r.contains("source") && !r.at("source").is_null()) {
        const std::string at = where + "/source";
        const auto& s = r.at("source");
        require_object(s, at);
        const std::string kind = text(s, "kind", at, std::nullopt);
        SourceSpec source;
        if (kind == "thermal") {
            only_keys(s, at, {"kind", "beta", "n_max"});
            source.kind = SourceKind::thermal;
            source.beta = number(s, "beta", at, std::nullopt);
            if (!(source.beta > 0.0)) fail(at + "/beta", "must be positive (beta = 0 is not normalisable)");
            json res = {{"kind", kind}, {"beta", source.beta}};
            if (s.contains("n_max")) {
                const long long n = integer(s, "n_max", at, std::nullopt);
                if (n < 0 || n > max_laguerre_order) fail(at + "/n_max", "out of range");
                source.n_max = static_cast<int>(n);
                res["n_max"] = n;
            } else {
                res["n_max"] = nullptr;
            }
            resolved["source"] = res;
        } else if (kind == "strategy") {
            only_keys(s, at, {"kind", "strategy"});
            if (!s.contains("strategy")) fail(at + "/strategy", "missing strategy spec");
            source.kind = SourceKind::strategy;
            const json spec = resolve_strategy(s.at("strategy"), at + "/strategy");
            source.strategy = build_strategy(spec, market, at + "/strategy");
            if (source.strategy->is_eigenstate()) fail(at + "/strategy", "price eigenstates have no phase-space field");
            resolved["source"] = {{"kind", kind}, {"strategy", spec}};
        } else if (kind == "trader") {
            only_keys(s, at, {"kind", "id"});
            source.kind = SourceKind::trader;
            source.trader_id = static_cast<int>(integer(s, "id", at, std::nullopt));
            auto it = std::find_if(traders.begin(), traders.end(),
                                   [&](const TraderSpec& t) { return t.id == source.trader_id; });
            if (it == traders.end()) fail(at + "/id", "unknown trader id " + std::to_string(source.trader_id));
            if (it->strategy.is_eigenstate()) fail(at + "/id", "price eigenstates have no phase-space field");
            resolved["source"] = {{"kind", kind}, {"id", source.trader_id}};
        } else {
            fail(at + "/kind", "unknown report source '" + kind + "' (supported: thermal, strategy, trader)");
        }
        report.source = source;
    } else {
        resolved["source"] = nullptr;
    }

    const json w = r.value("wigner", json::object());
    require_object(w, where + "/wigner");
    only_keys(w, where + "/wigner", {"n_q", "n_p"});
    const long long n_q = integer(w, "n_q", where + "/wigner", 512);
    const long long n_p = integer(w, "n_p", where + "/wigner", 512);
    if (n_q < 8 || n_p < 8 || !is_power_of_two(static_cast<std::size_t>(n_p)))
        fail(where + "/wigner", "n_q >= 8 and n_p a power of two >= 8 required");
    report.wigner = {static_cast<std::size_t>(n_q), static_cast<std::size_t>(n_p)};
    resolved["wigner"] = {{"n_q", n_q}, {"n_p", n_p}};

    json grid_resolved;
    report.phase_grid = parse_grid(r.value("phase_grid", json()), where + "/phase_grid", default_phase_grid(),
                                   grid_resolved);
    resolved["phase_grid"] = grid_resolved;

    const json f = r.value("fixed_point", json::object());
    require_object(f, where + "/fixed_point");
    only_keys(f, where + "/fixed_point", {"sigma", "a_lo", "a_hi", "tol"});
    report.intensity.sigma = number(f, "sigma", where + "/fixed_point", 1.0);
    report.intensity.a_lo = number(f, "a_lo", where + "/fixed_point", 0.0);
    report.intensity.a_hi = number(f, "a_hi", where + "/fixed_point", 3.0 * report.intensity.sigma);
    report.fixed_point_tol = number(f, "tol", where + "/fixed_point", 1e-10);
    if (!(report.fixed_point_tol > 0.0)) fail(where + "/fixed_point/tol", "must be positive");
    with_path(where + "/fixed_point", [&] { report.intensity.validate(); return 0; });
    resolved["fixed_point"] = {{"sigma", report.intensity.sigma},
                               {"a_lo", report.intensity.a_lo},
                               {"a_hi", report.intensity.a_hi},
                               {"tol", report.fixed_point_tol}};

    if (r.contains("p_slice") && !r.at("p_slice").is_null()) report.p_slice = number(r, "p_slice", where, std::nullopt);
    if (r.contains("q_slice") && !r.at("q_slice").is_null()) report.q_slice = number(r, "q_slice", where, std::nullopt);
    resolved["p_slice"] = report.p_slice ? json(*report.p_slice) : json(nullptr);
    resolved["q_slice"] = report.q_slice ? json(*report.q_slice) : json(nullptr);
    return report;
}

} // namespace

bool ZenoSpec::applies_to(int trader_id) const {
    return traders.empty() || std::binary_search(traders.begin(), traders.end(), trader_id);
}

std::vector<std::string> supported_strategy_kinds() {
    return {"gaussian", "coherent", "oscillator", "demand_eigenstate", "supply_eigenstate"};
}

Strategy build_strategy(const json& spec, const MarketSpec& market, const std::string& where) {
    const json s = resolve_strategy(spec, where);
    const std::string kind = s.at("kind");
    return with_path(where, [&] {
        if (kind == "gaussian")
            return make_gaussian(s.at("q0"), s.at("sigma_q"), market.h_E, market.grid);
        if (kind == "coherent")
            return make_coherent_correlated(s.at("r"), s.at("eta"), s.at("p0"), s.at("q0"), market.h_E, market.grid);
        if (kind == "oscillator") {
            const long long n = s.at("n");
            if (n < 0 || n > max_hermite_order) throw ValidationError("oscillator level out of range");
            return make_oscillator_eigenstate(static_cast<int>(n), market.risk, s.at("p0"), s.at("q0"), market.grid);
        }
        if (kind == "demand_eigenstate")
            return Strategy::price_eigenstate(Representation::demand, s.at("a"), market.h_E);
        return Strategy::price_eigenstate(Representation::supply, s.at("b"), market.h_E);
    });
}

Scenario parse_scenario(const std::string& source) {
    json doc;
    try {
        doc = json::parse(source);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("scenario: ") + e.what());
    }
    require_object(doc, "");
    only_keys(doc, "", {"market", "traders", "rounds", "zeno", "report"});

    Scenario sc;
    if (!doc.contains("traders")) fail("/traders", "missing");
    json market_resolved;
    sc.market = parse_market(doc.value("market", json::object()), market_resolved);

    const auto& traders = doc.at("traders");
    if (!traders.is_array() || traders.empty()) fail("/traders", "expected a non-empty list");
    if (traders.size() > max_exhaustive_traders)
        fail("/traders", "at most " + std::to_string(max_exhaustive_traders) + " traders are supported");
    json traders_resolved = json::array();
    std::set<int> seen;
    for (std::size_t i = 0; i < traders.size(); ++i) {
        const std::string where = "/traders/" + std::to_string(i);
        const auto& t = traders[i];
        require_object(t, where);
        only_keys(t, where, {"id", "strategy", "s", "d"});
        const long long id_raw = integer(t, "id", where, std::nullopt);
        if (id_raw < 0 || id_raw > 1'000'000'000) fail(where + "/id", "out of range");
        const int id = static_cast<int>(id_raw);
        if (!seen.insert(id).second) fail(where + "/id", "duplicate trader id " + std::to_string(id));
        const double s = number(t, "s", where, 0.0);
        const double d = number(t, "d", where, 0.0);
        if (!t.contains("strategy")) fail(where + "/strategy", "missing strategy spec");
        json strategy_spec = resolve_strategy(t.at("strategy"), where + "/strategy");
        Strategy strategy = build_strategy(strategy_spec, sc.market, where + "/strategy");
        with_path(where, [&] {
            TraderDeclaration{id, strategy, s, d}.validate();
            return 0;
        });
        traders_resolved.push_back({{"id", id}, {"strategy", strategy_spec}, {"s", s}, {"d", d}});
        sc.traders.push_back(TraderSpec{id, std::move(strategy_spec), std::move(strategy), s, d});
    }

    const long long rounds = integer(doc, "rounds", "", 1);
    if (rounds < 1 || rounds > 100000) fail("/rounds", "must lie in [1, 100000]");
    sc.rounds = static_cast<int>(rounds);

    json zeno_resolved = nullptr;
    if (doc.contains("zeno") && !doc.at("zeno").is_null()) sc.zeno = parse_zeno(doc.at("zeno"), sc.traders, zeno_resolved);

    json report_resolved;
    sc.report = parse_report(doc.value("report", json()), sc.market, sc.traders, report_resolved);

    sc.resolved = {{"market", market_resolved},
                   {"traders", traders_resolved},
                   {"rounds", rounds},
                   {"zeno", zeno_resolved},
                   {"report", report_resolved}};
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read scenario file " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw IoError("error reading scenario file " + path.string());
    return parse_scenario(buffer.str());
}

} // namespace qmg::cli
