#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "cli.hpp"
#include "qmg/error.hpp"

namespace qmg::cli {

namespace {

constexpr const char* tool_version = "0.1.0";

// Re-throws a module error with the round number prepended, keeping its type.
template <class F>
auto in_round(int round, F&& f) {
    const std::string where = "round " + std::to_string(round) + ": ";
    try {
        return f();
    } catch (const ValidationError& e) {
        throw ValidationError(where + e.what());
    } catch (const TruncationError& e) {
        throw TruncationError(where + e.what());
    } catch (const BracketingError& e) {
        throw BracketingError(where + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(where + e.what());
    }
}

double settle_balance(double balance, double scale, int trader_id, const char* what) {
    if (balance < -1e-9 * std::max(1.0, scale)) {
        std::ostringstream msg;
        msg << "trader " << trader_id << " " << what << " balance driven negative (" << format_double(balance) << ")";
        throw NumericalError(msg.str());
    }
    return std::max(balance, 0.0);
}

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir))
        throw IoError("cannot create output directory " + dir.string() + (ec ? ": " + ec.message() : ""));
}

template <class Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    writer(out);
    out.close();
    if (!out) throw IoError("error writing " + path.string());
}

void write_curve(std::ostream& out, const Curve& curve) {
    out << "ln_c,F\n";
    for (std::size_t i = 0; i < curve.ln_c.size(); ++i)
        out << format_double(curve.ln_c[i]) << ',' << format_double(curve.values[i]) << '\n';
}

json manifest_base(const Scenario& scenario, const char* command) {
    return {{"tool", "qmg"}, {"version", tool_version}, {"command", command}, {"scenario", scenario.resolved}};
}

void write_manifest(const std::filesystem::path& dir, const json& manifest) {
    write_file(dir / "manifest.json", [&](std::ostream& out) { out << manifest.dump(2) << '\n'; });
}

const TraderSpec& trader_by_id(const Scenario& scenario, int id) {
    for (const auto& t : scenario.traders)
        if (t.id == id) return t;
    throw ValidationError("unknown trader id " + std::to_string(id));
}

struct SourceField {
    WignerField field;
    json derived;
};

SourceField source_field(const Scenario& scenario) {
    const auto& report = scenario.report;
    if (!report.source) throw ValidationError("scenario /report/source: required for this report");
    const auto& src = *report.source;
    switch (src.kind) {
    case SourceKind::thermal: {
        GibbsSpec spec;
        spec.beta = src.beta;
        spec.params = scenario.market.risk;
        spec.n_max = src.n_max ? *src.n_max : required_n_max(src.beta, spec.params);
        return {thermal_series(spec, report.phase_grid, report.phase_grid),
                {{"n_max", spec.n_max}, {"tail_weight", spec.tail_weight()}}};
    }
    case SourceKind::strategy:
        return {wigner_of_pure(*src.strategy, report.wigner), json::object()};
    case SourceKind::trader:
        return {wigner_of_pure(trader_by_id(scenario, src.trader_id).strategy, report.wigner), json::object()};
    }
    throw ValidationError("unknown report source");
}

} // namespace

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

RunResult run(const Scenario& scenario, std::optional<int> last_round) {
    const int rounds = last_round.value_or(scenario.rounds);
    if (rounds < 1 || rounds > scenario.rounds)
        throw ValidationError("round " + std::to_string(rounds) + " outside 1.." + std::to_string(scenario.rounds));

    std::vector<TraderSpec> traders = scenario.traders;
    std::sort(traders.begin(), traders.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    std::vector<Strategy> strategies;
    std::vector<double> g, money;
    for (const auto& t : traders) {
        strategies.push_back(t.strategy);
        g.push_back(t.s);
        money.push_back(t.d);
    }

    RunResult result;
    for (int round = 1; round <= rounds; ++round) {
        if (scenario.zeno) {
            const auto& z = *scenario.zeno;
            in_round(round, [&] {
                for (std::size_t i = 0; i < traders.size(); ++i) {
                    if (!z.applies_to(traders[i].id)) continue;
                    for (int k = 0; k < z.repetitions; ++k) strategies[i] = collapse_demand(strategies[i], z.center, z.width);
                }
                return 0;
            });
        }

        std::vector<TraderDeclaration> decls;
        for (std::size_t i = 0; i < traders.size(); ++i) {
            if (g[i] > 0.0 || money[i] > 0.0) decls.push_back({traders[i].id, strategies[i], g[i], money[i]});
        }
        ClearingOutcome outcome =
            in_round(round, [&] { return best_division(decls, scenario.market.mode, scenario.market.tol); });
        if (!outcome.traded && scenario.zeno && outcome.reason == NoTradeReason::no_crossing)
            outcome.reason = NoTradeReason::zeno_collapse;

        std::map<int, TraderDelta> by_id;
        for (const auto& d : outcome.deltas) by_id[d.trader_id] = d;

        for (std::size_t i = 0; i < traders.size(); ++i) {
            const int id = traders[i].id;
            const auto it = by_id.find(id);
            const TraderDelta delta = it == by_id.end() ? TraderDelta{id, Side::buyer, 0.0, 0.0, 0.0} : it->second;
            if (outcome.traded && scenario.market.mode == FlowMode::capital) {
                const double scale = std::max(outcome.turnover, 1.0);
                g[i] = in_round(round, [&] { return settle_balance(g[i] + delta.delta_g, scale, id, "asset"); });
                money[i] = in_round(round, [&] { return settle_balance(money[i] + delta.delta_money, scale, id, "money"); });
            }
            LedgerEntry e;
            e.round = round;
            e.division = outcome.division.mask;
            e.ln_c_star = outcome.traded ? outcome.ln_c_star : std::nan("");
            e.turnover = outcome.traded ? outcome.turnover : 0.0;
            e.trader_id = id;
            e.delta_g = delta.delta_g;
            e.delta_money = delta.delta_money;
            e.balance_g = g[i];
            e.balance_money = money[i];
            e.residual = outcome.traded ? outcome.residual : std::nan("");
            result.ledger.push_back(e);
        }
        result.rounds.push_back({round, std::move(outcome)});
    }
    return result;
}

void write_ledger_csv(std::ostream& out, const std::vector<LedgerEntry>& ledger) {
    out << "round,division,ln_c_star,turnover,trader_id,delta_g,delta_money,balance_g,balance_money,residual\n";
    for (const auto& e : ledger) {
        out << e.round << ',' << e.division << ',' << format_double(e.ln_c_star) << ',' << format_double(e.turnover)
            << ',' << e.trader_id << ',' << format_double(e.delta_g) << ',' << format_double(e.delta_money) << ','
            << format_double(e.balance_g) << ',' << format_double(e.balance_money) << ','
            << format_double(e.residual) << '\n';
    }
}

void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rounds) {
    const auto ids = [](const std::vector<int>& v) {
        std::string s;
        for (int id : v) s += (s.empty() ? "" : " ") + std::to_string(id);
        return s;
    };
    out << "round,division,traded,reason,ln_c_star,turnover,residual,buyers,sellers\n";
    for (const auto& r : rounds) {
        const auto& o = r.outcome;
        out << r.round << ',' << o.division.mask << ',' << (o.traded ? 1 : 0) << ',' << to_string(o.reason) << ','
            << format_double(o.traded ? o.ln_c_star : std::nan("")) << ',' << format_double(o.traded ? o.turnover : 0.0)
            << ',' << format_double(o.traded ? o.residual : std::nan("")) << ',' << ids(o.division.buyers) << ','
            << ids(o.division.sellers) << '\n';
    }
}

ReportKind parse_report_kind(const std::string& what) {
    if (what == "curves") return ReportKind::curves;
    if (what == "wigner") return ReportKind::wigner;
    if (what == "fixed_point") return ReportKind::fixed_point;
    throw ValidationError("unknown report '" + what + "' (expected curves, wigner or fixed_point)");
}

std::string_view to_string(ReportKind kind) {
    switch (kind) {
    case ReportKind::curves: return "curves";
    case ReportKind::wigner: return "wigner";
    case ReportKind::fixed_point: return "fixed_point";
    }
    return "?";
}

void write_run(const Scenario& scenario, const std::filesystem::path& out_dir) {
    const RunResult result = run(scenario);
    ensure_dir(out_dir);
    write_file(out_dir / "ledger.csv", [&](std::ostream& out) { write_ledger_csv(out, result.ledger); });
    write_file(out_dir / "rounds.csv", [&](std::ostream& out) { write_rounds_csv(out, result.rounds); });
    json manifest = manifest_base(scenario, "run");
    manifest["outputs"] = {"ledger.csv", "rounds.csv"};
    write_manifest(out_dir, manifest);
}

void write_report(const Scenario& scenario, ReportKind what, const std::filesystem::path& out_dir) {
    json manifest = manifest_base(scenario, "report");
    manifest["what"] = std::string(to_string(what));

    switch (what) {
    case ReportKind::fixed_point: {
        const auto fp = fixed_point(scenario.report.intensity, scenario.report.fixed_point_tol);
        ensure_dir(out_dir);
        write_file(out_dir / "fixed_point.csv", [&](std::ostream& out) {
            out << "sigma,a_star,rho_star,fixed_point_residual,stationarity_residual\n"
                << format_double(scenario.report.intensity.sigma) << ',' << format_double(fp.a_star) << ','
                << format_double(fp.rho_star) << ',' << format_double(fp.rho_star - fp.a_star) << ','
                << format_double(fp.stationarity_residual) << '\n';
        });
        manifest["outputs"] = {"fixed_point.csv"};
        break;
    }
    case ReportKind::curves: {
        const auto src = source_field(scenario);
        const double p_slice = scenario.report.p_slice.value_or(field_mean_p(src.field));
        const double q_slice = scenario.report.q_slice.value_or(field_mean_q(src.field));
        const Curve fd = demand_curve(src.field, p_slice);
        const Curve fs = supply_curve(src.field, q_slice);
        ensure_dir(out_dir);
        write_file(out_dir / "demand_curve.csv", [&](std::ostream& out) { write_curve(out, fd); });
        write_file(out_dir / "supply_curve.csv", [&](std::ostream& out) { write_curve(out, fs); });
        manifest["derived"] = src.derived;
        manifest["derived"]["p_slice"] = p_slice;
        manifest["derived"]["q_slice"] = q_slice;
        manifest["outputs"] = {"demand_curve.csv", "supply_curve.csv"};
        break;
    }
    case ReportKind::wigner: {
        const auto src = source_field(scenario);
        const auto& f = src.field;
        const GiffenReport giffen = is_giffen(f);
        ensure_dir(out_dir);
        write_file(out_dir / "wigner.csv", [&](std::ostream& out) {
            out << "p,q,w\n";
            for (std::size_t ip = 0; ip < f.p_grid.size(); ++ip) {
                const std::string p = format_double(f.p_grid.at(ip));
                for (std::size_t iq = 0; iq < f.q_grid.size(); ++iq)
                    out << p << ',' << format_double(f.q_grid.at(iq)) << ',' << format_double(f.at(ip, iq)) << '\n';
            }
        });
        const json witness = {{"giffen", giffen.giffen},
                              {"min_value", giffen.min_value},
                              {"p", giffen.p},
                              {"q", giffen.q},
                              {"threshold", giffen.threshold},
                              {"max_abs", f.max_abs()}};
        write_file(out_dir / "giffen.json", [&](std::ostream& out) { out << witness.dump(2) << '\n'; });
        manifest["derived"] = src.derived;
        manifest["outputs"] = {"wigner.csv", "giffen.json"};
        break;
    }
    }
    write_manifest(out_dir, manifest);
}

} // namespace qmg::cli
