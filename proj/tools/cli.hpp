#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmg/clearing.hpp"
#include "qmg/profit.hpp"
#include "qmg/strategy.hpp"
#include "qmg/wigner.hpp"

namespace qmg::cli {

using nlohmann::json;

struct MarketSpec {
    double h_E = 2.0 * pi;
    RiskParams risk;
    FlowMode mode = FlowMode::capital;
    Grid1D grid = default_grid();
    double tol = default_clearing_tol;
};

struct TraderSpec {
    int id = 0;
    json strategy_spec; ///< as written, after defaults
    Strategy strategy;
    double s = 0.0;
    double d = 0.0;
};

/// Repeated demand-window measurement applied before every round.
struct ZenoSpec {
    std::vector<int> traders; ///< empty means all traders
    double center = 0.0;
    double width = 0.05;
    int repetitions = 1;

    bool applies_to(int trader_id) const;
};

enum class SourceKind { thermal, strategy, trader };

struct SourceSpec {
    SourceKind kind = SourceKind::thermal;
    double beta = 1.0;
    std::optional<int> n_max;        ///< thermal; derived from the tail bound when absent
    std::optional<Strategy> strategy; ///< strategy
    int trader_id = 0;               ///< trader
};

struct ReportSpec {
    std::optional<SourceSpec> source;
    WignerOptions wigner;
    Grid1D phase_grid = default_phase_grid();
    IntensitySpec intensity;
    double fixed_point_tol = 1e-10;
    std::optional<double> p_slice; ///< demand curve row; field mean when absent
    std::optional<double> q_slice; ///< supply curve column
};

struct Scenario {
    MarketSpec market;
    std::vector<TraderSpec> traders;
    int rounds = 1;
    std::optional<ZenoSpec> zeno;
    ReportSpec report;
    /// Every parameter after defaults are filled in; written to the manifest.
    json resolved;
};

/// Parses and validates a scenario document. Parse errors carry line and
/// column, schema errors the JSON pointer of the offending field.
Scenario parse_scenario(const std::string& text);
/// Throws IoError when the file cannot be read.
Scenario load_scenario(const std::filesystem::path& path);

/// Builds a strategy from {"kind": ...}; `where` prefixes diagnostics.
Strategy build_strategy(const json& spec, const MarketSpec& market, const std::string& where);
std::vector<std::string> supported_strategy_kinds();

struct LedgerEntry {
    int round = 0;
    std::uint64_t division = 0;
    double ln_c_star = 0.0;
    double turnover = 0.0;
    int trader_id = 0;
    double delta_g = 0.0;
    double delta_money = 0.0;
    double balance_g = 0.0;
    double balance_money = 0.0;
    double residual = 0.0;
};

struct RoundRecord {
    int round = 0;
    ClearingOutcome outcome;
};

struct RunResult {
    std::vector<LedgerEntry> ledger;
    std::vector<RoundRecord> rounds;
};

/// Clears scenario.rounds rounds (or the first `last_round`), carrying
/// post-settlement holdings into the next round.
RunResult run(const Scenario& scenario, std::optional<int> last_round = std::nullopt);

void write_ledger_csv(std::ostream& out, const std::vector<LedgerEntry>& ledger);
void write_rounds_csv(std::ostream& out, const std::vector<RoundRecord>& rounds);

enum class ReportKind { curves, wigner, fixed_point };
ReportKind parse_report_kind(const std::string& what);
std::string_view to_string(ReportKind kind);

/// Writes the run artifacts (ledger.csv, rounds.csv, manifest.json) to out_dir.
void write_run(const Scenario& scenario, const std::filesystem::path& out_dir);
/// Writes the report artifacts for `what` plus manifest.json to out_dir.
void write_report(const Scenario& scenario, ReportKind what, const std::filesystem::path& out_dir);

/// %.17g
std::string format_double(double x);

} // namespace qmg::cli
