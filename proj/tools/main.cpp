#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cli.hpp"
#include "qmg/error.hpp"

namespace {

using namespace qmg;
using namespace qmg::cli;

Scenario load(const std::string& path, std::optional<double> tol) {
    Scenario sc = load_scenario(path);
    if (tol) {
        if (!(*tol > 0.0)) throw ValidationError("--tol must be positive");
        sc.market.tol = *tol;
        sc.resolved["market"]["tol"] = *tol;
    }
    return sc;
}

void print_round(const Scenario& sc, int round) {
    const RunResult result = run(sc, round);
    const auto& o = result.rounds.back().outcome;
    std::cout << "round " << round << '\n'
              << "division " << o.division.mask << " buyers:";
    for (int id : o.division.buyers) std::cout << ' ' << id;
    std::cout << " sellers:";
    for (int id : o.division.sellers) std::cout << ' ' << id;
    std::cout << '\n';
    if (!o.traded) {
        std::cout << "no-trade " << to_string(o.reason) << '\n';
        return;
    }
    std::cout << "ln_c_star " << format_double(o.ln_c_star) << '\n'
              << "turnover " << format_double(o.turnover) << '\n'
              << "residual " << format_double(o.residual) << '\n'
              << "uniform_price " << (uniform_price_check(o) ? "yes" : "no") << '\n';
    write_ledger_csv(std::cout, {result.ledger.end() - static_cast<long>(sc.traders.size()), result.ledger.end()});
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"qmg: quantum market game simulator"};
    app.require_subcommand(1);
    std::optional<double> tol;
    app.add_option("--tol", tol, "clearing residual tolerance (overrides market.tol)");

    std::string scenario_path, out_dir, what;
    int round = 1;

    auto* run_cmd = app.add_subcommand("run", "clear every round and write ledger.csv, rounds.csv, manifest.json");
    run_cmd->add_option("scenario", scenario_path)->required();
    run_cmd->add_option("--out", out_dir)->required();

    auto* report_cmd = app.add_subcommand("report", "write phase-space or fixed-point report CSVs");
    report_cmd->add_option("scenario", scenario_path)->required();
    report_cmd->add_option("--what", what)->required()->check(CLI::IsMember({"curves", "wigner", "fixed_point"}));
    report_cmd->add_option("--out", out_dir)->required();

    auto* clear_cmd = app.add_subcommand("clear", "print a single round to stdout");
    clear_cmd->add_option("scenario", scenario_path)->required();
    clear_cmd->add_option("--round", round, "round to print (earlier rounds are cleared first)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const Scenario sc = load(scenario_path, tol);
        if (*run_cmd) {
            write_run(sc, out_dir);
        } else if (*report_cmd) {
            write_report(sc, parse_report_kind(what), out_dir);
        } else {
            print_round(sc, round);
        }
        return 0;
    } catch (const ValidationError& e) {
        std::cerr << "qmg: validation error: " << e.what() << '\n';
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "qmg: numerical failure: " << e.what() << '\n';
        return 3;
    } catch (const IoError& e) {
        std::cerr << "qmg: i/o error: " << e.what() << '\n';
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "qmg: " << e.what() << '\n';
        return 1;
    }
}
