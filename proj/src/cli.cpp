#include "mdbs/cli.hpp"

#include <iostream>

#include <CLI11.hpp>

#include "mdbs/errors.hpp"
#include "mdbs/query.hpp"
#include "mdbs/scenario.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs {

namespace {

int exit_code_of(const Error& e) { return e.code == Errc::io_error ? 2 : 1; }

} // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
    CLI::App app{"mdbs - a multidatabase schema mediation engine"};
    app.require_subcommand(1);

    std::string state_dir = "./mdbs_state";
    std::uint64_t seed = 1;
    app.add_option("--state-dir", state_dir,
                   "directory holding the persistent federation state")
        ->envname("MDBS_STATE_DIR");
    app.add_option("--seed", seed, "seed for scenario randomness");

    std::string site, schema_file, data_file, dsl_file, def_file, export_file;
    std::string query_text, format = "table", change_line, link_state, relay_target,
                script_file;

    auto* cmd_register =
        app.add_subcommand("register", "register a site from schema and data files");
    cmd_register->add_option("site", site)->required();
    cmd_register->add_option("schema-file", schema_file)->required();
    cmd_register->add_option("data-file", data_file)->required();

    auto* cmd_assert =
        app.add_subcommand("assert", "load correspondence assertions from a DSL file");
    cmd_assert->add_option("dsl-file", dsl_file)->required();

    auto* cmd_integrate =
        app.add_subcommand("integrate", "build virtual classes from a definition file");
    cmd_integrate->add_option("def-file", def_file)->required();

    auto* cmd_show = app.add_subcommand("show-global", "print the derived global schema");
    cmd_show->add_option("--export", export_file, "also write the canonical export here");

    auto* cmd_query = app.add_subcommand("query", "run a query against a virtual class");
    cmd_query->add_option("text", query_text, "select <attrs|*> from <class> [where ...]")
        ->required();
    cmd_query->add_option("--format", format, "table (default) or tsv")
        ->check(CLI::IsMember({"table", "tsv"}));

    auto* cmd_change = app.add_subcommand("change", "apply a local schema change at a site");
    cmd_change->add_option("site", site)->required();
    cmd_change->add_option("change-line", change_line, "kind=K class=c [attr=a] [new=x] [type=t]")
        ->required();

    auto* cmd_link = app.add_subcommand("link", "toggle a site's connectivity");
    cmd_link->add_option("site", site)->required();
    cmd_link->add_option("state", link_state)->required()->check(CLI::IsMember({"up", "down"}));

    auto* cmd_relay = app.add_subcommand("relay", "relay pending schema changes bottom-up");
    cmd_relay->add_option("site", relay_target, "site id, or --all for every site");

    auto* cmd_check = app.add_subcommand(
        "check-convergence", "compare the maintained global schema with a from-scratch run");

    auto* cmd_scenario = app.add_subcommand("run-scenario", "replay a scenario script");
    cmd_scenario->add_option("script-file", script_file)->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    try {
        Federation fed = Federation::load(state_dir);

        if (cmd_register->parsed()) {
            LocalSchema schema = parse_schema_file(read_text_file(schema_file), site);
            auto extent = parse_extent_file(read_text_file(data_file), schema);
            fed.register_site(schema, std::move(extent));
            out << "registered site " << site << " (" << schema.classes.size()
                << " classes)\n";
        } else if (cmd_assert->parsed()) {
            fed.load_assertions(read_text_file(dsl_file));
            out << "assertions loaded: " << fed.assertions().assertions.size()
                << " total\n";
        } else if (cmd_integrate->parsed()) {
            fed.integrate_definitions(read_text_file(def_file));
            out << "global schema: " << fed.global_schema().classes.size()
                << " virtual classes\n";
        } else if (cmd_show->parsed()) {
            std::string text = fed.export_global_schema();
            out << text;
            if (!export_file.empty())
                write_text_file(export_file, text);
        } else if (cmd_query->parsed()) {
            QueryResult result = fed.execute(fed.parse_query(query_text));
            if (format == "tsv") {
                out << render_tsv(result);
                for (const auto& w : result.warnings)
                    err << "warning: " << w << "\n";
            } else {
                out << render_table(result);
            }
        } else if (cmd_change->parsed()) {
            std::uint64_t version = fed.apply_local_change(site, parse_change_line(change_line));
            out << "applied at " << site << "; schema version " << version << "\n";
        } else if (cmd_link->parsed()) {
            fed.set_connectivity(site, link_state == "up");
            out << "link " << site << " " << link_state << "\n";
        } else if (cmd_relay->parsed()) {
            auto print = [&](const RelayReport& r) {
                out << "relay " << r.site << ": delivered=" << r.delivered
                    << " skipped=" << r.skipped_duplicates << "\n";
                for (const auto& [name, status] : r.affected_virtual_classes)
                    out << "  " << name << ": " << status << "\n";
            };
            if (relay_target.empty() || relay_target == "--all")
                for (const auto& r : fed.relay_all())
                    print(r);
            else
                print(fed.relay(relay_target));
        } else if (cmd_check->parsed()) {
            ConvergenceReport report = fed.check_convergence();
            if (report.equal) {
                out << "convergence: equal\n";
            } else {
                out << "convergence: UNEQUAL\n" << report.diff;
                return 3;
            }
        } else if (cmd_scenario->parsed()) {
            std::filesystem::path script_path(script_file);
            ScenarioOutcome outcome = run_scenario(fed, read_text_file(script_file),
                                                   script_path.parent_path(), seed);
            out << outcome.output;
            return outcome.exit_code;
        }
        return 0;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_of(e);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace mdbs
