#include "mdbs/scenario.hpp"

#include <algorithm>
#include <sstream>

#include "mdbs/errors.hpp"
#include "mdbs/query.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs {

std::string ChangeGenerator::fresh(const char* prefix) {
    return std::string(prefix) + std::to_string(++counter_);
}

SchemaChange ChangeGenerator::next(const LocalSchema& current) {
    auto pick = [this](std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_);
    };
    auto random_type = [&]() -> std::string {
        static const char* bases[] = {"integer", "real", "text", "date", "identifier"};
        std::string t = bases[pick(5)];
        if ((t == "integer" || t == "real") && pick(4) == 0) {
            static const char* units[] = {"USD", "INR", "EUR", "years"};
            t += ":" + std::string(units[pick(4)]);
        }
        return t;
    };

    SchemaChange c;
    if (current.classes.empty()) {
        c.kind = ChangeKind::add_class;
        c.class_name = fresh("cls");
        return c;
    }
    const LocalClass& cls = current.classes[pick(current.classes.size())];
    // weighted choice; attribute-level changes dominate
    std::size_t roll = pick(100);
    if (roll < 30) {
        c.kind = ChangeKind::add_attribute;
        c.class_name = cls.name;
        c.attribute = fresh("attr");
        c.type_spec = random_type();
        if (pick(2) == 0)
            c.type_spec += "?nullable";
    } else if (roll < 45 && !cls.attributes.empty()) {
        c.kind = ChangeKind::drop_attribute;
        c.class_name = cls.name;
        c.attribute = cls.attributes[pick(cls.attributes.size())].name;
    } else if (roll < 60 && !cls.attributes.empty()) {
        c.kind = ChangeKind::rename_attribute;
        c.class_name = cls.name;
        c.attribute = cls.attributes[pick(cls.attributes.size())].name;
        c.new_name = fresh("attr");
    } else if (roll < 75 && !cls.attributes.empty()) {
        c.kind = ChangeKind::change_attribute_type;
        c.class_name = cls.name;
        c.attribute = cls.attributes[pick(cls.attributes.size())].name;
        c.type_spec = random_type();
    } else if (roll < 85) {
        c.kind = ChangeKind::add_class;
        c.class_name = fresh("cls");
    } else if (roll < 95) {
        c.kind = ChangeKind::rename_class;
        c.class_name = cls.name;
        c.new_name = fresh("cls");
    } else if (current.classes.size() > 1) {
        c.kind = ChangeKind::drop_class;
        c.class_name = cls.name;
    } else {
        c.kind = ChangeKind::add_class;
        c.class_name = fresh("cls");
    }
    return c;
}

std::size_t run_fault_script(Federation& fed, const std::string& script) {
    struct Event {
        std::uint64_t t = 0;
        SiteId site;
        std::string action; // online | offline | change ...
    };
    std::vector<Event> events;
    std::istringstream in(script);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string t_tok, site_tok;
        if (!(ls >> t_tok))
            continue;
        if (!t_tok.starts_with("t=") || !(ls >> site_tok) || !site_tok.starts_with("site="))
            fail(Errc::parse_error, "fault line " + std::to_string(lineno) +
                                        ": expected t=<step> site=<id> <action>");
        Event ev;
        ev.t = std::stoull(t_tok.substr(2));
        ev.site = site_tok.substr(5);
        std::getline(ls, ev.action);
        while (!ev.action.empty() && ev.action.front() == ' ')
            ev.action.erase(ev.action.begin());
        if (ev.action.empty())
            fail(Errc::parse_error,
                 "fault line " + std::to_string(lineno) + ": missing action");
        events.push_back(std::move(ev));
    }
    std::stable_sort(events.begin(), events.end(),
                     [](const Event& a, const Event& b) { return a.t < b.t; });
    for (const auto& ev : events) {
        if (ev.action == "online")
            fed.set_connectivity(ev.site, true);
        else if (ev.action == "offline")
            fed.set_connectivity(ev.site, false);
        else if (ev.action.starts_with("change"))
            fed.apply_local_change(ev.site, parse_change_line(ev.action.substr(6)));
        else
            fail(Errc::parse_error, "unknown fault action '" + ev.action + "'");
    }
    return events.size();
}

ScenarioOutcome run_scenario(Federation& fed, const std::string& script,
                             const std::filesystem::path& base_dir, std::uint64_t seed) {
    ScenarioOutcome outcome;
    std::ostringstream out;
    ChangeGenerator gen(seed);
    std::istringstream in(script);
    std::string raw;
    int lineno = 0;

    auto resolve = [&](const std::string& path) {
        std::filesystem::path p(path);
        return p.is_absolute() ? p.string() : (base_dir / p).string();
    };

    try {
        while (std::getline(in, raw)) {
            ++lineno;
            std::string line = raw;
            if (auto hash = line.find('#'); hash != std::string::npos)
                line.erase(hash);
            std::istringstream ls(line);
            std::string step;
            if (!(ls >> step))
                continue;
            if (step == "register") {
                std::string site, schema_file, data_file;
                ls >> site >> schema_file >> data_file;
                if (site.empty() || schema_file.empty() || data_file.empty())
                    fail(Errc::parse_error,
                         "line " + std::to_string(lineno) +
                             ": register needs <site> <schema-file> <data-file>");
                LocalSchema schema =
                    parse_schema_file(read_text_file(resolve(schema_file)), site);
                auto extent = parse_extent_file(read_text_file(resolve(data_file)), schema);
                fed.register_site(schema, std::move(extent));
                out << "registered " << site << "\n";
            } else if (step == "assert") {
                std::string file;
                ls >> file;
                fed.load_assertions(read_text_file(resolve(file)));
                out << "assertions loaded\n";
            } else if (step == "integrate") {
                std::string file;
                ls >> file;
                fed.integrate_definitions(read_text_file(resolve(file)));
                out << "global schema integrated\n";
            } else if (step == "query") {
                std::string text;
                std::getline(ls, text);
                QueryResult result = fed.execute(fed.parse_query(text));
                out << render_table(result);
            } else if (step == "change") {
                std::string site;
                ls >> site;
                std::string rest;
                std::getline(ls, rest);
                fed.apply_local_change(site, parse_change_line(rest));
                out << "change applied at " << site << "\n";
            } else if (step == "link") {
                std::string site, state;
                ls >> site >> state;
                if (state != "up" && state != "down")
                    fail(Errc::parse_error,
                         "line " + std::to_string(lineno) + ": link needs up|down");
                fed.set_connectivity(site, state == "up");
                out << "link " << site << " " << state << "\n";
            } else if (step == "relay") {
                std::string target;
                ls >> target;
                auto print = [&](const RelayReport& r) {
                    out << "relay " << r.site << ": delivered=" << r.delivered
                        << " skipped=" << r.skipped_duplicates << "\n";
                    for (const auto& [name, status] : r.affected_virtual_classes)
                        out << "  " << name << ": " << status << "\n";
                };
                if (target == "--all")
                    for (const auto& r : fed.relay_all())
                        print(r);
                else
                    print(fed.relay(target));
            } else if (step == "faults") {
                std::string file;
                ls >> file;
                std::size_t n = run_fault_script(fed, read_text_file(resolve(file)));
                out << "injected " << n << " fault events\n";
            } else if (step == "random-changes") {
                std::size_t n = 0;
                ls >> n;
                auto sites = fed.sites();
                if (sites.empty())
                    fail(Errc::parse_error, "random-changes with no registered sites");
                for (std::size_t i = 0; i < n; ++i) {
                    const SiteId& site = sites[std::uniform_int_distribution<std::size_t>(
                        0, sites.size() - 1)(gen.rng())];
                    fed.apply_local_change(site,
                                           gen.next(fed.adapter(site).schema_snapshot()));
                }
                out << "applied " << n << " random changes\n";
            } else if (step == "check") {
                ConvergenceReport report = fed.check_convergence();
                if (report.equal) {
                    out << "convergence: equal\n";
                } else {
                    out << "convergence: UNEQUAL\n" << report.diff;
                    outcome.exit_code = 3;
                    break;
                }
            } else {
                fail(Errc::parse_error,
                     "line " + std::to_string(lineno) + ": unknown step '" + step + "'");
            }
        }
    } catch (const Error& e) {
        out << "error: " << e.what() << "\n";
        outcome.exit_code = e.code == Errc::io_error ? 2 : 1;
    }
    outcome.output = out.str();
    return outcome;
}

} // namespace mdbs
