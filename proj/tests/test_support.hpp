#pragma once

// Shared helpers and independent oracles for the test suites. Everything in
// here stays off the implementation paths it checks.

#include <atomic>
#include <filesystem>
#include <unistd.h>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "mdbs/mediator.hpp"
#include "mdbs/query.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs::test {

inline std::filesystem::path fixture_dir() { return MDBS_FIXTURE_DIR; }

inline std::string fixture_text(const std::string& rel) {
    return read_text_file((fixture_dir() / rel).string());
}

inline std::filesystem::path fresh_temp_dir(const std::string& tag) {
    static std::atomic<unsigned> counter{0};
    auto dir = std::filesystem::temp_directory_path() /
               ("mdbs_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Loads one of the ex1/ex2/ex3 fixture federations end to end.
inline Federation load_example(const std::string& name) {
    Federation fed;
    for (const char* site : {"S1", "S2"}) {
        std::string prefix = name + "/" + (site[1] == '1' ? "s1" : "s2");
        LocalSchema schema = parse_schema_file(fixture_text(prefix + ".schema"), site);
        auto extent = parse_extent_file(fixture_text(prefix + ".data"), schema);
        fed.register_site(schema, std::move(extent));
    }
    fed.load_assertions(fixture_text(name + "/assertions.dsl"));
    fed.integrate_definitions(fixture_text(name + "/global.def"));
    return fed;
}

// --- construction helpers ----------------------------------------------------
inline LocalClass make_class(const SiteId& site, const std::string& name,
                             const std::vector<std::string>& attr_specs,
                             const std::vector<std::string>& key = {}) {
    LocalClass cls;
    cls.site = site;
    cls.name = name;
    for (const auto& spec : attr_specs)
        cls.attributes.push_back(parse_attribute_spec(spec));
    cls.key = key;
    return cls;
}

inline void register_class(Federation& fed, const LocalClass& cls,
                           std::vector<ObjectInstance> extent = {}) {
    fed.register_site(LocalSchema{cls.site, {cls}}, std::move(extent));
}

// Pairwise-complete assertions over a constituent list: every pair related by
// `kind`, every case-insensitively shared attribute name corresponded, the
// key attribute flagged when given.
inline std::string pairwise_dsl(const std::vector<LocalClass>& classes, RelationKind kind,
                                const std::string& key_attr = "") {
    std::string dsl;
    for (std::size_t i = 0; i < classes.size(); ++i)
        for (std::size_t j = i + 1; j < classes.size(); ++j) {
            const LocalClass& a = classes[i];
            const LocalClass& b = classes[j];
            dsl += std::string(relation_kind_name(kind)) + " " + a.site + "." + a.name +
                   " ~ " + b.site + "." + b.name + " {\n";
            for (const auto& attr : a.attributes)
                if (const Attribute* other = b.find_attribute(attr.name)) {
                    if (!key_attr.empty() && name_eq(attr.name, key_attr))
                        dsl += "  key ";
                    else
                        dsl += "  ";
                    dsl += attr.name + " == " + other->name + ";\n";
                }
            dsl += "}\n";
        }
    return dsl;
}

// --- independent type-lattice oracle ---------------------------------------
// Coercibility as reachability over the explicit edge list; the join is found
// by brute-force search over all candidate types.
inline bool oracle_coercible(const SemanticType& from, const SemanticType& to) {
    if (from == to)
        return true;
    if (from.base == BaseType::integer && to.base == BaseType::real && from.unit == to.unit)
        return true;
    if (to.base == BaseType::text && to.unit.empty())
        return true;
    return false;
}

inline std::optional<SemanticType> oracle_join(const SemanticType& a, const SemanticType& b) {
    std::vector<SemanticType> candidates{a, b, SemanticType{BaseType::text, {}}};
    if (is_numeric(a.base) && is_numeric(b.base) && a.unit == b.unit)
        candidates.push_back(SemanticType{BaseType::real, a.unit});
    std::optional<SemanticType> best;
    for (const auto& c : candidates) {
        if (!oracle_coercible(a, c) || !oracle_coercible(b, c))
            continue;
        if (!best || (oracle_coercible(c, *best) && !(c == *best)))
            best = c;
    }
    // numeric types with different units must not silently meet in text
    if (is_numeric(a.base) && is_numeric(b.base) && a.unit != b.unit)
        return std::nullopt;
    return best;
}

// --- brute-force set-formula oracle -----------------------------------------
inline std::set<std::string> oracle_set_union(const std::vector<std::set<std::string>>& sets) {
    std::set<std::string> out;
    for (const auto& s : sets)
        out.insert(s.begin(), s.end());
    return out;
}

inline std::set<std::string>
oracle_set_intersection(const std::vector<std::set<std::string>>& sets) {
    if (sets.empty())
        return {};
    std::set<std::string> out = sets[0];
    for (std::size_t i = 1; i < sets.size(); ++i) {
        std::set<std::string> next;
        for (const auto& x : out)
            if (sets[i].count(x))
                next.insert(x);
        out = std::move(next);
    }
    return out;
}

// --- row-set helpers ------------------------------------------------------------
using RowSet = std::multiset<std::vector<std::string>>;

inline std::string normalize_cell(const Value& v) {
    if (is_null(v))
        return "\\N";
    if (const auto* d = std::get_if<Date>(&v)) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d->year, d->month, d->day);
        return buf;
    }
    if (const auto* i = std::get_if<std::int64_t>(&v))
        return "i" + std::to_string(*i); // int 5 vs real 5.0 stay distinct kinds
    if (const auto* r = std::get_if<double>(&v))
        return "r" + render_value(Value{*r});
    return render_value(v);
}

inline RowSet as_row_set(const QueryResult& result) {
    RowSet rows;
    for (const auto& row : result.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& v : row)
            cells.push_back(normalize_cell(v));
        rows.insert(std::move(cells));
    }
    return rows;
}

// --- centralized query oracle -----------------------------------------------
// Materializes every constituent extent at the mediator, applies the
// operator's extent semantics by brute force, then filters and projects.
// Independent of decompose/execute_subquery/compose.
RowSet central_oracle(const Federation& fed, const VirtualClass& vc, const GlobalQuery& q);

// --- random federation corpus ------------------------------------------------
struct RandomFederation {
    Federation fed;
    std::string vc_name;
};

RandomFederation make_random_federation(std::mt19937_64& rng);
GlobalQuery random_query(std::mt19937_64& rng, const VirtualClass& vc);

} // namespace mdbs::test
