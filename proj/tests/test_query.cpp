#include <doctest.h>

#include <algorithm>
#include <random>
#include <thread>

#include "mdbs/errors.hpp"
#include "mdbs/query.hpp"
#include "test_support.hpp"

using namespace mdbs;
using namespace mdbs::test;

namespace {

std::vector<std::vector<std::string>> sorted_cells(const QueryResult& r) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& row : r.rows) {
        std::vector<std::string> cells;
        for (const auto& v : row)
            cells.push_back(render_value(v, ""));
        rows.push_back(std::move(cells));
    }
    std::sort(rows.begin(), rows.end());
    return rows;
}

} // namespace

TEST_SUITE("query_engine") {

TEST_CASE("the employees union matches the golden result table") {
    Federation fed = load_example("ex1");
    QueryResult r = fed.execute(fed.parse_query("select * from employees"));
    CHECK(r.header == std::vector<std::string>{"employeecode", "name", "country", "age",
                                               "phone"});
    REQUIRE(r.rows.size() == 6);
    // merged rows come out in canonical key order
    std::vector<std::vector<std::string>> expected{
        {"1", "john", "NY", "25", ""},    {"2", "peter", "NY", "26", ""},
        {"3", "albert", "NY", "27", ""},  {"4", "habib", "IN", "25", "28789"},
        {"5", "mohan", "IN", "28", "22789"}, {"6", "mary", "IN", "29", "23789"}};
    for (std::size_t i = 0; i < 6; ++i) {
        std::vector<std::string> cells;
        for (const auto& v : r.rows[i])
            cells.push_back(render_value(v, ""));
        CHECK(cells == expected[i]);
    }
    // phone is null exactly at the site that lacks it
    for (std::size_t i = 0; i < 3; ++i)
        CHECK(is_null(r.rows[i][4]));
}

TEST_CASE("the persons generalize matches the golden result table") {
    Federation fed = load_example("ex2");
    QueryResult r = fed.execute(fed.parse_query("select * from persons"));
    CHECK(r.header == std::vector<std::string>{"id", "name", "country", "CGPA"});
    REQUIRE(r.rows.size() == 6);
    std::vector<std::vector<std::string>> expected{
        {"1", "john", "NY", "9"},   {"2", "peter", "NY", "8"},  {"3", "albert", "NY", "7"},
        {"4", "habib", "IN", "9.6"}, {"5", "mohan", "IN", "8.6"}, {"6", "mary", "IN", "7.6"}};
    for (std::size_t i = 0; i < 6; ++i) {
        std::vector<std::string> cells;
        for (const auto& v : r.rows[i])
            cells.push_back(render_value(v, ""));
        CHECK(cells == expected[i]);
    }
}

TEST_CASE("the professor specialize keeps exactly the shared teacher") {
    Federation fed = load_example("ex3");
    QueryResult r = fed.execute(fed.parse_query("select * from professor"));
    CHECK(r.header == std::vector<std::string>{"Id", "name", "country", "designation",
                                               "DOB", "DOJ"});
    REQUIRE(r.rows.size() == 1);
    CHECK(render_value(r.rows[0][0]) == "3");
    CHECK(render_value(r.rows[0][1]) == "albert");
    CHECK(render_value(r.rows[0][2]) == "NY");
    // the reference output prints the designation lowercase while both
    // inputs carry "Prof"; compare case-insensitively
    CHECK(name_eq(render_value(r.rows[0][3]), "prof"));
    CHECK(render_value(r.rows[0][4]) == "30/01/68");
    CHECK(render_value(r.rows[0][5]) == "13/08/1999");
}

TEST_CASE("decompose projects each constituent's own attributes") {
    Federation fed = load_example("ex1");
    GlobalQuery q = fed.parse_query("select * from employees");
    const VirtualClass* vc = fed.global_schema().find("employees");
    DecomposedQuery d = decompose(q, *vc, fed.assertions());
    REQUIRE(d.subqueries.size() == 2);
    CHECK(d.subqueries[0].query.projection.size() == 4); // S1 lacks phone
    CHECK(d.subqueries[1].query.projection.size() == 5);
    for (const auto& sub : d.subqueries)
        CHECK(sub.query.class_name == "employees"); // local names only
}

TEST_CASE("predicates push down only where attributes exist and merging allows") {
    Federation fed = load_example("ex1");
    const VirtualClass* vc = fed.global_schema().find("employees");

    // key conjuncts push everywhere, even under key merging
    GlobalQuery by_key = fed.parse_query("select name from employees where employeecode > 3");
    DecomposedQuery d1 = decompose(by_key, *vc, fed.assertions());
    CHECK(d1.subqueries[0].query.predicate.size() == 1);
    CHECK(d1.subqueries[1].query.predicate.size() == 1);
    CHECK(d1.mediator_predicate.size() == 1); // re-applied after composition

    // non-key conjuncts stay at the mediator for a merging class
    GlobalQuery by_phone = fed.parse_query("select name from employees where phone > 0");
    DecomposedQuery d2 = decompose(by_phone, *vc, fed.assertions());
    CHECK(d2.subqueries[0].query.predicate.empty());
    CHECK(d2.subqueries[1].query.predicate.empty());
    CHECK(d2.mediator_predicate.size() == 1);

    // with pushdown disabled nothing moves
    DecomposedQuery d3 = decompose(by_key, *vc, fed.assertions(), /*pushdown=*/false);
    CHECK(d3.subqueries[0].query.predicate.empty());
}

TEST_CASE("non-key predicates push down on concatenating classes") {
    Federation fed;
    LocalClass a = make_class("S1", "c", {"x:integer", "y:integer"});
    LocalClass b = make_class("S2", "c", {"x:integer"});
    register_class(fed, a);
    register_class(fed, b);
    fed.load_assertions("equivalence S1.c ~ S2.c { x == x; }");
    fed.integrate_class(OperatorKind::union_op, "v", {a.ref(), b.ref()});
    const VirtualClass* vc = fed.global_schema().find("v");
    REQUIRE(!vc->key); // no key link: plain concatenation

    GlobalQuery q = fed.parse_query("select x from v where x >= 2 and y = 5");
    DecomposedQuery d = decompose(q, *vc, fed.assertions());
    // x exists at both sites, y only at S1
    CHECK(d.subqueries[0].query.predicate.size() == 2);
    CHECK(d.subqueries[1].query.predicate.size() == 1);
    CHECK(d.subqueries[1].query.predicate[0].attribute == "x");
}

TEST_CASE("querying an invalidated virtual class is refused") {
    Federation fed = load_example("ex3");
    fed.apply_local_change("S2",
                           parse_change_line("kind=DropAttribute class=teachers attr=Id"));
    fed.relay("S2");
    try {
        fed.execute(fed.parse_query("select * from professor"));
        FAIL("expected InvalidatedVirtualClass");
    } catch (const Error& e) {
        CHECK(e.code == Errc::invalidated_virtual_class);
    }
}

TEST_CASE("conversions are applied before composing and inverted on pushdown") {
    Federation fed;
    LocalClass a = make_class("S1", "acct", {"k:integer", "bal:integer:USD"}, {"k"});
    LocalClass b = make_class("S2", "acct", {"k:integer", "bal:integer:INR"}, {"k"});
    std::vector<ObjectInstance> ea, eb;
    auto obj = [](const LocalClass& cls, std::int64_t k, std::int64_t bal) {
        ObjectInstance o;
        o.cls = cls.ref();
        o.values["k"] = k;
        o.values["bal"] = bal;
        return o;
    };
    ea.push_back(obj(a, 1, 100));
    eb.push_back(obj(b, 2, 1000)); // 1000 INR -> 12 USD
    register_class(fed, a, std::move(ea));
    register_class(fed, b, std::move(eb));
    fed.load_assertions("conversion inr_usd(integer:INR) -> real:USD = x * 0.012\n"
                        "equivalence S1.acct ~ S2.acct { key k == k; bal == inr_usd(bal); }");
    fed.integrate_class(OperatorKind::union_op, "accounts", {a.ref(), b.ref()});

    QueryResult r = fed.execute(fed.parse_query("select k, bal from accounts"));
    auto rows = sorted_cells(r);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == std::vector<std::string>{"1", "100"});
    CHECK(rows[1] == std::vector<std::string>{"2", "12"});

    QueryResult filtered =
        fed.execute(fed.parse_query("select k from accounts where bal > 50"));
    REQUIRE(filtered.rows.size() == 1);
    CHECK(render_value(filtered.rows[0][0]) == "1");
}

TEST_CASE("a query on an import class equals the adapter scan") {
    Federation fed;
    LocalClass cls = make_class("S1", "t", {"a:integer", "b:text?nullable"});
    std::vector<ObjectInstance> extent;
    for (int i = 0; i < 5; ++i) {
        ObjectInstance o;
        o.cls = cls.ref();
        o.values["a"] = std::int64_t{i};
        o.values["b"] = i % 2 ? Value{} : Value{std::string("w" + std::to_string(i))};
        extent.push_back(std::move(o));
    }
    register_class(fed, cls, std::move(extent));
    fed.integrate_class(OperatorKind::import, "timport", {cls.ref()});
    QueryResult r = fed.execute(fed.parse_query("select * from timport"));
    SubResult direct = fed.adapter("S1").execute_subquery({"t", {"a", "b"}, {}});
    REQUIRE(r.rows.size() == direct.rows.size());
    for (std::size_t i = 0; i < r.rows.size(); ++i)
        for (std::size_t c = 0; c < 2; ++c)
            CHECK(values_equal(r.rows[i][c], direct.rows[i][c]));
}

TEST_CASE("specialize over key-disjoint extents is empty with an intact header") {
    Federation fed;
    LocalClass a = make_class("S1", "c", {"k:integer", "x:integer"}, {"k"});
    LocalClass b = make_class("S2", "c", {"k:integer", "y:integer"}, {"k"});
    auto obj = [](const LocalClass& cls, std::int64_t k) {
        ObjectInstance o;
        o.cls = cls.ref();
        o.values["k"] = k;
        o.values[cls.attributes[1].name] = k * 10;
        return o;
    };
    register_class(fed, a, {obj(a, 1), obj(a, 2)});
    register_class(fed, b, {obj(b, 3), obj(b, 4)});
    fed.load_assertions("equivalence S1.c ~ S2.c { key k == k; }");
    fed.integrate_class(OperatorKind::specialize, "both", {a.ref(), b.ref()});
    QueryResult r = fed.execute(fed.parse_query("select * from both"));
    CHECK(r.header == std::vector<std::string>{"k", "x", "y"});
    CHECK(r.rows.empty());
}

TEST_CASE("specialize result keys are the intersection of the per-site key sets") {
    Federation fed;
    std::vector<LocalClass> classes;
    std::vector<ClassRef> refs;
    std::vector<std::set<std::int64_t>> key_sets{{1, 2, 3, 4, 5}, {3, 4, 5, 6, 7},
                                                 {4, 5, 6, 8, 9}};
    for (std::size_t i = 0; i < key_sets.size(); ++i) {
        LocalClass cls = make_class("S" + std::to_string(i + 1), "rec",
                                    {"k:integer", "v:integer"}, {"k"});
        std::vector<ObjectInstance> extent;
        for (std::int64_t k : key_sets[i]) {
            ObjectInstance o;
            o.cls = cls.ref();
            o.values["k"] = k;
            o.values["v"] = k * 100;
            extent.push_back(std::move(o));
        }
        register_class(fed, cls, std::move(extent));
        classes.push_back(cls);
        refs.push_back(cls.ref());
    }
    fed.load_assertions(pairwise_dsl(classes, RelationKind::equivalence, "k"));
    fed.integrate_class(OperatorKind::specialize, "shared", refs);
    QueryResult r = fed.execute(fed.parse_query("select k from shared"));
    std::set<std::int64_t> got;
    for (const auto& row : r.rows)
        got.insert(std::get<std::int64_t>(row[0]));
    std::set<std::int64_t> expected; // brute-force intersection of the key sets
    for (std::int64_t k : key_sets[0])
        if (key_sets[1].count(k) && key_sets[2].count(k))
            expected.insert(k);
    CHECK(got == expected);
    CHECK(got == std::set<std::int64_t>{4, 5});
}

TEST_CASE("null discipline: a global value is null iff nobody supplied one") {
    Federation fed;
    LocalClass a = make_class("S1", "c", {"k:integer", "v:integer?nullable"}, {"k"});
    LocalClass b = make_class("S2", "c", {"k:integer", "v:integer?nullable"}, {"k"});
    auto obj = [](const LocalClass& cls, std::int64_t k, std::optional<std::int64_t> v) {
        ObjectInstance o;
        o.cls = cls.ref();
        o.values["k"] = k;
        o.values["v"] = v ? Value{*v} : Value{};
        return o;
    };
    register_class(fed, a, {obj(a, 1, std::nullopt), obj(a, 2, 20), obj(a, 3, std::nullopt)});
    register_class(fed, b, {obj(b, 1, 11), obj(b, 2, std::nullopt), obj(b, 3, std::nullopt)});
    fed.load_assertions("equivalence S1.c ~ S2.c { key k == k; v == v; }");
    fed.integrate_class(OperatorKind::union_op, "v", {a.ref(), b.ref()});
    QueryResult r = fed.execute(fed.parse_query("select * from v"));
    REQUIRE(r.rows.size() == 3);
    CHECK(std::get<std::int64_t>(r.rows[0][1]) == 11); // S2 filled the hole
    CHECK(std::get<std::int64_t>(r.rows[1][1]) == 20);
    CHECK(is_null(r.rows[2][1])); // no site supplied a value
}

TEST_CASE("value conflicts resolve to the earliest constituent with a warning") {
    Federation fed;
    LocalClass a = make_class("S1", "c", {"k:integer", "d:text"}, {"k"});
    LocalClass b = make_class("S2", "c", {"k:integer", "d:text"}, {"k"});
    auto obj = [](const LocalClass& cls, std::int64_t k, const std::string& d) {
        ObjectInstance o;
        o.cls = cls.ref();
        o.values["k"] = k;
        o.values["d"] = d;
        return o;
    };
    register_class(fed, a, {obj(a, 3, "Prof")});
    register_class(fed, b, {obj(b, 3, "prof")}); // case-differing duplicate
    fed.load_assertions("equivalence S1.c ~ S2.c { key k == k; d == d; }");
    fed.integrate_class(OperatorKind::specialize, "p", {a.ref(), b.ref()});
    QueryResult r = fed.execute(fed.parse_query("select * from p"));
    REQUIRE(r.rows.size() == 1);
    CHECK(render_value(r.rows[0][1]) == "Prof"); // earliest constituent wins
    REQUIRE(!r.warnings.empty());
    CHECK(r.warnings[0].find("conflict") != std::string::npos);
}

TEST_CASE("offline constituents degrade unions and fail specializations") {
    Federation fed = load_example("ex1");
    fed.set_connectivity("S2", false);
    QueryResult r = fed.execute(fed.parse_query("select * from employees"));
    CHECK(r.rows.size() == 3); // partial result
    REQUIRE(!r.warnings.empty());
    CHECK(r.warnings[0].find("partial result") != std::string::npos);

    Federation fed3 = load_example("ex3");
    fed3.set_connectivity("S2", false);
    try {
        fed3.execute(fed3.parse_query("select * from professor"));
        FAIL("expected PartialResultError");
    } catch (const Error& e) {
        CHECK(e.code == Errc::partial_result);
    }
}

TEST_CASE("query text parsing validates names, literals and shape") {
    Federation fed = load_example("ex1");
    CHECK_THROWS_AS(fed.parse_query("select * from nosuch"), Error);
    try {
        fed.parse_query("select bogus from employees");
        FAIL("expected UnknownAttribute");
    } catch (const Error& e) {
        CHECK(e.code == Errc::unknown_attribute);
    }
    CHECK_THROWS_AS(fed.parse_query("selekt * from employees"), Error);
    CHECK_THROWS_AS(fed.parse_query("select * from employees where age > abc"), Error);
    GlobalQuery q = fed.parse_query("select name from employees where name = \"john\"");
    CHECK(q.predicate[0].attribute == "name");
    CHECK(std::get<std::string>(q.predicate[0].literal) == "john");
}

TEST_CASE("rendering: aligned table and tsv with explicit nulls") {
    Federation fed = load_example("ex1");
    QueryResult r = fed.execute(fed.parse_query("select employeecode, phone from employees"));
    std::string tsv = render_tsv(r);
    CHECK(tsv.starts_with("employeecode\tphone\n"));
    CHECK(tsv.find("1\t\\N\n") != std::string::npos);
    CHECK(tsv.find("4\t28789\n") != std::string::npos);
    std::string table = render_table(r);
    CHECK(table.starts_with("employeecode  phone\n"));
    CHECK(table.find("4             28789") != std::string::npos);
}

TEST_CASE("pushdown on and off produce the same rows on the examples") {
    for (const char* example : {"ex1", "ex2", "ex3"}) {
        Federation fed = load_example(example);
        const VirtualClass& vc = fed.global_schema().classes[0];
        std::string name = vc.name;
        for (std::string text :
             {"select * from " + name,
              "select " + vc.attributes[0].name + " from " + name + " where " +
                  vc.attributes[0].name + " > 2"}) {
            GlobalQuery q = fed.parse_query(text);
            CHECK(as_row_set(fed.execute(q, true)) == as_row_set(fed.execute(q, false)));
        }
    }
}

TEST_CASE("random federations agree with the centralized oracle") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        RandomFederation rf = make_random_federation(rng);
        const VirtualClass* vc = rf.fed.global_schema().find(rf.vc_name);
        REQUIRE(vc);
        for (int qi = 0; qi < 4; ++qi) {
            GlobalQuery q = random_query(rng, *vc);
            CAPTURE(trial);
            CAPTURE(qi);
            RowSet expected = central_oracle(rf.fed, *vc, q);
            RowSet with_pushdown = as_row_set(rf.fed.execute(q, true));
            RowSet without = as_row_set(rf.fed.execute(q, false));
            CHECK(expected == with_pushdown);
            CHECK(with_pushdown == without);
        }
    }
}

TEST_CASE("concurrent read-only callers see consistent results") {
    Federation fed = load_example("ex1");
    GlobalQuery q = fed.parse_query("select * from employees");
    RowSet expected = as_row_set(fed.execute(q));
    std::vector<std::thread> threads;
    std::vector<RowSet> results(8);
    for (int i = 0; i < 8; ++i)
        threads.emplace_back([&, i] { results[i] = as_row_set(fed.execute(q)); });
    for (auto& t : threads)
        t.join();
    for (const auto& r : results)
        CHECK(r == expected);
}

} // TEST_SUITE
