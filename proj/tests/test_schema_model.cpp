#include <doctest.h>

#include "mdbs/errors.hpp"
#include "mdbs/schema_io.hpp"
#include "mdbs/types.hpp"
#include "test_support.hpp"

using namespace mdbs;
using namespace mdbs::test;

namespace {

LocalSchema employees_s1() {
    return parse_schema_file(fixture_text("ex1/s1.schema"), "S1");
}

} // namespace

TEST_SUITE("schema_model") {

TEST_CASE("register stores the schema and returns it structurally intact") {
    Federation fed;
    LocalSchema schema = employees_s1();
    fed.register_site(schema, {});
    const LocalSchema& copy = fed.registry().at("S1");
    CHECK(copy.classes.size() == 1);
    CHECK(copy.classes[0].attributes.size() == 4);
    CHECK(schema_equal(copy, schema)); // round-trip identity
    CHECK(schema_equal(fed.adapter("S1").schema_snapshot(), schema));
}

TEST_CASE("registering an empty schema is valid") {
    Federation fed;
    fed.register_site(LocalSchema{"S9", {}}, {});
    CHECK(fed.registry().at("S9").classes.empty());
}

TEST_CASE("duplicate site registration is rejected") {
    Federation fed;
    fed.register_site(LocalSchema{"S1", {}}, {});
    CHECK_THROWS_WITH_AS(fed.register_site(LocalSchema{"s1", {}}, {}),
                         doctest::Contains("already registered"), Error);
}

TEST_CASE("schemas with duplicate attribute names are invalid") {
    LocalClass cls{"S1", "c", {Attribute{"a", {}, false}, Attribute{"A", {}, false}}, {}};
    LocalSchema schema{"S1", {cls}};
    Federation fed;
    CHECK_THROWS_AS(fed.register_site(schema, {}), Error);
    try {
        fed.register_site(schema, {});
    } catch (const Error& e) {
        CHECK(e.code == Errc::invalid_schema);
    }
}

TEST_CASE("rename_class moves the class and updates references") {
    Federation fed;
    LocalSchema s2;
    s2.site = "S2";
    s2.classes.push_back(LocalClass{
        "S2", "Employee", {Attribute{"id", {BaseType::integer, {}}, false}}, {"id"}});
    fed.register_site(s2, {});

    fed.rename_class("S2", "Employee", "employees");
    CHECK(fed.registry().at("S2").find_class("employees") != nullptr);
    CHECK(fed.registry().at("S2").find_class("EMPLOYEES") != nullptr); // case-insensitive
    CHECK(fed.registry().at("S2").find_class("Employee") == nullptr);  // new name only
    CHECK(fed.adapter("S2").schema_snapshot().classes[0].name == "employees");

    SUBCASE("rename to its own name is a no-op") {
        fed.rename_class("S2", "employees", "employees");
        CHECK(fed.registry().at("S2").classes[0].name == "employees");
    }
    SUBCASE("rename to an existing sibling name collides") {
        fed.apply_local_change("S2", parse_change_line("kind=AddClass class=staff"));
        CHECK_THROWS_AS(fed.rename_class("S2", "employees", "staff"), Error);
        try {
            fed.rename_class("S2", "employees", "staff");
        } catch (const Error& e) {
            CHECK(e.code == Errc::name_collision);
        }
    }
    SUBCASE("renaming an unknown class fails") {
        try {
            fed.rename_class("S2", "nosuch", "x");
            FAIL("expected UnknownClass");
        } catch (const Error& e) {
            CHECK(e.code == Errc::unknown_class);
        }
    }
}

TEST_CASE("rename and inverse rename restore the original schema exactly") {
    Federation fed;
    fed.register_site(employees_s1(), {});
    LocalSchema before = fed.adapter("S1").schema_snapshot();
    fed.rename_class("S1", "employees", "people");
    fed.rename_class("S1", "people", "employees");
    CHECK(schema_equal(fed.adapter("S1").schema_snapshot(), before));
    CHECK(schema_equal(fed.registry().at("S1"), before));
}

TEST_CASE("rename_attribute updates correspondences in place") {
    Federation fed;
    LocalSchema s1{"S1", {LocalClass{"S1",
                                     "employees",
                                     {Attribute{"empno", {BaseType::integer, {}}, false}},
                                     {"empno"}}}};
    LocalSchema s2{"S2", {LocalClass{"S2",
                                     "employees",
                                     {Attribute{"number", {BaseType::integer, {}}, false}},
                                     {"number"}}}};
    fed.register_site(s1, {});
    fed.register_site(s2, {});
    fed.load_assertions("equivalence S1.employees ~ S2.employees { key empno == number; }");

    fed.rename_attribute("S2", "employees", "number", "empno");
    const auto& corr = fed.assertions().assertions[0].correspondences[0];
    CHECK(corr.members[1].attribute == "empno"); // empno == empno, name-identical now

    SUBCASE("rename to the same name is a no-op") {
        fed.rename_attribute("S2", "employees", "empno", "empno");
        CHECK(fed.registry().at("S2").classes[0].attributes[0].name == "empno");
    }
    SUBCASE("renaming an unknown attribute fails") {
        try {
            fed.rename_attribute("S2", "employees", "nosuch", "x");
            FAIL("expected UnknownAttribute");
        } catch (const Error& e) {
            CHECK(e.code == Errc::unknown_attribute);
        }
    }
}

TEST_CASE("type lattice joins match the reachability oracle") {
    std::vector<SemanticType> types{
        {BaseType::integer, {}},    {BaseType::integer, "USD"}, {BaseType::integer, "INR"},
        {BaseType::real, {}},       {BaseType::real, "USD"},    {BaseType::text, {}},
        {BaseType::date, {}},       {BaseType::identifier, {}},
    };
    for (const auto& a : types)
        for (const auto& b : types) {
            auto expected = oracle_join(a, b);
            auto actual = type_join(a, b);
            CHECK(expected.has_value() == actual.has_value());
            if (expected && actual)
                CHECK(*expected == *actual);
            if (actual) { // join is a least upper bound both sides reach
                CHECK(oracle_coercible(a, *actual));
                CHECK(oracle_coercible(b, *actual));
            }
        }
}

TEST_CASE("coercion joins: integer widens to real, units must agree") {
    CHECK(*type_join({BaseType::integer, {}}, {BaseType::real, {}}) ==
          SemanticType{BaseType::real, {}});
    CHECK(*type_join({BaseType::date, {}}, {BaseType::text, {}}) ==
          SemanticType{BaseType::text, {}});
    CHECK(!type_join({BaseType::integer, "USD"}, {BaseType::integer, "INR"}).has_value());
    // the currency example: integer USD joined with a conversion's real USD output
    CHECK(*type_join({BaseType::integer, "USD"}, {BaseType::real, "USD"}) ==
          SemanticType{BaseType::real, "USD"});
}

TEST_CASE("semantic type parsing round-trips and rejects units on non-numeric bases") {
    SemanticType t = parse_semantic_type("integer:USD");
    CHECK(t.base == BaseType::integer);
    CHECK(t.unit == "USD");
    CHECK(parse_semantic_type(to_string(t)) == t);
    CHECK_THROWS_AS(parse_semantic_type("text:USD"), Error);
    CHECK_THROWS_AS(parse_semantic_type("bogus"), Error);
}

TEST_CASE("dates parse the source formats and keep their lexeme for display") {
    Date d = parse_date("27/01/68");
    CHECK(d.year == 1968);
    CHECK(d.month == 1);
    CHECK(d.day == 27);
    CHECK(render_value(Value{d}) == "27/01/68");
    Date d2 = parse_date("13/08/1999");
    CHECK(d2.year == 1999);
    Date iso = parse_date("1999-08-13");
    CHECK(iso == d2); // equality ignores the lexeme
    CHECK_THROWS_AS(parse_date("not-a-date"), Error);
    CHECK_THROWS_AS(parse_date("40/40/2000"), Error);
}

TEST_CASE("values render in shortest form") {
    CHECK(render_value(Value{9.0}) == "9");
    CHECK(render_value(Value{9.6}) == "9.6");
    CHECK(render_value(Value{std::int64_t{28789}}) == "28789");
    CHECK(render_value(Value{}, "\\N") == "\\N");
}

TEST_CASE("schema files parse and serialize losslessly") {
    LocalSchema schema = employees_s1();
    std::string text = serialize_schema(schema);
    CHECK(schema_equal(parse_schema_file(text, "S1"), schema));
    CHECK_THROWS_WITH_AS(parse_schema_file("  stray:integer\n", "S1"),
                         doctest::Contains("line 1"), Error);
    CHECK_THROWS_AS(parse_schema_file("class c\n  bad\n", "S1"), Error);
}

TEST_CASE("attribute specs carry unit and nullable flags") {
    Attribute a = parse_attribute_spec("salary:integer:USD?nullable");
    CHECK(a.name == "salary");
    CHECK(a.type == SemanticType{BaseType::integer, "USD"});
    CHECK(a.nullable);
    CHECK(attribute_spec(a) == "salary:integer:USD?nullable");
}

TEST_CASE("extent files parse NULL markers and quoted values") {
    LocalSchema schema = parse_schema_file("class t\n  a:integer\n  b:text?nullable\n", "S1");
    auto objects =
        parse_extent_file("class t\na=1 b=\"two words\"\na=2 b=NULL\n", schema);
    REQUIRE(objects.size() == 2);
    CHECK(std::get<std::string>(*objects[0].find("b")) == "two words");
    CHECK(is_null(*objects[1].find("b")));
    CHECK_THROWS_AS(parse_extent_file("class t\nq=1\n", schema), Error);
    // non-nullable attribute must not be null
    CHECK_THROWS_AS(parse_extent_file("class t\na=NULL b=x\n", schema), Error);
}

TEST_CASE("object instances validate against their class") {
    LocalSchema schema = parse_schema_file("class t\n  a:integer\n  b:text?nullable\n", "S1");
    ObjectInstance obj;
    obj.cls = schema.classes[0].ref();
    obj.values["a"] = std::int64_t{1};
    CHECK_NOTHROW(obj.validate(schema.classes[0])); // missing nullable reads as null
    obj.values["a"] = std::string("wrong kind");
    CHECK_THROWS_AS(obj.validate(schema.classes[0]), Error);
}

} // TEST_SUITE
