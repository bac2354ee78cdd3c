#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mdbs/names.hpp"

namespace mdbs {

using SiteId = std::string;

// ---------------------------------------------------------------------------
// Semantic types
// ---------------------------------------------------------------------------

enum class BaseType { integer, real, text, date, identifier };

const char* base_type_name(BaseType b);
bool is_numeric(BaseType b);

// A value domain plus an optional unit tag (currency code, "years", ...).
// Units are only meaningful on numeric bases.
struct SemanticType {
    BaseType base = BaseType::text;
    std::string unit; // empty = no unit

    bool operator==(const SemanticType&) const = default;
};

// Least upper bound in the coercion lattice: integer -> real (same unit),
// anything -> text. Numeric types with differing units have no join; bridging
// them takes an explicit conversion function.
std::optional<SemanticType> type_join(const SemanticType& a, const SemanticType& b);
bool coercible(const SemanticType& from, const SemanticType& to);

std::string to_string(const SemanticType& t);           // "integer:USD", "text"
SemanticType parse_semantic_type(std::string_view text); // throws ParseError

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

// Dates keep the lexical form they were ingested with; comparisons and
// equality use the normalized fields only.
struct Date {
    int year = 1970;
    int month = 1;
    int day = 1;
    std::string lexeme;

    friend bool operator==(const Date& a, const Date& b) {
        return a.year == b.year && a.month == b.month && a.day == b.day;
    }
};

using Value = std::variant<std::monostate, std::int64_t, double, std::string, Date>;

inline bool is_null(const Value& v) { return std::holds_alternative<std::monostate>(v); }

bool value_conforms(const Value& v, const SemanticType& t);
// Rewrites v into the representation of `to` (int -> double, anything -> text).
// Assumes coercible(current type, to).
Value coerce_value(const Value& v, const SemanticType& to);
Value default_value(const SemanticType& t); // backfill for non-nullable attributes

// Three-way comparison used by predicates; nullopt when either side is null or
// the kinds are incomparable (a null comparison satisfies no predicate).
std::optional<int> compare_values(const Value& a, const Value& b);
bool values_equal(const Value& a, const Value& b);
// Total order for canonical row sorting (null first, then by kind, then value).
bool value_less(const Value& a, const Value& b);

std::string render_value(const Value& v, const std::string& null_literal = "NULL");
Value parse_value(std::string_view lexeme, const SemanticType& t); // throws ParseError
Date parse_date(std::string_view lexeme);                          // throws ParseError

// ---------------------------------------------------------------------------
// Local schema objects
// ---------------------------------------------------------------------------

struct Attribute {
    std::string name;
    SemanticType type;
    bool nullable = false;
};

struct ClassRef {
    SiteId site;
    std::string class_name;

    friend bool operator==(const ClassRef& a, const ClassRef& b) {
        return name_eq(a.site, b.site) && name_eq(a.class_name, b.class_name);
    }
    std::string display() const { return site + "." + class_name; }
};

struct LocalClass {
    SiteId site;
    std::string name;
    std::vector<Attribute> attributes; // order preserved for display only
    std::vector<std::string> key;      // empty = no declared key

    const Attribute* find_attribute(std::string_view attr) const;
    Attribute* find_attribute(std::string_view attr);
    bool is_exact_key(std::string_view attr) const {
        return key.size() == 1 && name_eq(key[0], attr);
    }
    ClassRef ref() const { return {site, name}; }
    void validate() const; // throws InvalidSchema
};

struct LocalSchema {
    SiteId site;
    std::vector<LocalClass> classes;

    const LocalClass* find_class(std::string_view cls) const;
    LocalClass* find_class(std::string_view cls);
    void validate() const; // throws InvalidSchema
};

bool schema_equal(const LocalSchema& a, const LocalSchema& b);

// One object of a local class. Attributes missing from the map read as null.
struct ObjectInstance {
    ClassRef cls;
    std::map<std::string, Value, NameLess> values;

    const Value* find(std::string_view attr) const;
    void validate(const LocalClass& owner) const; // throws InvalidSchema
};

} // namespace mdbs
