#include "mdbs/types.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <set>

#include "mdbs/errors.hpp"

namespace mdbs {

const char* base_type_name(BaseType b) {
    switch (b) {
    case BaseType::integer: return "integer";
    case BaseType::real: return "real";
    case BaseType::text: return "text";
    case BaseType::date: return "date";
    case BaseType::identifier: return "identifier";
    }
    return "?";
}

bool is_numeric(BaseType b) { return b == BaseType::integer || b == BaseType::real; }

std::optional<SemanticType> type_join(const SemanticType& a, const SemanticType& b) {
    if (a == b)
        return a;
    if (is_numeric(a.base) && is_numeric(b.base)) {
        if (a.unit != b.unit)
            return std::nullopt;
        return SemanticType{BaseType::real, a.unit};
    }
    return SemanticType{BaseType::text, {}};
}

bool coercible(const SemanticType& from, const SemanticType& to) {
    auto j = type_join(from, to);
    return j && *j == to;
}

std::string to_string(const SemanticType& t) {
    std::string s = base_type_name(t.base);
    if (!t.unit.empty())
        s += ":" + t.unit;
    return s;
}

SemanticType parse_semantic_type(std::string_view text) {
    std::string_view base = text;
    std::string unit;
    if (auto pos = text.find(':'); pos != std::string_view::npos) {
        base = text.substr(0, pos);
        unit = std::string(text.substr(pos + 1));
    }
    SemanticType t;
    if (name_eq(base, "integer") || name_eq(base, "int"))
        t.base = BaseType::integer;
    else if (name_eq(base, "real"))
        t.base = BaseType::real;
    else if (name_eq(base, "text"))
        t.base = BaseType::text;
    else if (name_eq(base, "date"))
        t.base = BaseType::date;
    else if (name_eq(base, "identifier"))
        t.base = BaseType::identifier;
    else
        fail(Errc::parse_error, "unknown type '" + std::string(text) + "'");
    if (!unit.empty() && !is_numeric(t.base))
        fail(Errc::parse_error, "unit tag on non-numeric type '" + std::string(text) + "'");
    t.unit = unit;
    return t;
}

// ---------------------------------------------------------------------------
// Values
// ---------------------------------------------------------------------------

namespace {

enum class Kind { null, integer, real, text, date };

Kind kind_of(const Value& v) {
    return static_cast<Kind>(v.index());
}

std::string render_double(double d) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    return std::string(buf, res.ptr);
}

} // namespace

bool value_conforms(const Value& v, const SemanticType& t) {
    switch (kind_of(v)) {
    case Kind::null: return true;
    case Kind::integer: return t.base == BaseType::integer;
    case Kind::real: return t.base == BaseType::real;
    case Kind::text: return t.base == BaseType::text || t.base == BaseType::identifier;
    case Kind::date: return t.base == BaseType::date;
    }
    return false;
}

Value coerce_value(const Value& v, const SemanticType& to) {
    if (is_null(v) || value_conforms(v, to))
        return v;
    if (to.base == BaseType::real && std::holds_alternative<std::int64_t>(v))
        return static_cast<double>(std::get<std::int64_t>(v));
    if (to.base == BaseType::text || to.base == BaseType::identifier)
        return render_value(v);
    return v;
}

Value default_value(const SemanticType& t) {
    switch (t.base) {
    case BaseType::integer: return std::int64_t{0};
    case BaseType::real: return 0.0;
    case BaseType::text:
    case BaseType::identifier: return std::string{};
    case BaseType::date: return Date{1970, 1, 1, "1970-01-01"};
    }
    return {};
}

std::optional<int> compare_values(const Value& a, const Value& b) {
    if (is_null(a) || is_null(b))
        return std::nullopt;
    Kind ka = kind_of(a), kb = kind_of(b);
    auto cmp = [](auto x, auto y) { return x < y ? -1 : (y < x ? 1 : 0); };
    if ((ka == Kind::integer || ka == Kind::real) && (kb == Kind::integer || kb == Kind::real)) {
        long double x = ka == Kind::integer
                            ? static_cast<long double>(std::get<std::int64_t>(a))
                            : static_cast<long double>(std::get<double>(a));
        long double y = kb == Kind::integer
                            ? static_cast<long double>(std::get<std::int64_t>(b))
                            : static_cast<long double>(std::get<double>(b));
        return cmp(x, y);
    }
    if (ka != kb)
        return std::nullopt;
    if (ka == Kind::text)
        return cmp(std::get<std::string>(a), std::get<std::string>(b));
    if (ka == Kind::date) {
        const Date& x = std::get<Date>(a);
        const Date& y = std::get<Date>(b);
        return cmp(std::tuple(x.year, x.month, x.day), std::tuple(y.year, y.month, y.day));
    }
    return std::nullopt;
}

bool values_equal(const Value& a, const Value& b) {
    if (is_null(a) && is_null(b))
        return true;
    auto c = compare_values(a, b);
    return c && *c == 0;
}

bool value_less(const Value& a, const Value& b) {
    Kind ka = kind_of(a), kb = kind_of(b);
    bool na = ka == Kind::null, nb = kb == Kind::null;
    if (na || nb)
        return na && !nb;
    if (auto c = compare_values(a, b))
        return *c < 0;
    return static_cast<int>(ka) < static_cast<int>(kb);
}

std::string render_value(const Value& v, const std::string& null_literal) {
    switch (kind_of(v)) {
    case Kind::null: return null_literal;
    case Kind::integer: return std::to_string(std::get<std::int64_t>(v));
    case Kind::real: return render_double(std::get<double>(v));
    case Kind::text: return std::get<std::string>(v);
    case Kind::date: {
        const Date& d = std::get<Date>(v);
        if (!d.lexeme.empty())
            return d.lexeme;
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year, d.month, d.day);
        return buf;
    }
    }
    return null_literal;
}

Date parse_date(std::string_view lexeme) {
    int a = 0, b = 0, c = 0;
    char sep = 0;
    std::string s(lexeme);
    Date d;
    d.lexeme = s;
    if (std::sscanf(s.c_str(), "%d%c%d%c%d", &a, &sep, &b, &sep, &c) == 5) {
        if (s.find('-') != std::string::npos && s.find('/') == std::string::npos) {
            d.year = a; d.month = b; d.day = c; // ISO yyyy-mm-dd
        } else {
            d.day = a; d.month = b; d.year = c; // dd/mm/yy or dd/mm/yyyy
            if (d.year < 100)
                d.year += d.year >= 50 ? 1900 : 2000;
        }
        if (d.month >= 1 && d.month <= 12 && d.day >= 1 && d.day <= 31)
            return d;
    }
    fail(Errc::parse_error, "bad date literal '" + s + "'");
}

Value parse_value(std::string_view lexeme, const SemanticType& t) {
    std::string s(lexeme);
    switch (t.base) {
    case BaseType::integer: {
        std::int64_t n = 0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), n);
        if (ec != std::errc{} || p != s.data() + s.size())
            fail(Errc::parse_error, "bad integer literal '" + s + "'");
        return n;
    }
    case BaseType::real: {
        char* end = nullptr;
        double d = std::strtod(s.c_str(), &end);
        if (end != s.c_str() + s.size() || s.empty())
            fail(Errc::parse_error, "bad real literal '" + s + "'");
        return d;
    }
    case BaseType::text:
    case BaseType::identifier:
        return s;
    case BaseType::date:
        return parse_date(s);
    }
    fail(Errc::parse_error, "bad literal '" + s + "'");
}

// ---------------------------------------------------------------------------
// Local schema objects
// ---------------------------------------------------------------------------

const Attribute* LocalClass::find_attribute(std::string_view attr) const {
    for (const auto& a : attributes)
        if (name_eq(a.name, attr))
            return &a;
    return nullptr;
}

Attribute* LocalClass::find_attribute(std::string_view attr) {
    return const_cast<Attribute*>(std::as_const(*this).find_attribute(attr));
}

void LocalClass::validate() const {
    if (name.empty())
        fail(Errc::invalid_schema, "class with empty name at site " + site);
    std::set<std::string> seen;
    for (const auto& a : attributes) {
        if (a.name.empty())
            fail(Errc::invalid_schema, "empty attribute name in " + site + "." + name);
        if (!seen.insert(fold_name(a.name)).second)
            fail(Errc::invalid_schema,
                 "duplicate attribute '" + a.name + "' in " + site + "." + name);
        if (!a.type.unit.empty() && !is_numeric(a.type.base))
            fail(Errc::invalid_schema,
                 "unit on non-numeric attribute '" + a.name + "' in " + site + "." + name);
    }
    if (!key.empty()) {
        std::set<std::string> key_seen;
        for (const auto& k : key) {
            if (!find_attribute(k))
                fail(Errc::invalid_schema,
                     "key attribute '" + k + "' not in " + site + "." + name);
            if (!key_seen.insert(fold_name(k)).second)
                fail(Errc::invalid_schema, "duplicate key attribute '" + k + "'");
        }
    }
}

const LocalClass* LocalSchema::find_class(std::string_view cls) const {
    for (const auto& c : classes)
        if (name_eq(c.name, cls))
            return &c;
    return nullptr;
}

LocalClass* LocalSchema::find_class(std::string_view cls) {
    return const_cast<LocalClass*>(std::as_const(*this).find_class(cls));
}

void LocalSchema::validate() const {
    if (site.empty())
        fail(Errc::invalid_schema, "schema with empty site id");
    std::set<std::string> seen;
    for (const auto& c : classes) {
        if (!name_eq(c.site, site))
            fail(Errc::invalid_schema, "class " + c.name + " carries foreign site id");
        if (!seen.insert(fold_name(c.name)).second)
            fail(Errc::invalid_schema, "duplicate class '" + c.name + "' at site " + site);
        c.validate();
    }
}

bool schema_equal(const LocalSchema& a, const LocalSchema& b) {
    if (!name_eq(a.site, b.site) || a.classes.size() != b.classes.size())
        return false;
    for (std::size_t i = 0; i < a.classes.size(); ++i) {
        const LocalClass& x = a.classes[i];
        const LocalClass& y = b.classes[i];
        if (x.name != y.name || x.attributes.size() != y.attributes.size() || x.key != y.key)
            return false;
        for (std::size_t j = 0; j < x.attributes.size(); ++j) {
            const Attribute& p = x.attributes[j];
            const Attribute& q = y.attributes[j];
            if (p.name != q.name || !(p.type == q.type) || p.nullable != q.nullable)
                return false;
        }
    }
    return true;
}

const Value* ObjectInstance::find(std::string_view attr) const {
    auto it = values.find(attr);
    return it == values.end() ? nullptr : &it->second;
}

void ObjectInstance::validate(const LocalClass& owner) const {
    for (const auto& [k, v] : values) {
        const Attribute* a = owner.find_attribute(k);
        if (!a)
            fail(Errc::invalid_schema,
                 "object value for unknown attribute '" + k + "' of " + cls.display());
        if (!value_conforms(v, a->type))
            fail(Errc::invalid_schema,
                 "value '" + render_value(v) + "' does not conform to " +
                     to_string(a->type) + " for " + cls.display() + "." + a->name);
    }
    for (const auto& a : owner.attributes) {
        if (a.nullable)
            continue;
        const Value* v = find(a.name);
        if (!v || is_null(*v))
            fail(Errc::invalid_schema,
                 "null in non-nullable attribute '" + a.name + "' of " + cls.display());
    }
}

} // namespace mdbs
