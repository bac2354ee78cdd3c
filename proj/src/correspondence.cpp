#include "mdbs/correspondence.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include "mdbs/errors.hpp"

namespace mdbs {

// ---------------------------------------------------------------------------
// Conversion expression engine
// ---------------------------------------------------------------------------

struct ConversionFunction::Node {
    enum class Op { num, var, add, sub, mul, div, neg } op;
    double num = 0;
    std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using NodePtr = std::shared_ptr<const ConversionFunction::Node>;
using NodeOp = ConversionFunction::Node::Op;

NodePtr make_node(NodeOp op, double num = 0, NodePtr lhs = nullptr, NodePtr rhs = nullptr) {
    auto n = std::make_shared<ConversionFunction::Node>();
    n->op = op;
    n->num = num;
    n->lhs = std::move(lhs);
    n->rhs = std::move(rhs);
    return n;
}

double eval_node(const ConversionFunction::Node& n, double x) {
    switch (n.op) {
    case NodeOp::num: return n.num;
    case NodeOp::var: return x;
    case NodeOp::add: return eval_node(*n.lhs, x) + eval_node(*n.rhs, x);
    case NodeOp::sub: return eval_node(*n.lhs, x) - eval_node(*n.rhs, x);
    case NodeOp::mul: return eval_node(*n.lhs, x) * eval_node(*n.rhs, x);
    case NodeOp::div: return eval_node(*n.lhs, x) / eval_node(*n.rhs, x);
    case NodeOp::neg: return -eval_node(*n.lhs, x);
    }
    return 0;
}

// Reduces the AST to scale*x + offset when the expression is affine in x.
std::optional<std::pair<double, double>> affine_of(const ConversionFunction::Node& n) {
    switch (n.op) {
    case NodeOp::num: return std::pair{0.0, n.num};
    case NodeOp::var: return std::pair{1.0, 0.0};
    case NodeOp::add: {
        auto a = affine_of(*n.lhs), b = affine_of(*n.rhs);
        if (!a || !b) return std::nullopt;
        return std::pair{a->first + b->first, a->second + b->second};
    }
    case NodeOp::sub: {
        auto a = affine_of(*n.lhs), b = affine_of(*n.rhs);
        if (!a || !b) return std::nullopt;
        return std::pair{a->first - b->first, a->second - b->second};
    }
    case NodeOp::mul: {
        auto a = affine_of(*n.lhs), b = affine_of(*n.rhs);
        if (!a || !b) return std::nullopt;
        if (a->first != 0 && b->first != 0) return std::nullopt; // x*x is not affine
        return std::pair{a->first * b->second + b->first * a->second,
                         a->second * b->second};
    }
    case NodeOp::div: {
        auto a = affine_of(*n.lhs), b = affine_of(*n.rhs);
        if (!a || !b || b->first != 0 || b->second == 0) return std::nullopt;
        return std::pair{a->first / b->second, a->second / b->second};
    }
    case NodeOp::neg: {
        auto a = affine_of(*n.lhs);
        if (!a) return std::nullopt;
        return std::pair{-a->first, -a->second};
    }
    }
    return std::nullopt;
}

class ExprParser {
public:
    explicit ExprParser(std::string_view text) : text_(text) {}

    NodePtr parse() {
        NodePtr e = expression();
        skip_ws();
        if (pos_ != text_.size())
            fail(Errc::parse_error, "trailing input in expression '" + std::string(text_) + "'");
        return e;
    }

private:
    NodePtr expression() {
        NodePtr lhs = term();
        for (;;) {
            skip_ws();
            if (accept('+'))
                lhs = make_node(NodeOp::add, 0, lhs, term());
            else if (accept('-'))
                lhs = make_node(NodeOp::sub, 0, lhs, term());
            else
                return lhs;
        }
    }
    NodePtr term() {
        NodePtr lhs = factor();
        for (;;) {
            skip_ws();
            if (accept('*'))
                lhs = make_node(NodeOp::mul, 0, lhs, factor());
            else if (accept('/'))
                lhs = make_node(NodeOp::div, 0, lhs, factor());
            else
                return lhs;
        }
    }
    NodePtr factor() {
        skip_ws();
        if (accept('-'))
            return make_node(NodeOp::neg, 0, factor());
        if (accept('(')) {
            NodePtr e = expression();
            skip_ws();
            if (!accept(')'))
                fail(Errc::parse_error, "missing ')' in expression");
            return e;
        }
        if (pos_ < text_.size() &&
            (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.')) {
            std::size_t start = pos_;
            while (pos_ < text_.size() &&
                   (std::isdigit(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '.' || text_[pos_] == 'e' || text_[pos_] == 'E' ||
                    ((text_[pos_] == '+' || text_[pos_] == '-') &&
                     (text_[pos_ - 1] == 'e' || text_[pos_ - 1] == 'E'))))
                ++pos_;
            return make_node(NodeOp::num,
                             std::stod(std::string(text_.substr(start, pos_ - start))));
        }
        if (pos_ < text_.size() && (text_[pos_] == 'x' || text_[pos_] == 'X')) {
            ++pos_;
            return make_node(NodeOp::var);
        }
        fail(Errc::parse_error, "bad expression '" + std::string(text_) + "'");
    }
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }
    bool accept(char c) {
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    std::string_view text_;
    std::size_t pos_ = 0;
};

double numeric_of(const Value& v) {
    if (std::holds_alternative<std::int64_t>(v))
        return static_cast<double>(std::get<std::int64_t>(v));
    return std::get<double>(v);
}

} // namespace

ConversionFunction ConversionFunction::parse(const std::string& name, SemanticType input,
                                             SemanticType output,
                                             const std::string& definition) {
    ConversionFunction f;
    f.name_ = name;
    f.input_ = input;
    f.output_ = output;
    f.definition_ = definition;
    if (name_eq(definition, "lower") || name_eq(definition, "upper")) {
        if (is_numeric(input.base) || is_numeric(output.base) ||
            input.base == BaseType::date || output.base == BaseType::date)
            fail(Errc::parse_error, "builtin '" + definition + "' needs text types");
        f.builtin_ = name_eq(definition, "lower") ? Builtin::lower : Builtin::upper;
        return f;
    }
    if (!is_numeric(input.base) || !is_numeric(output.base))
        fail(Errc::parse_error,
             "expression conversion '" + name + "' needs numeric input and output");
    f.expr_ = ExprParser(definition).parse();
    f.affine_ = affine_of(*f.expr_);
    return f;
}

bool ConversionFunction::invertible() const {
    return affine_ && affine_->first != 0;
}

Value ConversionFunction::apply(const Value& v) const {
    if (is_null(v))
        return v;
    if (builtin_ != Builtin::none) {
        std::string s = std::get<std::string>(v);
        std::transform(s.begin(), s.end(), s.begin(), [this](unsigned char c) {
            return builtin_ == Builtin::lower ? std::tolower(c) : std::toupper(c);
        });
        return s;
    }
    double y = eval_node(*expr_, numeric_of(v));
    if (output_.base == BaseType::integer)
        return static_cast<std::int64_t>(std::llround(y));
    return y;
}

std::optional<Value> ConversionFunction::invert(const Value& global_literal,
                                                bool& flips_order) const {
    if (!invertible() || is_null(global_literal))
        return std::nullopt;
    if (!std::holds_alternative<std::int64_t>(global_literal) &&
        !std::holds_alternative<double>(global_literal))
        return std::nullopt;
    double y = numeric_of(global_literal);
    double x = (y - affine_->second) / affine_->first;
    flips_order = affine_->first < 0;
    return Value{x};
}

// ---------------------------------------------------------------------------
// Assertion DSL
// ---------------------------------------------------------------------------

const char* relation_kind_name(RelationKind k) {
    switch (k) {
    case RelationKind::equivalence: return "equivalence";
    case RelationKind::synonymy: return "synonymy";
    case RelationKind::containment: return "containment";
    case RelationKind::homonymy: return "homonymy";
    }
    return "?";
}

std::string AttributeMemberRef::display() const {
    std::string s = site + "." + class_name + "." + attribute;
    if (conversion)
        s = *conversion + "(" + s + ")";
    return s;
}

const ConversionFunction* AssertionStore::find_conversion(std::string_view name) const {
    auto it = conversions.find(name);
    return it == conversions.end() ? nullptr : &it->second;
}

std::vector<const CorrespondenceAssertion*> AssertionStore::between(const ClassRef& a,
                                                                    const ClassRef& b) const {
    std::vector<const CorrespondenceAssertion*> out;
    for (const auto& assertion : assertions)
        if (assertion.covers(a, b))
            out.push_back(&assertion);
    return out;
}

namespace {

struct Token {
    enum class Type { word, symbol, string, end } type = Type::end;
    std::string text;
    int line = 0;
    int col = 0;
};

class Lexer {
public:
    explicit Lexer(std::string_view text) : text_(text) {}

    Token next() {
        skip_ws_and_comments();
        Token t;
        t.line = line_;
        t.col = col_;
        if (pos_ >= text_.size())
            return t;
        char c = text_[pos_];
        if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
            t.type = Token::Type::word;
            while (pos_ < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[pos_])) ||
                    text_[pos_] == '_' || text_[pos_] == '.'))
                t.text.push_back(advance());
            return t;
        }
        // the correspond-to sign: == or the UTF-8 identity symbol
        if (c == '=' && peek(1) == '=') {
            advance(); advance();
            t.type = Token::Type::symbol;
            t.text = "==";
            return t;
        }
        if (static_cast<unsigned char>(c) == 0xE2 &&
            static_cast<unsigned char>(peek(1)) == 0x89 &&
            static_cast<unsigned char>(peek(2)) == 0xA1) {
            advance(); advance(); advance();
            t.type = Token::Type::symbol;
            t.text = "==";
            return t;
        }
        if (c == '-' && peek(1) == '>') {
            advance(); advance();
            t.type = Token::Type::symbol;
            t.text = "->";
            return t;
        }
        t.type = Token::Type::symbol;
        t.text = std::string(1, advance());
        return t;
    }

    // Raw capture until end of line, for conversion definitions.
    std::string rest_of_line() {
        std::string out;
        while (pos_ < text_.size() && text_[pos_] != '\n')
            out.push_back(advance());
        return out;
    }

private:
    char peek(std::size_t off) const {
        return pos_ + off < text_.size() ? text_[pos_ + off] : '\0';
    }
    char advance() {
        char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }
    void skip_ws_and_comments() {
        for (;;) {
            while (pos_ < text_.size() &&
                   std::isspace(static_cast<unsigned char>(text_[pos_])))
                advance();
            if (pos_ < text_.size() && text_[pos_] == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n')
                    advance();
                continue;
            }
            return;
        }
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

[[noreturn]] void syntax_fail(const Token& t, const std::string& msg) {
    fail(Errc::parse_error,
         "line " + std::to_string(t.line) + ", col " + std::to_string(t.col) + ": " + msg);
}

class AssertionParser {
public:
    AssertionParser(const std::string& text, const SchemaMap& schemas, bool strict)
        : lexer_(text), schemas_(schemas), strict_(strict) {
        bump();
    }

    AssertionStore parse() {
        AssertionStore store;
        while (cur_.type != Token::Type::end) {
            if (cur_.type != Token::Type::word)
                syntax_fail(cur_, "expected a statement keyword");
            if (name_eq(cur_.text, "conversion"))
                parse_conversion(store);
            else
                parse_assertion(store);
        }
        return store;
    }

private:
    void bump() { cur_ = lexer_.next(); }

    std::string expect_word(const char* what) {
        if (cur_.type != Token::Type::word)
            syntax_fail(cur_, std::string("expected ") + what);
        std::string w = cur_.text;
        bump();
        return w;
    }

    void expect_symbol(const std::string& sym) {
        if (cur_.type != Token::Type::symbol || cur_.text != sym)
            syntax_fail(cur_, "expected '" + sym + "'");
        bump();
    }

    bool accept_symbol(const std::string& sym) {
        if (cur_.type == Token::Type::symbol && cur_.text == sym) {
            bump();
            return true;
        }
        return false;
    }

    SemanticType parse_type() {
        Token at = cur_;
        std::string spec = expect_word("a type");
        if (accept_symbol(":"))
            spec += ":" + expect_word("a unit tag");
        try {
            return parse_semantic_type(spec);
        } catch (const Error& e) {
            syntax_fail(at, e.what());
        }
    }

    // conversion <name> ( <type> ) -> <type> = <expr or builtin to end of line>
    void parse_conversion(AssertionStore& store) {
        Token at = cur_;
        bump();
        std::string name = expect_word("a conversion name");
        expect_symbol("(");
        SemanticType input = parse_type();
        expect_symbol(")");
        expect_symbol("->");
        SemanticType output = parse_type();
        expect_symbol("=");
        // definition runs to end of line; the current token is its first piece
        std::string def = cur_.type == Token::Type::end ? "" : cur_.text;
        def += lexer_.rest_of_line();
        if (def.empty())
            syntax_fail(cur_, "conversion without a definition");
        if (store.conversions.contains(name))
            syntax_fail(at, "conversion '" + name + "' redefined");
        try {
            store.conversions.emplace(name,
                                      ConversionFunction::parse(name, input, output, def));
        } catch (const Error& e) {
            syntax_fail(at, e.what());
        }
        bump();
    }

    ClassRef parse_class_ref() {
        Token at = cur_;
        std::string w = expect_word("site.class");
        auto dot = w.find('.');
        if (dot == std::string::npos || dot == 0 || dot + 1 >= w.size())
            syntax_fail(at, "expected <site>.<class>, got '" + w + "'");
        return ClassRef{w.substr(0, dot), w.substr(dot + 1)};
    }

    // [key] <attr> == <attr> | fn(<attr>) on either side
    void parse_correspondence(CorrespondenceAssertion& a) {
        Token at = cur_;
        bool is_key = false;
        if (cur_.type == Token::Type::word && name_eq(cur_.text, "key")) {
            is_key = true;
            bump();
        }
        auto parse_side = [&](const ClassRef& cls) {
            AttributeMemberRef m;
            m.site = cls.site;
            m.class_name = cls.class_name;
            std::string w = expect_word("an attribute");
            if (accept_symbol("(")) {
                m.conversion = w;
                m.attribute = expect_word("an attribute");
                expect_symbol(")");
            } else {
                m.attribute = w;
            }
            return m;
        };
        AttributeMemberRef lhs = parse_side(a.left);
        expect_symbol("==");
        AttributeMemberRef rhs = parse_side(a.right);
        std::string global_name = lhs.attribute;
        if (cur_.type == Token::Type::word && name_eq(cur_.text, "as")) {
            bump();
            global_name = expect_word("a global attribute name");
        }
        expect_symbol(";");

        AttributeCorrespondence corr;
        corr.global_name = global_name;
        corr.members = {std::move(lhs), std::move(rhs)};
        corr.is_key = is_key;
        if (is_key) {
            if (a.key_link)
                syntax_fail(at, "more than one key correspondence");
            a.key_link = a.correspondences.size();
        }
        a.correspondences.push_back(std::move(corr));
    }

    void parse_assertion(AssertionStore& store) {
        Token at = cur_;
        std::string rel = expect_word("a relation keyword");
        CorrespondenceAssertion a;
        if (name_eq(rel, "equivalence"))
            a.relation = RelationKind::equivalence;
        else if (name_eq(rel, "synonymy"))
            a.relation = RelationKind::synonymy;
        else if (name_eq(rel, "containment"))
            a.relation = RelationKind::containment;
        else if (name_eq(rel, "homonymy"))
            a.relation = RelationKind::homonymy;
        else
            syntax_fail(at, "unknown relation '" + rel + "'");
        a.left = parse_class_ref();
        expect_symbol("~");
        a.right = parse_class_ref();
        if (accept_symbol("{")) {
            while (!accept_symbol("}"))
                parse_correspondence(a);
        }
        if (a.relation == RelationKind::homonymy && !a.correspondences.empty())
            syntax_fail(at, "homonymy assertions carry no attribute correspondences");
        if (a.left == a.right)
            syntax_fail(at, "assertion relates a class to itself");
        if (strict_)
            validate(a, store, at);
        store.assertions.push_back(std::move(a));
    }

    void validate(const CorrespondenceAssertion& a, const AssertionStore& store,
                  const Token& at) {
        auto find_class = [&](const ClassRef& ref) -> const LocalClass& {
            auto site = schemas_.find(ref.site);
            if (site == schemas_.end())
                fail(Errc::unknown_reference, "site '" + ref.site + "' is not registered");
            const LocalClass* cls = site->second.find_class(ref.class_name);
            if (!cls)
                fail(Errc::unknown_reference, "class '" + ref.display() + "' is not registered");
            return *cls;
        };
        try {
            const LocalClass& left = find_class(a.left);
            const LocalClass& right = find_class(a.right);
            std::set<std::string> used; // partition within the assertion
            for (const auto& corr : a.correspondences) {
                std::optional<SemanticType> joined;
                for (const auto& m : corr.members) {
                    bool is_left = name_eq(m.site, a.left.site) &&
                                   name_eq(m.class_name, a.left.class_name);
                    const LocalClass& owner = is_left ? left : right;
                    const Attribute* attr = owner.find_attribute(m.attribute);
                    if (!attr)
                        fail(Errc::unknown_reference,
                             "attribute '" + m.display() + "' is not registered");
                    if (!used.insert(fold_name(owner.site) + "." + fold_name(owner.name) +
                                     "." + fold_name(attr->name))
                             .second)
                        fail(Errc::inconsistent_assertion,
                             "attribute '" + m.display() + "' corresponded twice");
                    SemanticType member_type = attr->type;
                    if (m.conversion) {
                        const ConversionFunction* f = store.find_conversion(*m.conversion);
                        if (!f)
                            fail(Errc::unknown_reference,
                                 "conversion '" + *m.conversion + "' is not defined");
                        if (!coercible(attr->type, f->input_type()))
                            fail(Errc::type_mismatch,
                                 "attribute '" + m.display() + "' of type " +
                                     to_string(attr->type) + " does not feed " +
                                     to_string(f->input_type()));
                        member_type = f->output_type();
                    }
                    if (!joined)
                        joined = member_type;
                    else {
                        auto j = type_join(*joined, member_type);
                        if (!j)
                            fail(Errc::type_mismatch,
                                 "members of '" + corr.global_name +
                                     "' have no common global type (" +
                                     to_string(*joined) + " vs " + to_string(member_type) +
                                     ")");
                        joined = *j;
                    }
                    if (corr.is_key && !owner.is_exact_key(attr->name))
                        fail(Errc::inconsistent_assertion,
                             "key correspondence on '" + m.display() +
                                 "' which is not the key of " + owner.site + "." +
                                 owner.name);
                }
            }
        } catch (const Error& e) {
            if (e.code == Errc::parse_error)
                throw;
            throw Error(e.code, "line " + std::to_string(at.line) + ": " + e.what());
        }
    }

    Lexer lexer_;
    Token cur_;
    const SchemaMap& schemas_;
    bool strict_;
};

} // namespace

AssertionStore parse_assertions(const std::string& text, const SchemaMap& schemas,
                                bool strict) {
    return AssertionParser(text, schemas, strict).parse();
}

std::string pretty_print(const AssertionStore& store) {
    std::string out;
    for (const auto& [name, f] : store.conversions)
        out += "conversion " + name + "(" + to_string(f.input_type()) + ") -> " +
               to_string(f.output_type()) + " = " + f.definition() + "\n";
    for (const auto& a : store.assertions) {
        out += std::string(relation_kind_name(a.relation)) + " " + a.left.display() + " ~ " +
               a.right.display();
        if (a.correspondences.empty()) {
            out += "\n";
            continue;
        }
        out += " {\n";
        for (const auto& corr : a.correspondences) {
            out += "  ";
            if (corr.is_key)
                out += "key ";
            bool first = true;
            for (const auto& m : corr.members) {
                if (!first)
                    out += " == ";
                first = false;
                if (m.conversion)
                    out += *m.conversion + "(" + m.attribute + ")";
                else
                    out += m.attribute;
            }
            // a member rename may have detached the global name from the
            // left-hand spelling; keep it explicit so it survives reloads
            if (!corr.members.empty() && corr.global_name != corr.members[0].attribute)
                out += " as " + corr.global_name;
            out += ";\n";
        }
        out += "}\n";
    }
    return out;
}

RelationKind classify_pair(const LocalClass& c1, const LocalClass& c2,
                           const CorrespondenceAssertion& assertion) {
    bool same_name = name_eq(c1.name, c2.name);
    switch (assertion.relation) {
    case RelationKind::equivalence:
        if (!same_name)
            fail(Errc::inconsistent_assertion,
                 "equivalence requires the same class name ('" + c1.name + "' vs '" +
                     c2.name + "')");
        return RelationKind::equivalence;
    case RelationKind::synonymy:
        if (same_name)
            fail(Errc::inconsistent_assertion,
                 "synonymy requires different class names; '" + c1.name + "' and '" +
                     c2.name + "' collide (homonymy would apply)");
        return RelationKind::synonymy;
    case RelationKind::homonymy:
        if (!same_name)
            fail(Errc::inconsistent_assertion,
                 "homonymy requires the same class name ('" + c1.name + "' vs '" + c2.name +
                     "')");
        return RelationKind::homonymy;
    case RelationKind::containment: {
        // The contained (left) class must cover every mapped attribute of the
        // container: its correspondence-mapped attribute set is a superset.
        const LocalClass& contained = name_eq(c1.site, assertion.left.site) &&
                                              name_eq(c1.name, assertion.left.class_name)
                                          ? c1
                                          : c2;
        const LocalClass& container = &contained == &c1 ? c2 : c1;
        auto mapped_names = [&](const LocalClass& cls) {
            std::set<std::string> names;
            for (const auto& attr : cls.attributes) {
                std::string global = attr.name;
                for (const auto& corr : assertion.correspondences)
                    for (const auto& m : corr.members)
                        if (name_eq(m.site, cls.site) && name_eq(m.class_name, cls.name) &&
                            name_eq(m.attribute, attr.name))
                            global = corr.global_name;
                names.insert(fold_name(global));
            }
            return names;
        };
        std::set<std::string> sub = mapped_names(contained);
        for (const auto& n : mapped_names(container))
            if (!sub.contains(n))
                fail(Errc::inconsistent_assertion,
                     "containment: contained class " + contained.site + "." + contained.name +
                         " lacks attribute '" + n + "' of its container");
        return RelationKind::containment;
    }
    }
    fail(Errc::inconsistent_assertion, "unreachable relation kind");
}

// ---------------------------------------------------------------------------
// Partition derivation
// ---------------------------------------------------------------------------

const AttributeMemberRef* GlobalAttribute::binding_for(const ClassRef& c) const {
    for (const auto& b : bindings)
        if (name_eq(b.site, c.site) && name_eq(b.class_name, c.class_name))
            return &b;
    return nullptr;
}

namespace {

std::string member_key(const AttributeMemberRef& m) {
    return fold_name(m.site) + "." + fold_name(m.class_name) + "." + fold_name(m.attribute);
}

struct Cell {
    DerivedAttribute derived;
    std::optional<SemanticType> joined;
    bool from_correspondence = false;
};

} // namespace

std::vector<DerivedAttribute>
derive_attribute_partition(const std::vector<ClassRef>& constituents,
                           const std::vector<const CorrespondenceAssertion*>& assertions,
                           const SchemaMap& schemas, const AssertionStore& store,
                           std::vector<std::string>& warnings) {
    auto resolve_class = [&](const ClassRef& ref) -> const LocalClass* {
        auto site = schemas.find(ref.site);
        if (site == schemas.end())
            return nullptr;
        return site->second.find_class(ref.class_name);
    };
    auto constituent_of = [&](const AttributeMemberRef& m) -> const ClassRef* {
        for (const auto& c : constituents)
            if (name_eq(c.site, m.site) && name_eq(c.class_name, m.class_name))
                return &c;
        return nullptr;
    };

    std::vector<Cell> cells;
    std::map<std::string, std::size_t> by_name;  // folded global name -> cell
    std::map<std::string, std::size_t> claimed;  // folded member triple -> cell

    auto add_member = [&](std::size_t cell_idx, const AttributeMemberRef& m,
                          const Attribute& attr) {
        Cell& cell = cells[cell_idx];
        auto [it, fresh] = claimed.emplace(member_key(m), cell_idx);
        if (!fresh) {
            if (it->second != cell_idx)
                warnings.push_back("attribute " + m.site + "." + m.class_name + "." +
                                   m.attribute +
                                   " is claimed by more than one correspondence; keeping "
                                   "the first mapping");
            return;
        }
        SemanticType member_type = attr.type;
        if (m.conversion) {
            const ConversionFunction* f = store.find_conversion(*m.conversion);
            if (f)
                member_type = f->output_type();
        }
        if (!cell.joined)
            cell.joined = member_type;
        else {
            auto j = type_join(*cell.joined, member_type);
            if (!j)
                fail(Errc::type_mismatch,
                     "global attribute '" + cell.derived.attr.name +
                         "' has no common type: " + to_string(*cell.joined) + " vs " +
                         to_string(member_type) + " from " + m.display());
            cell.joined = *j;
        }
        cell.derived.attr.bindings.push_back(m);
        cell.derived.any_member_nullable |= attr.nullable;
        cell.derived.all_members_nullable &= attr.nullable;
    };

    // Correspondence groups first, in document order; groups from different
    // pairwise assertions compose when they share a global name.
    for (const CorrespondenceAssertion* a : assertions) {
        if (!a)
            continue;
        for (const auto& corr : a->correspondences) {
            std::vector<std::pair<AttributeMemberRef, const Attribute*>> live;
            for (const auto& m : corr.members) {
                if (!constituent_of(m))
                    continue;
                const LocalClass* cls = resolve_class(ClassRef{m.site, m.class_name});
                const Attribute* attr = cls ? cls->find_attribute(m.attribute) : nullptr;
                if (!attr)
                    continue; // dangling after local evolution; derivation skips it
                live.emplace_back(m, attr);
            }
            if (live.empty())
                continue;
            std::size_t idx;
            auto found = by_name.find(fold_name(corr.global_name));
            if (found != by_name.end()) {
                idx = found->second;
            } else {
                idx = cells.size();
                cells.emplace_back();
                cells[idx].derived.attr.name = corr.global_name;
                cells[idx].from_correspondence = true;
                by_name.emplace(fold_name(corr.global_name), idx);
            }
            cells[idx].derived.attr.is_key |= corr.is_key;
            for (auto& [m, attr] : live)
                add_member(idx, m, *attr);
        }
    }

    // Unmatched local attributes promote under their own name; collisions get
    // a site suffix.
    for (const auto& ref : constituents) {
        const LocalClass* cls = resolve_class(ref);
        if (!cls)
            fail(Errc::unknown_class, "missing constituent " + ref.display());
        for (const auto& attr : cls->attributes) {
            AttributeMemberRef m{ref.site, cls->name, attr.name, std::nullopt};
            if (claimed.contains(member_key(m)))
                continue;
            std::string global = attr.name;
            if (by_name.contains(fold_name(global))) {
                global = attr.name + "_" + ref.site;
                warnings.push_back("attribute name '" + attr.name + "' collides across "
                                   "constituents; promoted as '" + global + "'");
                for (int i = 2; by_name.contains(fold_name(global)); ++i)
                    global = attr.name + "_" + ref.site + "_" + std::to_string(i);
            }
            std::size_t idx = cells.size();
            cells.emplace_back();
            cells[idx].derived.attr.name = global;
            by_name.emplace(fold_name(global), idx);
            add_member(idx, m, attr);
        }
    }

    std::vector<DerivedAttribute> out;
    out.reserve(cells.size());
    for (auto& cell : cells) {
        DerivedAttribute& d = cell.derived;
        if (d.attr.bindings.empty())
            continue;
        d.attr.type = cell.joined.value_or(SemanticType{});
        std::set<std::string> owners;
        bool keys_everywhere = true;
        for (const auto& b : d.attr.bindings) {
            owners.insert(fold_name(b.site) + "." + fold_name(b.class_name));
            const LocalClass* cls = resolve_class(ClassRef{b.site, b.class_name});
            keys_everywhere &= cls && cls->is_exact_key(b.attribute);
        }
        d.support = owners.size();
        d.key_capable = d.attr.is_key && keys_everywhere && d.support == constituents.size();
        out.push_back(std::move(d));
    }
    return out;
}

std::vector<GlobalAttribute> global_attribute_set(const CorrespondenceAssertion& assertion,
                                                  const SchemaMap& schemas,
                                                  const AssertionStore& store) {
    std::vector<std::string> warnings;
    std::vector<const CorrespondenceAssertion*> as{&assertion};
    auto partition = derive_attribute_partition({assertion.left, assertion.right}, as,
                                                schemas, store, warnings);
    std::vector<GlobalAttribute> out;
    out.reserve(partition.size());
    for (auto& d : partition)
        out.push_back(std::move(d.attr));
    return out;
}

} // namespace mdbs
