#include "mdbs/integration.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "mdbs/errors.hpp"

namespace mdbs {

const char* operator_kind_name(OperatorKind k) {
    switch (k) {
    case OperatorKind::union_op: return "union";
    case OperatorKind::generalize: return "generalize";
    case OperatorKind::specialize: return "specialize";
    case OperatorKind::import: return "import";
    }
    return "?";
}

OperatorKind parse_operator_kind(std::string_view name) {
    if (name_eq(name, "union")) return OperatorKind::union_op;
    if (name_eq(name, "generalize")) return OperatorKind::generalize;
    if (name_eq(name, "specialize")) return OperatorKind::specialize;
    if (name_eq(name, "import")) return OperatorKind::import;
    fail(Errc::parse_error, "unknown integration operator '" + std::string(name) + "'");
}

const GlobalAttribute* VirtualClass::find_attribute(std::string_view attr) const {
    for (const auto& a : attributes)
        if (name_eq(a.name, attr))
            return &a;
    return nullptr;
}

const VirtualClass* GlobalSchema::find(std::string_view name) const {
    for (const auto& vc : classes)
        if (name_eq(vc.name, name))
            return &vc;
    return nullptr;
}

VirtualClass* GlobalSchema::find(std::string_view name) {
    return const_cast<VirtualClass*>(std::as_const(*this).find(name));
}

namespace {

const LocalClass& resolve_constituent(const ClassRef& ref, const SchemaMap& schemas) {
    auto site = schemas.find(ref.site);
    const LocalClass* cls =
        site == schemas.end() ? nullptr : site->second.find_class(ref.class_name);
    if (!cls)
        fail(Errc::unknown_class, "missing constituent " + ref.display());
    return *cls;
}

// Picks the governing assertion for a pair under the operator's allowed
// relations. Homonymy between the pair is a hard refusal for every merging
// operator.
const CorrespondenceAssertion* governing_assertion(const ClassRef& a, const ClassRef& b,
                                                   OperatorKind op,
                                                   const SchemaMap& schemas,
                                                   const AssertionStore& store) {
    const CorrespondenceAssertion* chosen = nullptr;
    for (const CorrespondenceAssertion* assertion : store.between(a, b)) {
        if (assertion->relation == RelationKind::homonymy)
            fail(Errc::homonymy_forbidden,
                 a.display() + " and " + b.display() +
                     " are homonymous and cannot be merged into a common virtual class");
        bool allowed = assertion->relation == RelationKind::equivalence ||
                       assertion->relation == RelationKind::synonymy ||
                       (assertion->relation == RelationKind::containment &&
                        op != OperatorKind::union_op);
        if (allowed && !chosen)
            chosen = assertion;
    }
    if (!chosen)
        fail(Errc::missing_assertion,
             "no " +
                 std::string(op == OperatorKind::union_op
                                 ? "equivalence or synonymy"
                                 : "equivalence, synonymy or containment") +
                 " assertion relates " + a.display() + " and " + b.display());
    // structural recheck against the classes as they currently stand
    classify_pair(resolve_constituent(a, schemas), resolve_constituent(b, schemas), *chosen);
    return chosen;
}

void derive(VirtualClass& vc, const SchemaMap& schemas, const AssertionStore& store) {
    vc.warnings.clear();
    const std::size_t n = vc.constituents.size();

    if (vc.op == OperatorKind::import) {
        if (n != 1)
            fail(Errc::arity_error, "import takes exactly one constituent");
        const LocalClass& cls = resolve_constituent(vc.constituents[0], schemas);
        vc.attributes.clear();
        for (const auto& attr : cls.attributes) {
            GlobalAttribute g;
            g.name = attr.name;
            g.type = attr.type;
            g.nullable = attr.nullable;
            g.is_key = cls.is_exact_key(attr.name);
            g.bindings.push_back(
                AttributeMemberRef{cls.site, cls.name, attr.name, std::nullopt});
            vc.attributes.push_back(std::move(g));
        }
        vc.key.reset();
        if (cls.key.size() == 1)
            vc.key = cls.key[0];
        return;
    }

    if (n < 2)
        fail(Errc::arity_error,
             std::string(operator_kind_name(vc.op)) + " takes at least two constituents");
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (vc.constituents[i] == vc.constituents[j])
                fail(Errc::arity_error,
                     "constituent " + vc.constituents[i].display() + " listed twice");

    std::vector<const CorrespondenceAssertion*> governing;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            governing.push_back(governing_assertion(vc.constituents[i], vc.constituents[j],
                                                    vc.op, schemas, store));

    auto partition =
        derive_attribute_partition(vc.constituents, governing, schemas, store, vc.warnings);

    vc.attributes.clear();
    vc.key.reset();
    for (auto& cell : partition) {
        if (cell.key_capable && !vc.key)
            vc.key = cell.attr.name;
        bool included = vc.op == OperatorKind::generalize ? cell.support == n : true;
        if (!included)
            continue;
        GlobalAttribute g = std::move(cell.attr);
        switch (vc.op) {
        case OperatorKind::union_op:
            g.nullable = cell.any_member_nullable || cell.support < n;
            break;
        case OperatorKind::generalize:
            g.nullable = cell.any_member_nullable;
            break;
        case OperatorKind::specialize:
            g.nullable = cell.all_members_nullable;
            break;
        case OperatorKind::import: break;
        }
        vc.attributes.push_back(std::move(g));
    }

    if (vc.op == OperatorKind::specialize && !vc.key)
        fail(Errc::missing_key_link,
             "specialize needs a key correspondence spanning all constituents (extent "
             "intersection requires identity)");
    if (vc.op == OperatorKind::generalize && vc.attributes.empty())
        vc.warnings.push_back("empty attribute intersection: virtual class '" + vc.name +
                              "' has no attributes");
}

} // namespace

VirtualClass integrate(OperatorKind op, const std::string& name,
                       const std::vector<ClassRef>& constituents, const SchemaMap& schemas,
                       const AssertionStore& store) {
    VirtualClass vc;
    vc.name = name;
    vc.op = op;
    vc.constituents = constituents;
    derive(vc, schemas, store);
    vc.status = {};
    return vc;
}

void revalidate(VirtualClass& vc, const SchemaMap& schemas, const AssertionStore& store) {
    VirtualClass scratch = vc;
    try {
        derive(scratch, schemas, store);
        scratch.status = {};
        vc = std::move(scratch);
    } catch (const Error& e) {
        // degraded classes stay in the schema as metadata, but carry no
        // derived state: the attribute formula no longer holds
        vc.attributes.clear();
        vc.key.reset();
        vc.warnings.clear();
        vc.status.valid = false;
        vc.status.reason = e.what();
    }
}

std::vector<VirtualClassDef> parse_global_definitions(const std::string& text) {
    std::vector<VirtualClassDef> defs;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string line = raw;
        auto fail_here = [&](const std::string& msg) {
            fail(Errc::parse_error, "line " + std::to_string(lineno) + ": " + msg);
        };
        // strip comments and whitespace
        if (auto hash = line.find('#'); hash != std::string::npos)
            line.erase(hash);
        std::istringstream ls(line);
        std::string op_word, name, eq;
        if (!(ls >> op_word))
            continue;
        if (!(ls >> name))
            fail_here("expected a virtual class name");
        if (!(ls >> eq) || eq != "=")
            fail_here("expected '=' after the virtual class name");
        VirtualClassDef def;
        def.op = parse_operator_kind(op_word);
        def.name = name;
        std::string rest;
        std::getline(ls, rest);
        std::string tok;
        for (char c : rest + ",") {
            if (c == ',') {
                while (!tok.empty() && std::isspace(static_cast<unsigned char>(tok.back())))
                    tok.pop_back();
                std::size_t start = 0;
                while (start < tok.size() &&
                       std::isspace(static_cast<unsigned char>(tok[start])))
                    ++start;
                tok.erase(0, start);
                if (!tok.empty()) {
                    auto dot = tok.find('.');
                    if (dot == std::string::npos || dot == 0 || dot + 1 >= tok.size())
                        fail_here("expected <site>.<class>, got '" + tok + "'");
                    def.constituents.push_back(
                        ClassRef{tok.substr(0, dot), tok.substr(dot + 1)});
                    tok.clear();
                }
            } else {
                tok.push_back(c);
            }
        }
        if (def.constituents.empty())
            fail_here("virtual class '" + name + "' names no constituents");
        defs.push_back(std::move(def));
    }
    return defs;
}

std::string serialize_global_definitions(const GlobalSchema& schema) {
    std::string out;
    for (const auto& vc : schema.classes) {
        out += std::string(operator_kind_name(vc.op)) + " " + vc.name + " =";
        bool first = true;
        for (const auto& c : vc.constituents) {
            out += first ? " " : ", ";
            out += c.display();
            first = false;
        }
        out += "\n";
    }
    return out;
}

} // namespace mdbs
