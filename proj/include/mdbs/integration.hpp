#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdbs/correspondence.hpp"
#include "mdbs/types.hpp"

namespace mdbs {

enum class OperatorKind { union_op, generalize, specialize, import };

const char* operator_kind_name(OperatorKind k);
OperatorKind parse_operator_kind(std::string_view name); // throws ParseError

// A class of the global schema: operator, constituent classes, derived
// attribute set and the per-attribute mapping rules (carried inside each
// GlobalAttribute's bindings). No objects are ever stored; extents are
// computed at query time.
struct VirtualClass {
    struct Status {
        bool valid = true;
        std::string reason; // set when invalidated

        std::string display() const { return valid ? "valid" : "invalidated (" + reason + ")"; }
    };

    std::string name;
    OperatorKind op = OperatorKind::import;
    std::vector<ClassRef> constituents; // ordered; order resolves data conflicts
    std::vector<GlobalAttribute> attributes;
    std::optional<std::string> key; // global key attribute, when a key_link spans all
    Status status;
    std::vector<std::string> warnings;

    const GlobalAttribute* find_attribute(std::string_view name) const;
    bool merges_by_key() const { return key.has_value() && constituents.size() > 1; }
};

struct GlobalSchema {
    std::vector<VirtualClass> classes;

    const VirtualClass* find(std::string_view name) const;
    VirtualClass* find(std::string_view name);
};

// Applies an integration operator against the current schemas and assertion
// store. Throws ArityError / UnknownClass / MissingAssertion /
// HomonymyForbidden / MissingKeyLink / InconsistentAssertion / TypeMismatch.
VirtualClass integrate(OperatorKind op, const std::string& name,
                       const std::vector<ClassRef>& constituents, const SchemaMap& schemas,
                       const AssertionStore& store);

// Recomputes the attribute formula and preconditions in place. Degradation is
// expressed in status, never thrown; a valid result refreshes attributes, key
// and warnings. Idempotent when nothing changed.
void revalidate(VirtualClass& vc, const SchemaMap& schemas, const AssertionStore& store);

// Global schema definition file: one class per line,
//   union|generalize|specialize|import <name> = <site>.<class> [, <site>.<class> ...]
struct VirtualClassDef {
    OperatorKind op;
    std::string name;
    std::vector<ClassRef> constituents;
};

std::vector<VirtualClassDef> parse_global_definitions(const std::string& text);
std::string serialize_global_definitions(const GlobalSchema& schema);

} // namespace mdbs
