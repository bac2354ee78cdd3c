#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mdbs/types.hpp"

namespace mdbs {

using SchemaMap = std::map<SiteId, LocalSchema, NameLess>;

// ---------------------------------------------------------------------------
// Conversion functions
// ---------------------------------------------------------------------------

// A pure, total, deterministic mapping from a local attribute's value domain
// into the global one. Either an arithmetic expression over the variable x or
// a named builtin (lower/upper). Only affine expressions with nonzero scale
// are invertible; inverses are what predicate pushdown relies on.
class ConversionFunction {
public:
    struct Node; // expression AST

    static ConversionFunction parse(const std::string& name, SemanticType input,
                                    SemanticType output, const std::string& definition);

    const std::string& name() const { return name_; }
    const SemanticType& input_type() const { return input_; }
    const SemanticType& output_type() const { return output_; }
    const std::string& definition() const { return definition_; }

    bool invertible() const;
    Value apply(const Value& v) const;
    // Maps a global-side literal back into local terms. `flips_order` is set
    // when the conversion is order-reversing (negative scale), in which case
    // the caller must mirror the comparator.
    std::optional<Value> invert(const Value& global_literal, bool& flips_order) const;

private:
    std::string name_;
    SemanticType input_;
    SemanticType output_;
    std::string definition_;
    std::shared_ptr<const Node> expr_; // null for builtins
    enum class Builtin { none, lower, upper } builtin_ = Builtin::none;
    std::optional<std::pair<double, double>> affine_; // scale, offset
};

// ---------------------------------------------------------------------------
// Assertions
// ---------------------------------------------------------------------------

enum class RelationKind { equivalence, synonymy, containment, homonymy };

const char* relation_kind_name(RelationKind k);

struct AttributeMemberRef {
    SiteId site;
    std::string class_name;
    std::string attribute;
    std::optional<std::string> conversion;

    std::string display() const;
};

// One global attribute declared by the DBA: the set of local attributes that
// correspond to each other, at most one per (site, class).
struct AttributeCorrespondence {
    std::string global_name; // spelled as the left-hand token of the assertion
    std::vector<AttributeMemberRef> members;
    bool is_key = false;
};

// A pairwise semantic relationship between two local classes. For
// containment the left class is the contained one (the subclass).
struct CorrespondenceAssertion {
    RelationKind relation = RelationKind::equivalence;
    ClassRef left;
    ClassRef right;
    std::vector<AttributeCorrespondence> correspondences;
    std::optional<std::size_t> key_link; // index of the key correspondence

    bool covers(const ClassRef& a, const ClassRef& b) const {
        return (left == a && right == b) || (left == b && right == a);
    }
};

struct AssertionStore {
    std::map<std::string, ConversionFunction, NameLess> conversions;
    std::vector<CorrespondenceAssertion> assertions;

    const ConversionFunction* find_conversion(std::string_view name) const;
    std::vector<const CorrespondenceAssertion*> between(const ClassRef& a,
                                                        const ClassRef& b) const;
};

// Parses the assertion DSL. With `strict` set, every referenced site, class,
// attribute and conversion must resolve against `schemas` and all
// correspondences must type-check post-conversion; lenient parsing (used when
// restoring persisted state) keeps dangling references for the derivation
// layer to skip.
AssertionStore parse_assertions(const std::string& text, const SchemaMap& schemas,
                                bool strict = true);
std::string pretty_print(const AssertionStore& store);

// Structural consistency check of the asserted relation against the two
// classes as they currently stand; returns the kind or throws
// InconsistentAssertion naming the violated condition.
RelationKind classify_pair(const LocalClass& c1, const LocalClass& c2,
                           const CorrespondenceAssertion& assertion);

// ---------------------------------------------------------------------------
// Global attribute derivation
// ---------------------------------------------------------------------------

struct GlobalAttribute {
    std::string name;
    SemanticType type;
    bool nullable = false;
    bool is_key = false;
    std::vector<AttributeMemberRef> bindings; // at most one per constituent

    const AttributeMemberRef* binding_for(const ClassRef& c) const;
};

// One cell of the attribute partition over a constituent list, before any
// operator filters it: `support` counts the constituents owning a binding.
struct DerivedAttribute {
    GlobalAttribute attr;
    std::size_t support = 0;
    bool all_members_nullable = true;
    bool any_member_nullable = false;
    bool key_capable = false; // key-flagged and an exact key in every owner
};

// Applies the correspond-to relation across all constituents: one cell per
// correspondence group (pairwise assertions sharing a global name compose),
// plus one per unmatched local attribute promoted under its own name; name
// collisions among promoted attributes are suffixed with the site id.
// Throws TypeMismatch when a cell's member types have no coercion join.
std::vector<DerivedAttribute>
derive_attribute_partition(const std::vector<ClassRef>& constituents,
                           const std::vector<const CorrespondenceAssertion*>& assertions,
                           const SchemaMap& schemas, const AssertionStore& store,
                           std::vector<std::string>& warnings);

// The two-class view of the partition (the global attribute set an assertion
// induces on its own pair of classes).
std::vector<GlobalAttribute> global_attribute_set(const CorrespondenceAssertion& assertion,
                                                  const SchemaMap& schemas,
                                                  const AssertionStore& store);

} // namespace mdbs
