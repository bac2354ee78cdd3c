#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mdbs/adapter.hpp"
#include "mdbs/integration.hpp"

namespace mdbs {

struct GlobalQuery {
    std::string virtual_class;
    std::vector<std::string> projection; // empty = all attributes
    std::vector<Condition> predicate;    // global names, typed literals
};

struct QueryResult {
    std::vector<std::string> header;
    std::vector<std::vector<Value>> rows;
    std::vector<std::string> warnings;
};

// Textual form: select <a,b,...|*> from <virtual class> [where a >= 3 and b = "x"].
// Literals stay lexical until bound against the virtual class's global types.
struct ParsedQuery {
    struct RawCondition {
        std::string attribute;
        Cmp op;
        std::string lexeme;
    };
    std::string virtual_class;
    std::vector<std::string> projection;
    std::vector<RawCondition> conditions;
};

ParsedQuery parse_query_text(const std::string& text);
GlobalQuery bind_query(const ParsedQuery& q, const VirtualClass& vc);

struct ConstituentSubQuery {
    ClassRef target;
    SubQuery query;
};

struct DecomposedQuery {
    std::vector<ConstituentSubQuery> subqueries; // one per constituent, in order
    std::vector<Condition> mediator_predicate;   // applied after composition
    std::vector<std::string> needed_attributes;  // global names fetched (proj + key)
};

// Splits a global query into per-constituent subqueries in local terms. A
// conjunct is pushed down to a site only when doing so cannot change the
// composed result: on key-merging virtual classes only key conjuncts move
// (site-local filtering interacts with cross-site merging for everything
// else); elsewhere any conjunct whose attribute is bound at the site and
// whose conversion is invertible moves. The full predicate is re-applied at
// the mediator after composition.
DecomposedQuery decompose(const GlobalQuery& q, const VirtualClass& vc,
                          const AssertionStore& store, bool pushdown = true);

// Fuses per-constituent sub-results per the operator's extent semantics:
// union/generalize concatenate or outer-merge by key, specialize keeps keys
// present at every constituent. Offline constituents (nullopt) degrade to a
// partial result with a warning for union/generalize and throw
// PartialResultError for specialize.
QueryResult compose(const std::vector<std::optional<SubResult>>& sub_results,
                    const VirtualClass& vc, const GlobalQuery& q,
                    const AssertionStore& store, bool pushdown = true);

std::string render_table(const QueryResult& result);
std::string render_tsv(const QueryResult& result); // header row, \N for null

} // namespace mdbs
