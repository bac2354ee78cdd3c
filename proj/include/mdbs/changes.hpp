#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "mdbs/types.hpp"

namespace mdbs {

enum class ChangeKind {
    add_class,        // class=<name>            (creates an empty, keyless class)
    drop_class,       // class=<name>
    rename_class,     // class=<old> new=<name>
    add_attribute,    // class=<c> attr=<name> type=<base[:unit][?nullable]>
    drop_attribute,   // class=<c> attr=<name>
    rename_attribute, // class=<c> attr=<old> new=<name>
    change_attribute_type, // class=<c> attr=<name> type=<base[:unit]>
};

const char* change_kind_name(ChangeKind k);

struct SchemaChange {
    ChangeKind kind = ChangeKind::add_class;
    std::string class_name;
    std::string attribute;  // add/drop/rename/change_type
    std::string new_name;   // rename targets
    std::string type_spec;  // add_attribute / change_attribute_type payload

    std::string to_line() const; // kind=K class=c [attr=a] [new=x] [type=t]
};

// One relayed unit: a site-local change stamped with the site's sequence
// number. `delivered` tracks the site-side ack (the mediator keeps its own
// applied high-water mark).
struct ChangeLogEntry {
    SiteId site;
    std::uint64_t seq = 0;
    SchemaChange change;
    bool delivered = false;

    std::string to_line() const; // seq=<n> <change fields>
};

SchemaChange parse_change_line(std::string_view line);   // throws ParseError
ChangeLogEntry parse_log_line(std::string_view line, const SiteId& site);

// Applies the change in place; extents are adjusted by the owning adapter.
// Throws InvalidChange when the change does not fit the current schema.
void apply_schema_change(LocalSchema& schema, const SchemaChange& change);

} // namespace mdbs
