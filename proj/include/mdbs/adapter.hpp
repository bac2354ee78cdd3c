#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "mdbs/changes.hpp"
#include "mdbs/types.hpp"

namespace mdbs {

enum class Cmp { eq, ne, lt, le, gt, ge };

const char* cmp_symbol(Cmp op);
Cmp parse_cmp(std::string_view sym); // throws ParseError

// One conjunct of a predicate. Null attribute values satisfy no condition.
struct Condition {
    std::string attribute;
    Cmp op = Cmp::eq;
    Value literal;
};

bool eval_condition(const Value& v, Cmp op, const Value& literal);

struct SubQuery {
    std::string class_name;
    std::vector<std::string> projection;  // local attribute names
    std::vector<Condition> predicate;     // conjunction, in local terms
};

struct SubResult {
    std::vector<std::string> header;
    std::vector<std::vector<Value>> rows;
};

// Simulates one autonomous component database: owns its schema and extents,
// answers subqueries in local terms, logs its own schema changes, and can be
// toggled offline. All public entry points are serialized per adapter.
class SourceAdapter {
public:
    SourceAdapter(LocalSchema schema, std::vector<ObjectInstance> extent);

    const SiteId& site() const { return site_; }
    LocalSchema schema_snapshot() const;
    std::uint64_t version() const;
    bool online() const;
    bool set_connectivity(bool online); // returns previous state

    SubResult execute_subquery(const SubQuery& q) const; // throws SiteOffline/Unknown*

    // Autonomous local evolution: mutates schema and extents, appends to the
    // outbound log, returns the new schema version. Works offline.
    std::uint64_t apply_local_change(const SchemaChange& change);

    // DBA-driven restructuring: same mutation, no log entry (the mediator
    // updates its copy in the same call).
    void restructure(const SchemaChange& change);

    std::vector<ObjectInstance> extent_snapshot(std::string_view class_name) const;

    // Outbound change log.
    std::vector<ChangeLogEntry> log_snapshot() const;
    std::vector<ChangeLogEntry> undelivered() const;
    void mark_delivered(std::uint64_t upto_seq);
    void reset_delivery_marks(); // simulates a site restart with lost acks
    std::uint64_t last_seq() const;

    // Persistence hooks (used when a state directory is attached).
    void on_log_append(std::function<void(const ChangeLogEntry&)> sink);
    void restore_log(std::vector<ChangeLogEntry> entries);

private:
    void apply_unlocked(const SchemaChange& change, bool log_it);
    void adjust_extents(const LocalSchema& before, const SchemaChange& change);
    void validate_extents() const;

    SiteId site_;
    LocalSchema schema_;
    std::map<std::string, std::vector<ObjectInstance>, NameLess> extents_;
    std::vector<ChangeLogEntry> log_;
    std::uint64_t version_ = 1;
    bool online_ = true;
    std::function<void(const ChangeLogEntry&)> log_sink_;
    mutable std::mutex mu_;
};

} // namespace mdbs
