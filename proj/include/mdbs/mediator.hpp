#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "mdbs/adapter.hpp"
#include "mdbs/correspondence.hpp"
#include "mdbs/integration.hpp"
#include "mdbs/query.hpp"

namespace mdbs {

struct RelayReport {
    SiteId site;
    std::size_t delivered = 0;
    std::size_t skipped_duplicates = 0;
    std::vector<std::pair<std::string, std::string>> affected_virtual_classes; // name, status
    std::vector<std::string> warnings;
};

struct ConvergenceReport {
    bool equal = true;
    std::string diff;
};

enum class ApplyDisposition { applied, stale, buffered };

struct ApplyResult {
    ApplyDisposition disposition = ApplyDisposition::applied;
    std::vector<std::pair<std::string, std::string>> affected_virtual_classes;
};

// The whole simulated federation: autonomous site adapters plus the mediator
// (registry of local-schema copies, assertion store, global schema, and the
// bottom-up change propagation machinery). Mutations are serialized behind
// one writer lock; queries run against snapshots and may fan out to site
// adapters concurrently.
class Federation {
public:
    Federation() = default;
    Federation(Federation&&) = default;
    Federation& operator=(Federation&&) = default;

    // --- sites & schema model -------------------------------------------
    SourceAdapter& register_site(const LocalSchema& schema,
                                 std::vector<ObjectInstance> extent); // DuplicateSite
    SourceAdapter& adapter(const SiteId& site);
    const SourceAdapter& adapter(const SiteId& site) const;
    std::vector<SiteId> sites() const;
    const SchemaMap& registry() const { return registry_; } // mediator's copies

    // DBA restructuring: renames at the site and in the registry copy in one
    // step, rewriting assertions and virtual-class references in place.
    void rename_class(const SiteId& site, const std::string& old_name,
                      const std::string& new_name);
    void rename_attribute(const SiteId& site, const std::string& class_name,
                          const std::string& old_name, const std::string& new_name);

    // --- correspondence ---------------------------------------------------
    void load_assertions(const std::string& dsl_text);
    const AssertionStore& assertions() const { return store_; }

    // --- integration --------------------------------------------------------
    VirtualClass integrate_class(OperatorKind op, const std::string& name,
                                 const std::vector<ClassRef>& constituents);
    void integrate_definitions(const std::string& def_text);
    const GlobalSchema& global_schema() const { return global_; }
    std::string export_global_schema() const; // canonical, byte-stable

    // --- queries ------------------------------------------------------------
    GlobalQuery parse_query(const std::string& text) const;
    QueryResult execute(const GlobalQuery& q, bool pushdown = true) const;

    // --- evolution & propagation ---------------------------------------------
    std::uint64_t apply_local_change(const SiteId& site, const SchemaChange& change);
    bool set_connectivity(const SiteId& site, bool online);
    RelayReport relay(const SiteId& site);
    std::vector<RelayReport> relay_all();
    ApplyResult mediator_apply(const ChangeLogEntry& entry);
    ConvergenceReport check_convergence() const;
    std::uint64_t applied_high_water(const SiteId& site) const;

    // deterministic fault injection on the relay mailbox (tests)
    void set_mailbox_fault(std::function<void(std::deque<ChangeLogEntry>&)> fault);

    // --- persistence ----------------------------------------------------------
    // Attaching a state directory turns on live persistence: change logs are
    // appended as they grow and mediator-side state is rewritten on every
    // applied entry, so a restart can resume from disk at any point.
    void attach_state_dir(const std::filesystem::path& dir);
    void save() const;
    static Federation load(const std::filesystem::path& dir);
    const std::optional<std::filesystem::path>& state_dir() const { return state_dir_; }

private:
    ApplyResult mediator_apply_unlocked(const ChangeLogEntry& entry);
    std::vector<std::pair<std::string, std::string>> revalidate_referencing(const SiteId& site);
    void track_class_rename(const ClassRef& old_ref, const std::string& new_name);
    void track_attribute_rename(const ClassRef& cls, const std::string& old_name,
                                const std::string& new_name);
    void drain_pending(const SiteId& site, ApplyResult& collected);
    void persist_mediator_state() const;
    void persist_site(const SiteId& site) const;
    void save_unlocked() const;
    QueryResult execute_snapshot(const GlobalQuery& q, bool pushdown) const;

    std::map<SiteId, std::unique_ptr<SourceAdapter>, NameLess> adapters_;
    SchemaMap registry_; // mediator's copy of each site schema
    AssertionStore store_;
    GlobalSchema global_;
    std::map<SiteId, std::uint64_t, NameLess> applied_; // high-water mark per site
    std::map<SiteId, std::map<std::uint64_t, ChangeLogEntry>, NameLess> pending_; // gap buffer
    std::function<void(std::deque<ChangeLogEntry>&)> mailbox_fault_;
    std::optional<std::filesystem::path> state_dir_;
    mutable std::unique_ptr<std::mutex> mu_ = std::make_unique<std::mutex>();
};

} // namespace mdbs
