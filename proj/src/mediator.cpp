#include "mdbs/mediator.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "mdbs/errors.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs {

namespace fs = std::filesystem;

namespace {

std::string site_schema_file(const fs::path& dir, const SiteId& site) {
    return (dir / "sites" / (site + ".schema.txt")).string();
}
std::string site_data_file(const fs::path& dir, const SiteId& site) {
    return (dir / "sites" / (site + ".data.txt")).string();
}
std::string site_log_file(const fs::path& dir, const SiteId& site) {
    return (dir / "sites" / (site + ".log.txt")).string();
}
std::string mediator_schema_file(const fs::path& dir, const SiteId& site) {
    return (dir / "mediator" / (site + ".schema.txt")).string();
}

// Order-preserving line diff by multiset difference; enough to name what
// drifted without a full LCS.
void diff_lines(const std::string& label, const std::string& a, const std::string& b,
                std::string& out) {
    auto split = [](const std::string& text) {
        std::vector<std::string> lines;
        std::istringstream in(text);
        std::string line;
        while (std::getline(in, line))
            lines.push_back(line);
        return lines;
    };
    std::vector<std::string> la = split(a), lb = split(b);
    std::multiset<std::string> sa(la.begin(), la.end()), sb(lb.begin(), lb.end());
    bool headed = false;
    auto head = [&] {
        if (!headed)
            out += "@ " + label + "\n";
        headed = true;
    };
    for (const auto& line : la)
        if (!sb.count(line)) {
            head();
            out += "- " + line + "\n";
            sb.insert(line); // report each missing line once
        }
    for (const auto& line : lb)
        if (!sa.count(line)) {
            head();
            out += "+ " + line + "\n";
            sa.insert(line);
        }
}

} // namespace

// ---------------------------------------------------------------------------
// Sites & schema model
// ---------------------------------------------------------------------------

SourceAdapter& Federation::register_site(const LocalSchema& schema,
                                         std::vector<ObjectInstance> extent) {
    std::lock_guard lock(*mu_);
    schema.validate();
    if (adapters_.contains(schema.site))
        fail(Errc::duplicate_site, "site '" + schema.site + "' is already registered");
    auto adapter = std::make_unique<SourceAdapter>(schema, std::move(extent));
    SourceAdapter& ref = *adapter;
    adapters_.emplace(schema.site, std::move(adapter));
    registry_.emplace(schema.site, schema);
    if (state_dir_) {
        const fs::path dir = *state_dir_;
        const SiteId site = schema.site;
        ref.on_log_append([dir, site](const ChangeLogEntry& e) {
            std::ofstream out(site_log_file(dir, site), std::ios::app);
            out << e.to_line() << "\n";
        });
        save_unlocked();
    }
    return ref;
}

SourceAdapter& Federation::adapter(const SiteId& site) {
    std::lock_guard lock(*mu_);
    auto it = adapters_.find(site);
    if (it == adapters_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    return *it->second;
}

const SourceAdapter& Federation::adapter(const SiteId& site) const {
    return const_cast<Federation*>(this)->adapter(site);
}

std::vector<SiteId> Federation::sites() const {
    std::lock_guard lock(*mu_);
    std::vector<SiteId> out;
    for (const auto& [site, _] : adapters_)
        out.push_back(site);
    return out;
}

void Federation::rename_class(const SiteId& site, const std::string& old_name,
                              const std::string& new_name) {
    std::lock_guard lock(*mu_);
    auto it = registry_.find(site);
    if (it == registry_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    LocalSchema& copy = it->second;
    LocalSchema truth = adapters_.at(site)->schema_snapshot();
    const LocalClass* cls = copy.find_class(old_name);
    if (!cls || !truth.find_class(old_name))
        fail(Errc::unknown_class, site + "." + old_name);
    if (old_name == new_name)
        return; // identity rename
    if (!name_eq(old_name, new_name) &&
        (copy.find_class(new_name) || truth.find_class(new_name)))
        fail(Errc::name_collision, site + "." + new_name + " already exists");

    SchemaChange change;
    change.kind = ChangeKind::rename_class;
    change.class_name = cls->name;
    change.new_name = new_name;
    adapters_.at(site)->restructure(change);
    apply_schema_change(copy, change);
    track_class_rename(ClassRef{site, old_name}, new_name);
    revalidate_referencing(site);
    if (state_dir_)
        save_unlocked();
}

void Federation::rename_attribute(const SiteId& site, const std::string& class_name,
                                  const std::string& old_name, const std::string& new_name) {
    std::lock_guard lock(*mu_);
    auto it = registry_.find(site);
    if (it == registry_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    LocalSchema& copy = it->second;
    LocalSchema truth = adapters_.at(site)->schema_snapshot();
    LocalClass* cls = copy.find_class(class_name);
    LocalClass* site_cls = truth.find_class(class_name);
    if (!cls || !site_cls)
        fail(Errc::unknown_class, site + "." + class_name);
    if (!cls->find_attribute(old_name) || !site_cls->find_attribute(old_name))
        fail(Errc::unknown_attribute, site + "." + class_name + "." + old_name);
    if (old_name == new_name)
        return;
    if (!name_eq(old_name, new_name) &&
        (cls->find_attribute(new_name) || site_cls->find_attribute(new_name)))
        fail(Errc::name_collision,
             site + "." + class_name + "." + new_name + " already exists");

    SchemaChange change;
    change.kind = ChangeKind::rename_attribute;
    change.class_name = cls->name;
    change.attribute = old_name;
    change.new_name = new_name;
    adapters_.at(site)->restructure(change);
    apply_schema_change(copy, change);
    track_attribute_rename(ClassRef{site, class_name}, old_name, new_name);
    revalidate_referencing(site);
    if (state_dir_)
        save_unlocked();
}

void Federation::track_class_rename(const ClassRef& old_ref, const std::string& new_name) {
    for (auto& a : store_.assertions) {
        if (a.left == old_ref)
            a.left.class_name = new_name;
        if (a.right == old_ref)
            a.right.class_name = new_name;
        for (auto& corr : a.correspondences)
            for (auto& m : corr.members)
                if (name_eq(m.site, old_ref.site) && name_eq(m.class_name, old_ref.class_name))
                    m.class_name = new_name;
    }
    for (auto& vc : global_.classes)
        for (auto& c : vc.constituents)
            if (c == old_ref)
                c.class_name = new_name;
}

void Federation::track_attribute_rename(const ClassRef& cls, const std::string& old_name,
                                        const std::string& new_name) {
    for (auto& a : store_.assertions)
        for (auto& corr : a.correspondences)
            for (auto& m : corr.members)
                if (name_eq(m.site, cls.site) && name_eq(m.class_name, cls.class_name) &&
                    name_eq(m.attribute, old_name))
                    m.attribute = new_name;
}

// ---------------------------------------------------------------------------
// Correspondence & integration
// ---------------------------------------------------------------------------

void Federation::load_assertions(const std::string& dsl_text) {
    std::lock_guard lock(*mu_);
    AssertionStore parsed = parse_assertions(dsl_text, registry_, /*strict=*/true);
    for (auto& [name, f] : parsed.conversions) {
        if (store_.conversions.contains(name))
            fail(Errc::parse_error, "conversion '" + name + "' is already defined");
        store_.conversions.emplace(name, std::move(f));
    }
    for (auto& a : parsed.assertions)
        store_.assertions.push_back(std::move(a));
    for (auto& vc : global_.classes)
        revalidate(vc, registry_, store_);
    if (state_dir_)
        save_unlocked();
}

VirtualClass Federation::integrate_class(OperatorKind op, const std::string& name,
                                         const std::vector<ClassRef>& constituents) {
    std::lock_guard lock(*mu_);
    if (global_.find(name))
        fail(Errc::name_collision, "virtual class '" + name + "' already exists");
    global_.classes.push_back(integrate(op, name, constituents, registry_, store_));
    if (state_dir_)
        save_unlocked();
    return global_.classes.back();
}

void Federation::integrate_definitions(const std::string& def_text) {
    std::lock_guard lock(*mu_);
    auto defs = parse_global_definitions(def_text);
    std::vector<VirtualClass> built;
    for (const auto& def : defs) {
        if (global_.find(def.name))
            fail(Errc::name_collision, "virtual class '" + def.name + "' already exists");
        for (const auto& b : built)
            if (name_eq(b.name, def.name))
                fail(Errc::name_collision, "virtual class '" + def.name + "' defined twice");
        built.push_back(integrate(def.op, def.name, def.constituents, registry_, store_));
    }
    for (auto& vc : built)
        global_.classes.push_back(std::move(vc));
    if (state_dir_)
        save_unlocked();
}

std::string Federation::export_global_schema() const {
    std::lock_guard lock(*mu_);
    std::vector<const VirtualClass*> ordered;
    for (const auto& vc : global_.classes)
        ordered.push_back(&vc);
    std::sort(ordered.begin(), ordered.end(), [](const VirtualClass* a, const VirtualClass* b) {
        return name_lt(a->name, b->name);
    });
    std::string out;
    for (const VirtualClass* vc : ordered) {
        out += "virtual " + vc->name + " : " + operator_kind_name(vc->op) + "\n";
        out += "  constituents:";
        bool first = true;
        for (const auto& c : vc->constituents) {
            out += first ? " " : ", ";
            out += c.display();
            first = false;
        }
        out += "\n  status: " + vc->status.display() + "\n";
        if (vc->key)
            out += "  key: " + *vc->key + "\n";
        for (const auto& g : vc->attributes) {
            out += "  attr " + g.name + ":" + to_string(g.type);
            if (g.nullable)
                out += "?nullable";
            out += " <-";
            first = true;
            for (const auto& b : g.bindings) {
                out += first ? " " : ", ";
                out += b.display();
                first = false;
            }
            out += "\n";
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Queries
// ---------------------------------------------------------------------------

GlobalQuery Federation::parse_query(const std::string& text) const {
    std::lock_guard lock(*mu_);
    ParsedQuery parsed = parse_query_text(text);
    const VirtualClass* vc = global_.find(parsed.virtual_class);
    if (!vc)
        fail(Errc::unknown_class, "no virtual class '" + parsed.virtual_class + "'");
    return bind_query(parsed, *vc);
}

QueryResult Federation::execute(const GlobalQuery& q, bool pushdown) const {
    return execute_snapshot(q, pushdown);
}

QueryResult Federation::execute_snapshot(const GlobalQuery& q, bool pushdown) const {
    VirtualClass vc;
    AssertionStore store;
    std::vector<SourceAdapter*> targets;
    {
        std::lock_guard lock(*mu_);
        const VirtualClass* found = global_.find(q.virtual_class);
        if (!found)
            fail(Errc::unknown_class, "no virtual class '" + q.virtual_class + "'");
        vc = *found;
        store = store_;
        for (const auto& ref : vc.constituents) {
            auto it = adapters_.find(ref.site);
            targets.push_back(it == adapters_.end() ? nullptr : it->second.get());
        }
    }
    DecomposedQuery d = decompose(q, vc, store, pushdown);

    std::vector<std::future<std::optional<SubResult>>> futures;
    std::vector<std::string> failures(d.subqueries.size());
    for (std::size_t i = 0; i < d.subqueries.size(); ++i) {
        SourceAdapter* target = targets[i];
        const SubQuery& sq = d.subqueries[i].query;
        futures.push_back(std::async(std::launch::async,
                                     [target, sq]() -> std::optional<SubResult> {
                                         if (!target || !target->online())
                                             return std::nullopt;
                                         return target->execute_subquery(sq);
                                     }));
    }
    std::vector<std::optional<SubResult>> sub_results;
    for (std::size_t i = 0; i < futures.size(); ++i) {
        try {
            sub_results.push_back(futures[i].get());
        } catch (const Error& e) {
            sub_results.push_back(std::nullopt);
            failures[i] = e.what();
        }
    }
    QueryResult result = compose(sub_results, vc, q, store, pushdown);
    for (std::size_t i = 0; i < failures.size(); ++i)
        if (!failures[i].empty())
            result.warnings.push_back("constituent " + d.subqueries[i].target.display() +
                                      " failed: " + failures[i]);
    return result;
}

// ---------------------------------------------------------------------------
// Evolution & propagation
// ---------------------------------------------------------------------------

std::uint64_t Federation::apply_local_change(const SiteId& site, const SchemaChange& change) {
    std::lock_guard lock(*mu_);
    auto it = adapters_.find(site);
    if (it == adapters_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    std::uint64_t version = it->second->apply_local_change(change);
    if (state_dir_)
        persist_site(site);
    return version;
}

bool Federation::set_connectivity(const SiteId& site, bool online) {
    std::lock_guard lock(*mu_);
    auto it = adapters_.find(site);
    if (it == adapters_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    bool prev = it->second->set_connectivity(online);
    if (state_dir_)
        persist_site(site);
    return prev;
}

RelayReport Federation::relay(const SiteId& site) {
    std::lock_guard lock(*mu_);
    auto it = adapters_.find(site);
    if (it == adapters_.end())
        fail(Errc::unknown_site, "site '" + site + "' is not registered");
    SourceAdapter& adapter = *it->second;
    RelayReport report;
    report.site = site;
    if (!adapter.online())
        return report; // link down: nothing relayed, the log persists

    auto batch_vec = adapter.undelivered();
    std::deque<ChangeLogEntry> mailbox(batch_vec.begin(), batch_vec.end());
    if (mailbox_fault_)
        mailbox_fault_(mailbox);

    auto absorb = [&](const ApplyResult& r) {
        for (const auto& [name, status] : r.affected_virtual_classes) {
            auto existing = std::find_if(report.affected_virtual_classes.begin(),
                                         report.affected_virtual_classes.end(),
                                         [&](const auto& p) { return p.first == name; });
            if (existing == report.affected_virtual_classes.end())
                report.affected_virtual_classes.emplace_back(name, status);
            else
                existing->second = status;
        }
    };

    while (!mailbox.empty()) {
        ChangeLogEntry entry = mailbox.front();
        mailbox.pop_front();
        ApplyResult r = mediator_apply_unlocked(entry);
        switch (r.disposition) {
        case ApplyDisposition::applied:
            ++report.delivered;
            adapter.mark_delivered(entry.seq);
            absorb(r);
            break;
        case ApplyDisposition::stale:
            ++report.skipped_duplicates;
            adapter.mark_delivered(entry.seq);
            break;
        case ApplyDisposition::buffered:
            break; // held in the gap buffer, unacked; a later relay resends
        }
        // a gap fill may release buffered successors
        ApplyResult drained;
        std::uint64_t before = applied_[site];
        drain_pending(site, drained);
        if (applied_[site] > before) {
            report.delivered += static_cast<std::size_t>(applied_[site] - before);
            adapter.mark_delivered(applied_[site]);
            absorb(drained);
        }
    }
    if (state_dir_) {
        persist_mediator_state();
        persist_site(site);
    }
    return report;
}

std::vector<RelayReport> Federation::relay_all() {
    std::vector<RelayReport> reports;
    for (const auto& site : sites())
        reports.push_back(relay(site));
    return reports;
}

ApplyResult Federation::mediator_apply(const ChangeLogEntry& entry) {
    std::lock_guard lock(*mu_);
    ApplyResult r = mediator_apply_unlocked(entry);
    if (r.disposition == ApplyDisposition::applied) {
        ApplyResult drained;
        drain_pending(entry.site, drained);
        for (auto& p : drained.affected_virtual_classes)
            r.affected_virtual_classes.push_back(std::move(p));
        if (state_dir_)
            persist_mediator_state();
    }
    return r;
}

ApplyResult Federation::mediator_apply_unlocked(const ChangeLogEntry& entry) {
    auto reg = registry_.find(entry.site);
    if (reg == registry_.end())
        fail(Errc::unknown_site, "site '" + entry.site + "' is not registered");
    std::uint64_t& high_water = applied_[entry.site];
    ApplyResult result;
    if (entry.seq <= high_water) {
        result.disposition = ApplyDisposition::stale; // duplicate: signal, no-op
        return result;
    }
    if (entry.seq > high_water + 1) {
        pending_[entry.site][entry.seq] = entry;
        result.disposition = ApplyDisposition::buffered;
        return result;
    }
    apply_schema_change(reg->second, entry.change);
    if (entry.change.kind == ChangeKind::rename_class)
        track_class_rename(ClassRef{entry.site, entry.change.class_name},
                           entry.change.new_name);
    else if (entry.change.kind == ChangeKind::rename_attribute)
        track_attribute_rename(ClassRef{entry.site, entry.change.class_name},
                               entry.change.attribute, entry.change.new_name);
    high_water = entry.seq;
    result.disposition = ApplyDisposition::applied;
    result.affected_virtual_classes = revalidate_referencing(entry.site);
    return result;
}

void Federation::drain_pending(const SiteId& site, ApplyResult& collected) {
    auto it = pending_.find(site);
    if (it == pending_.end())
        return;
    auto& buffer = it->second;
    for (;;) {
        auto next = buffer.find(applied_[site] + 1);
        if (next == buffer.end())
            return;
        ChangeLogEntry entry = next->second;
        buffer.erase(next);
        ApplyResult r = mediator_apply_unlocked(entry);
        if (r.disposition != ApplyDisposition::applied)
            return;
        for (auto& p : r.affected_virtual_classes)
            collected.affected_virtual_classes.push_back(std::move(p));
    }
}

std::vector<std::pair<std::string, std::string>>
Federation::revalidate_referencing(const SiteId& site) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto& vc : global_.classes) {
        bool references = false;
        for (const auto& c : vc.constituents)
            if (name_eq(c.site, site))
                references = true;
        if (!references)
            continue;
        revalidate(vc, registry_, store_);
        out.emplace_back(vc.name, vc.status.display());
    }
    return out;
}

std::uint64_t Federation::applied_high_water(const SiteId& site) const {
    std::lock_guard lock(*mu_);
    auto it = applied_.find(site);
    return it == applied_.end() ? 0 : it->second;
}

void Federation::set_mailbox_fault(std::function<void(std::deque<ChangeLogEntry>&)> fault) {
    std::lock_guard lock(*mu_);
    mailbox_fault_ = std::move(fault);
}

ConvergenceReport Federation::check_convergence() const {
    std::lock_guard lock(*mu_);
    ConvergenceReport report;

    // the mediator's schema copies against site truth
    SchemaMap truth;
    for (const auto& [site, adapter] : adapters_) {
        LocalSchema schema = adapter->schema_snapshot();
        auto reg = registry_.find(site);
        const LocalSchema* copy = reg == registry_.end() ? nullptr : &reg->second;
        if (!copy || !schema_equal(*copy, schema))
            diff_lines("site " + site + " (mediator copy vs local schema)",
                       copy ? serialize_schema(*copy) : "", serialize_schema(schema),
                       report.diff);
        truth.emplace(site, std::move(schema));
    }

    // re-run every operator from scratch against the sites' current schemas
    GlobalSchema rebuilt;
    for (const auto& vc : global_.classes) {
        VirtualClass fresh;
        fresh.name = vc.name;
        fresh.op = vc.op;
        fresh.constituents = vc.constituents;
        revalidate(fresh, truth, store_);
        rebuilt.classes.push_back(std::move(fresh));
    }

    auto render = [](const GlobalSchema& g) {
        Federation shell;
        shell.global_ = g;
        return shell.export_global_schema();
    };
    diff_lines("global schema (incremental vs from-scratch)",
               render(global_), render(rebuilt), report.diff);

    report.equal = report.diff.empty();
    return report;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

void Federation::attach_state_dir(const fs::path& dir) {
    std::lock_guard lock(*mu_);
    fs::create_directories(dir / "sites");
    fs::create_directories(dir / "mediator");
    state_dir_ = dir;
    for (auto& [site, adapter] : adapters_) {
        const SiteId s = site;
        adapter->on_log_append([dir, s](const ChangeLogEntry& e) {
            std::ofstream out(site_log_file(dir, s), std::ios::app);
            out << e.to_line() << "\n";
        });
    }
    save_unlocked();
}

void Federation::save() const {
    std::lock_guard lock(*mu_);
    save_unlocked();
}

void Federation::save_unlocked() const {
    if (!state_dir_)
        return;
    const fs::path& dir = *state_dir_;
    fs::create_directories(dir / "sites");
    fs::create_directories(dir / "mediator");
    std::string meta;
    for (const auto& [site, adapter] : adapters_) {
        LocalSchema schema = adapter->schema_snapshot();
        write_text_file(site_schema_file(dir, site), serialize_schema(schema));
        std::vector<ObjectInstance> extent;
        for (const auto& cls : schema.classes)
            for (auto& obj : adapter->extent_snapshot(cls.name))
                extent.push_back(std::move(obj));
        write_text_file(site_data_file(dir, site), serialize_extent(extent, schema));
        std::string log;
        std::uint64_t delivered = 0;
        for (const auto& e : adapter->log_snapshot()) {
            log += e.to_line() + "\n";
            if (e.delivered)
                delivered = std::max(delivered, e.seq);
        }
        write_text_file(site_log_file(dir, site), log);
        meta += "site=" + site + " online=" + (adapter->online() ? "1" : "0") +
                " delivered=" + std::to_string(delivered) + "\n";
    }
    write_text_file((dir / "sites.txt").string(), meta);
    persist_mediator_state();
}

void Federation::persist_site(const SiteId& site) const {
    if (!state_dir_)
        return;
    const fs::path& dir = *state_dir_;
    const SourceAdapter& adapter = *adapters_.at(site);
    LocalSchema schema = adapter.schema_snapshot();
    write_text_file(site_schema_file(dir, site), serialize_schema(schema));
    std::vector<ObjectInstance> extent;
    for (const auto& cls : schema.classes)
        for (auto& obj : adapter.extent_snapshot(cls.name))
            extent.push_back(std::move(obj));
    write_text_file(site_data_file(dir, site), serialize_extent(extent, schema));
    std::string meta;
    for (const auto& [s, a] : adapters_) {
        std::uint64_t delivered = 0;
        for (const auto& e : a->log_snapshot())
            if (e.delivered)
                delivered = std::max(delivered, e.seq);
        meta += "site=" + s + " online=" + (a->online() ? "1" : "0") +
                " delivered=" + std::to_string(delivered) + "\n";
    }
    write_text_file((dir / "sites.txt").string(), meta);
}

void Federation::persist_mediator_state() const {
    if (!state_dir_)
        return;
    const fs::path& dir = *state_dir_;
    std::string applied;
    for (const auto& [site, seq] : applied_)
        applied += "site=" + site + " applied=" + std::to_string(seq) + "\n";
    write_text_file((dir / "mediator" / "applied.txt").string(), applied);
    for (const auto& [site, schema] : registry_)
        write_text_file(mediator_schema_file(dir, site), serialize_schema(schema));
    write_text_file((dir / "assertions.txt").string(), pretty_print(store_));
    write_text_file((dir / "global.txt").string(), serialize_global_definitions(global_));
}

Federation Federation::load(const fs::path& dir) {
    Federation f;
    if (!fs::exists(dir / "sites.txt")) {
        f.attach_state_dir(dir);
        return f;
    }
    struct SiteMeta {
        bool online = true;
        std::uint64_t delivered = 0;
    };
    std::map<SiteId, SiteMeta, NameLess> metas;
    {
        std::istringstream in(read_text_file((dir / "sites.txt").string()));
        std::string line;
        while (std::getline(in, line)) {
            SiteId site;
            SiteMeta meta;
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) {
                if (tok.starts_with("site="))
                    site = tok.substr(5);
                else if (tok.starts_with("online="))
                    meta.online = tok.substr(7) == "1";
                else if (tok.starts_with("delivered="))
                    meta.delivered = std::stoull(tok.substr(10));
            }
            if (!site.empty())
                metas.emplace(site, meta);
        }
    }
    for (const auto& [site, meta] : metas) {
        LocalSchema schema = parse_schema_file(read_text_file(site_schema_file(dir, site)), site);
        std::vector<ObjectInstance> extent;
        if (fs::exists(site_data_file(dir, site)))
            extent = parse_extent_file(read_text_file(site_data_file(dir, site)), schema);
        SourceAdapter& adapter = f.register_site(schema, std::move(extent));
        if (fs::exists(site_log_file(dir, site))) {
            std::vector<ChangeLogEntry> log;
            std::istringstream in(read_text_file(site_log_file(dir, site)));
            std::string line;
            while (std::getline(in, line)) {
                if (line.empty())
                    continue;
                ChangeLogEntry e = parse_log_line(line, site);
                e.delivered = e.seq <= meta.delivered;
                log.push_back(std::move(e));
            }
            adapter.restore_log(std::move(log));
        }
        adapter.set_connectivity(meta.online);
        if (fs::exists(mediator_schema_file(dir, site)))
            f.registry_[site] =
                parse_schema_file(read_text_file(mediator_schema_file(dir, site)), site);
    }
    if (fs::exists(dir / "mediator" / "applied.txt")) {
        std::istringstream in(read_text_file((dir / "mediator" / "applied.txt").string()));
        std::string line;
        while (std::getline(in, line)) {
            SiteId site;
            std::uint64_t seq = 0;
            std::istringstream ls(line);
            std::string tok;
            while (ls >> tok) {
                if (tok.starts_with("site="))
                    site = tok.substr(5);
                else if (tok.starts_with("applied="))
                    seq = std::stoull(tok.substr(8));
            }
            if (!site.empty())
                f.applied_[site] = seq;
        }
    }
    if (fs::exists(dir / "assertions.txt"))
        f.store_ = parse_assertions(read_text_file((dir / "assertions.txt").string()),
                                    f.registry_, /*strict=*/false);
    if (fs::exists(dir / "global.txt")) {
        for (const auto& def :
             parse_global_definitions(read_text_file((dir / "global.txt").string()))) {
            VirtualClass vc;
            vc.name = def.name;
            vc.op = def.op;
            vc.constituents = def.constituents;
            revalidate(vc, f.registry_, f.store_);
            f.global_.classes.push_back(std::move(vc));
        }
    }
    f.attach_state_dir(dir);
    return f;
}

} // namespace mdbs
