#include "mdbs/adapter.hpp"

#include <algorithm>

#include "mdbs/errors.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs {

const char* cmp_symbol(Cmp op) {
    switch (op) {
    case Cmp::eq: return "=";
    case Cmp::ne: return "!=";
    case Cmp::lt: return "<";
    case Cmp::le: return "<=";
    case Cmp::gt: return ">";
    case Cmp::ge: return ">=";
    }
    return "?";
}

Cmp parse_cmp(std::string_view sym) {
    if (sym == "=" || sym == "==") return Cmp::eq;
    if (sym == "!=" || sym == "<>") return Cmp::ne;
    if (sym == "<") return Cmp::lt;
    if (sym == "<=") return Cmp::le;
    if (sym == ">") return Cmp::gt;
    if (sym == ">=") return Cmp::ge;
    fail(Errc::parse_error, "unknown comparator '" + std::string(sym) + "'");
}

bool eval_condition(const Value& v, Cmp op, const Value& literal) {
    auto c = compare_values(v, literal);
    if (!c)
        return false; // nulls and incomparable kinds satisfy nothing
    switch (op) {
    case Cmp::eq: return *c == 0;
    case Cmp::ne: return *c != 0;
    case Cmp::lt: return *c < 0;
    case Cmp::le: return *c <= 0;
    case Cmp::gt: return *c > 0;
    case Cmp::ge: return *c >= 0;
    }
    return false;
}

SourceAdapter::SourceAdapter(LocalSchema schema, std::vector<ObjectInstance> extent)
    : site_(schema.site), schema_(std::move(schema)) {
    schema_.validate();
    for (const auto& c : schema_.classes)
        extents_[c.name]; // ensure a slot per class
    for (auto& obj : extent) {
        const LocalClass* c = schema_.find_class(obj.cls.class_name);
        if (!c)
            fail(Errc::invalid_schema, "extent row for unknown class " + obj.cls.display());
        obj.cls = c->ref();
        obj.validate(*c);
        extents_[c->name].push_back(std::move(obj));
    }
    validate_extents();
    // identity must be unique where declared
    for (const auto& c : schema_.classes) {
        if (c.key.empty())
            continue;
        const auto& rows = extents_.find(c.name)->second;
        for (std::size_t i = 0; i < rows.size(); ++i)
            for (std::size_t j = i + 1; j < rows.size(); ++j) {
                bool same = true;
                for (const auto& k : c.key) {
                    const Value* a = rows[i].find(k);
                    const Value* b = rows[j].find(k);
                    if (!a || !b || !values_equal(*a, *b)) {
                        same = false;
                        break;
                    }
                }
                if (same)
                    fail(Errc::invalid_schema,
                         "duplicate key in extent of " + site_ + "." + c.name);
            }
    }
}

LocalSchema SourceAdapter::schema_snapshot() const {
    std::lock_guard lock(mu_);
    return schema_;
}

std::uint64_t SourceAdapter::version() const {
    std::lock_guard lock(mu_);
    return version_;
}

bool SourceAdapter::online() const {
    std::lock_guard lock(mu_);
    return online_;
}

bool SourceAdapter::set_connectivity(bool online) {
    std::lock_guard lock(mu_);
    bool prev = online_;
    online_ = online;
    return prev;
}

SubResult SourceAdapter::execute_subquery(const SubQuery& q) const {
    std::lock_guard lock(mu_);
    if (!online_)
        fail(Errc::site_offline, "site " + site_ + " is offline");
    const LocalClass* cls = schema_.find_class(q.class_name);
    if (!cls)
        fail(Errc::unknown_class, site_ + "." + q.class_name);
    SubResult result;
    for (const auto& p : q.projection) {
        const Attribute* a = cls->find_attribute(p);
        if (!a)
            fail(Errc::unknown_attribute, site_ + "." + q.class_name + "." + p);
        result.header.push_back(a->name);
    }
    for (const auto& c : q.predicate)
        if (!cls->find_attribute(c.attribute))
            fail(Errc::unknown_attribute, site_ + "." + q.class_name + "." + c.attribute);
    const auto it = extents_.find(cls->name);
    for (const auto& obj : it->second) {
        bool keep = true;
        for (const auto& c : q.predicate) {
            const Value* v = obj.find(c.attribute);
            if (!v || !eval_condition(*v, c.op, c.literal)) {
                keep = false;
                break;
            }
        }
        if (!keep)
            continue;
        std::vector<Value> row;
        row.reserve(result.header.size());
        for (const auto& p : result.header) {
            const Value* v = obj.find(p);
            row.push_back(v ? *v : Value{});
        }
        result.rows.push_back(std::move(row));
    }
    return result;
}

std::uint64_t SourceAdapter::apply_local_change(const SchemaChange& change) {
    std::lock_guard lock(mu_);
    apply_unlocked(change, /*log_it=*/true);
    return version_;
}

void SourceAdapter::restructure(const SchemaChange& change) {
    std::lock_guard lock(mu_);
    apply_unlocked(change, /*log_it=*/false);
}

void SourceAdapter::apply_unlocked(const SchemaChange& change, bool log_it) {
    LocalSchema before = schema_;
    apply_schema_change(schema_, change); // throws InvalidChange, schema untouched
    adjust_extents(before, change);
    validate_extents();
    ++version_;
    if (log_it) {
        ChangeLogEntry entry;
        entry.site = site_;
        entry.seq = log_.empty() ? 1 : log_.back().seq + 1;
        entry.change = change;
        log_.push_back(entry);
        if (log_sink_)
            log_sink_(entry);
    }
}

void SourceAdapter::adjust_extents(const LocalSchema& before, const SchemaChange& change) {
    switch (change.kind) {
    case ChangeKind::add_class:
        extents_[schema_.find_class(change.class_name)->name];
        break;
    case ChangeKind::drop_class: {
        auto it = extents_.find(change.class_name);
        if (it != extents_.end())
            extents_.erase(it);
        break;
    }
    case ChangeKind::rename_class: {
        auto it = extents_.find(change.class_name);
        std::vector<ObjectInstance> rows;
        if (it != extents_.end()) {
            rows = std::move(it->second);
            extents_.erase(it);
        }
        const LocalClass* cls = schema_.find_class(change.new_name);
        for (auto& obj : rows)
            obj.cls = cls->ref();
        extents_[cls->name] = std::move(rows);
        break;
    }
    case ChangeKind::add_attribute: {
        const LocalClass* cls = schema_.find_class(change.class_name);
        const Attribute* a = cls->find_attribute(change.attribute);
        for (auto& obj : extents_[cls->name])
            obj.values[a->name] = a->nullable ? Value{} : default_value(a->type);
        break;
    }
    case ChangeKind::drop_attribute: {
        for (auto& obj : extents_[change.class_name])
            if (auto it = obj.values.find(change.attribute); it != obj.values.end())
                obj.values.erase(it);
        break;
    }
    case ChangeKind::rename_attribute: {
        for (auto& obj : extents_[change.class_name]) {
            auto it = obj.values.find(change.attribute);
            if (it != obj.values.end()) {
                Value v = std::move(it->second);
                obj.values.erase(it);
                obj.values[change.new_name] = std::move(v);
            }
        }
        break;
    }
    case ChangeKind::change_attribute_type: {
        const LocalClass* cls = schema_.find_class(change.class_name);
        const Attribute* a = cls->find_attribute(change.attribute);
        const LocalClass* prev = before.find_class(change.class_name);
        const Attribute* pa = prev ? prev->find_attribute(change.attribute) : nullptr;
        for (auto& obj : extents_[cls->name]) {
            auto it = obj.values.find(a->name);
            if (it == obj.values.end() || is_null(it->second))
                continue;
            Value v = it->second;
            if (pa && coercible(pa->type, a->type))
                v = coerce_value(v, a->type);
            else {
                // lossy retype: try a lexical reparse, fall back to null/default
                try {
                    v = parse_value(render_value(v), a->type);
                } catch (const Error&) {
                    v = a->nullable ? Value{} : default_value(a->type);
                }
            }
            it->second = std::move(v);
        }
        break;
    }
    }
}

void SourceAdapter::validate_extents() const {
    for (const auto& [name, rows] : extents_) {
        const LocalClass* cls = schema_.find_class(name);
        if (!cls)
            fail(Errc::invalid_change, "extent without class '" + name + "'");
        for (const auto& obj : rows)
            obj.validate(*cls);
    }
}

std::vector<ObjectInstance> SourceAdapter::extent_snapshot(std::string_view class_name) const {
    std::lock_guard lock(mu_);
    auto it = extents_.find(class_name);
    if (it == extents_.end())
        fail(Errc::unknown_class, site_ + "." + std::string(class_name));
    return it->second;
}

std::vector<ChangeLogEntry> SourceAdapter::log_snapshot() const {
    std::lock_guard lock(mu_);
    return log_;
}

std::vector<ChangeLogEntry> SourceAdapter::undelivered() const {
    std::lock_guard lock(mu_);
    std::vector<ChangeLogEntry> out;
    for (const auto& e : log_)
        if (!e.delivered)
            out.push_back(e);
    return out;
}

void SourceAdapter::mark_delivered(std::uint64_t upto_seq) {
    std::lock_guard lock(mu_);
    for (auto& e : log_)
        if (e.seq <= upto_seq)
            e.delivered = true;
}

void SourceAdapter::reset_delivery_marks() {
    std::lock_guard lock(mu_);
    for (auto& e : log_)
        e.delivered = false;
}

std::uint64_t SourceAdapter::last_seq() const {
    std::lock_guard lock(mu_);
    return log_.empty() ? 0 : log_.back().seq;
}

void SourceAdapter::on_log_append(std::function<void(const ChangeLogEntry&)> sink) {
    std::lock_guard lock(mu_);
    log_sink_ = std::move(sink);
}

void SourceAdapter::restore_log(std::vector<ChangeLogEntry> entries) {
    std::lock_guard lock(mu_);
    log_ = std::move(entries);
}

} // namespace mdbs
