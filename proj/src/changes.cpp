#include "mdbs/changes.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "mdbs/errors.hpp"
#include "mdbs/schema_io.hpp"

namespace mdbs {

const char* change_kind_name(ChangeKind k) {
    switch (k) {
    case ChangeKind::add_class: return "AddClass";
    case ChangeKind::drop_class: return "DropClass";
    case ChangeKind::rename_class: return "RenameClass";
    case ChangeKind::add_attribute: return "AddAttribute";
    case ChangeKind::drop_attribute: return "DropAttribute";
    case ChangeKind::rename_attribute: return "RenameAttribute";
    case ChangeKind::change_attribute_type: return "ChangeAttributeType";
    }
    return "?";
}

namespace {

std::optional<ChangeKind> change_kind_from(std::string_view name) {
    for (ChangeKind k : {ChangeKind::add_class, ChangeKind::drop_class, ChangeKind::rename_class,
                         ChangeKind::add_attribute, ChangeKind::drop_attribute,
                         ChangeKind::rename_attribute, ChangeKind::change_attribute_type})
        if (name_eq(name, change_kind_name(k)))
            return k;
    return std::nullopt;
}

std::vector<std::pair<std::string, std::string>> split_fields(std::string_view line) {
    std::vector<std::pair<std::string, std::string>> fields;
    std::istringstream in{std::string(line)};
    std::string tok;
    while (in >> tok) {
        auto eq = tok.find('=');
        if (eq == std::string::npos)
            fail(Errc::parse_error, "expected key=value in change line, got '" + tok + "'");
        fields.emplace_back(tok.substr(0, eq), tok.substr(eq + 1));
    }
    return fields;
}

} // namespace

std::string SchemaChange::to_line() const {
    std::string s = std::string("kind=") + change_kind_name(kind) + " class=" + class_name;
    if (!attribute.empty())
        s += " attr=" + attribute;
    if (!new_name.empty())
        s += " new=" + new_name;
    if (!type_spec.empty())
        s += " type=" + type_spec;
    return s;
}

std::string ChangeLogEntry::to_line() const {
    return "seq=" + std::to_string(seq) + " " + change.to_line();
}

SchemaChange parse_change_line(std::string_view line) {
    SchemaChange c;
    bool have_kind = false;
    for (auto& [k, v] : split_fields(line)) {
        if (k == "kind") {
            auto kind = change_kind_from(v);
            if (!kind)
                fail(Errc::parse_error, "unknown change kind '" + v + "'");
            c.kind = *kind;
            have_kind = true;
        } else if (k == "class")
            c.class_name = v;
        else if (k == "attr")
            c.attribute = v;
        else if (k == "new")
            c.new_name = v;
        else if (k == "type")
            c.type_spec = v;
        else if (k != "seq")
            fail(Errc::parse_error, "unknown change field '" + k + "'");
    }
    if (!have_kind || c.class_name.empty())
        fail(Errc::parse_error, "change line needs kind= and class=");
    auto need = [&](bool ok, const char* what) {
        if (!ok)
            fail(Errc::parse_error,
                 std::string(change_kind_name(c.kind)) + " needs " + what);
    };
    switch (c.kind) {
    case ChangeKind::add_class:
    case ChangeKind::drop_class: break;
    case ChangeKind::rename_class: need(!c.new_name.empty(), "new="); break;
    case ChangeKind::add_attribute:
        need(!c.attribute.empty() && !c.type_spec.empty(), "attr= and type=");
        break;
    case ChangeKind::drop_attribute: need(!c.attribute.empty(), "attr="); break;
    case ChangeKind::rename_attribute:
        need(!c.attribute.empty() && !c.new_name.empty(), "attr= and new=");
        break;
    case ChangeKind::change_attribute_type:
        need(!c.attribute.empty() && !c.type_spec.empty(), "attr= and type=");
        break;
    }
    return c;
}

ChangeLogEntry parse_log_line(std::string_view line, const SiteId& site) {
    ChangeLogEntry e;
    e.site = site;
    for (auto& [k, v] : split_fields(line)) {
        if (k == "seq") {
            e.seq = std::stoull(v);
            break;
        }
    }
    if (e.seq == 0)
        fail(Errc::parse_error, "log line without seq=: '" + std::string(line) + "'");
    e.change = parse_change_line(line);
    return e;
}

void apply_schema_change(LocalSchema& schema, const SchemaChange& change) {
    auto require_class = [&](const std::string& name) -> LocalClass& {
        LocalClass* c = schema.find_class(name);
        if (!c)
            fail(Errc::invalid_change, "no class '" + name + "' at site " + schema.site);
        return *c;
    };
    switch (change.kind) {
    case ChangeKind::add_class: {
        if (schema.find_class(change.class_name))
            fail(Errc::invalid_change, "class '" + change.class_name + "' already exists");
        schema.classes.push_back(LocalClass{schema.site, change.class_name, {}, {}});
        break;
    }
    case ChangeKind::drop_class: {
        LocalClass& c = require_class(change.class_name);
        schema.classes.erase(schema.classes.begin() + (&c - schema.classes.data()));
        break;
    }
    case ChangeKind::rename_class: {
        LocalClass& c = require_class(change.class_name);
        if (!name_eq(change.class_name, change.new_name) && schema.find_class(change.new_name))
            fail(Errc::invalid_change, "class '" + change.new_name + "' already exists");
        c.name = change.new_name;
        break;
    }
    case ChangeKind::add_attribute: {
        LocalClass& c = require_class(change.class_name);
        Attribute a = parse_attribute_spec(change.attribute + ":" + change.type_spec);
        if (c.find_attribute(a.name))
            fail(Errc::invalid_change, "attribute '" + a.name + "' already exists");
        c.attributes.push_back(std::move(a));
        break;
    }
    case ChangeKind::drop_attribute: {
        LocalClass& c = require_class(change.class_name);
        Attribute* a = c.find_attribute(change.attribute);
        if (!a)
            fail(Errc::invalid_change, "no attribute '" + change.attribute + "'");
        std::string dropped = a->name;
        c.attributes.erase(c.attributes.begin() + (a - c.attributes.data()));
        std::erase_if(c.key, [&](const std::string& k) { return name_eq(k, dropped); });
        break;
    }
    case ChangeKind::rename_attribute: {
        LocalClass& c = require_class(change.class_name);
        Attribute* a = c.find_attribute(change.attribute);
        if (!a)
            fail(Errc::invalid_change, "no attribute '" + change.attribute + "'");
        if (!name_eq(change.attribute, change.new_name) && c.find_attribute(change.new_name))
            fail(Errc::invalid_change, "attribute '" + change.new_name + "' already exists");
        std::string old = a->name;
        a->name = change.new_name;
        for (auto& k : c.key)
            if (name_eq(k, old))
                k = change.new_name;
        break;
    }
    case ChangeKind::change_attribute_type: {
        LocalClass& c = require_class(change.class_name);
        Attribute* a = c.find_attribute(change.attribute);
        if (!a)
            fail(Errc::invalid_change, "no attribute '" + change.attribute + "'");
        try {
            a->type = parse_semantic_type(change.type_spec);
        } catch (const Error& e) {
            fail(Errc::invalid_change, e.what());
        }
        break;
    }
    }
    schema.validate();
}

} // namespace mdbs
