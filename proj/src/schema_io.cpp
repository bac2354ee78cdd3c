#include "mdbs/schema_io.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mdbs/errors.hpp"

namespace mdbs {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())))
        s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || std::isspace(static_cast<unsigned char>(c))) {
            if (!cur.empty())
                out.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty())
        out.push_back(std::move(cur));
    return out;
}

[[noreturn]] void parse_fail(int line, const std::string& msg) {
    fail(Errc::parse_error, "line " + std::to_string(line) + ": " + msg);
}

} // namespace

Attribute parse_attribute_spec(std::string_view spec) {
    Attribute a;
    std::string_view rest = trim(spec);
    if (auto q = rest.find('?'); q != std::string_view::npos) {
        std::string_view flag = rest.substr(q + 1);
        if (!flag.empty() && !name_eq(flag, "nullable"))
            fail(Errc::parse_error, "bad attribute flag '" + std::string(flag) + "'");
        a.nullable = true;
        rest = rest.substr(0, q);
    }
    auto colon = rest.find(':');
    if (colon == std::string_view::npos || colon == 0)
        fail(Errc::parse_error, "attribute spec needs name:type, got '" + std::string(spec) + "'");
    a.name = std::string(trim(rest.substr(0, colon)));
    a.type = parse_semantic_type(trim(rest.substr(colon + 1)));
    return a;
}

std::string attribute_spec(const Attribute& a) {
    std::string s = a.name + ":" + to_string(a.type);
    if (a.nullable)
        s += "?nullable";
    return s;
}

LocalSchema parse_schema_file(const std::string& text, const SiteId& site) {
    LocalSchema schema;
    schema.site = site;
    LocalClass* cur = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        if (line.starts_with("class ") || line.starts_with("class\t")) {
            std::string name(trim(line.substr(6)));
            if (name.empty())
                parse_fail(lineno, "class with no name");
            schema.classes.push_back(LocalClass{site, name, {}, {}});
            cur = &schema.classes.back();
        } else if (line.starts_with("key:")) {
            if (!cur)
                parse_fail(lineno, "key line outside a class");
            cur->key = split_list(line.substr(4));
            if (cur->key.empty())
                parse_fail(lineno, "key line names no attributes");
        } else {
            if (!cur)
                parse_fail(lineno, "attribute line outside a class");
            try {
                cur->attributes.push_back(parse_attribute_spec(line));
            } catch (const Error& e) {
                parse_fail(lineno, e.what());
            }
        }
    }
    schema.validate();
    return schema;
}

std::string serialize_schema(const LocalSchema& schema) {
    std::string out;
    for (const auto& c : schema.classes) {
        out += "class " + c.name + "\n";
        for (const auto& a : c.attributes)
            out += "  " + attribute_spec(a) + "\n";
        if (!c.key.empty()) {
            out += "  key:";
            for (const auto& k : c.key)
                out += " " + k;
            out += "\n";
        }
    }
    return out;
}

namespace {

// attr=value tokens; values may be double-quoted to include spaces.
std::vector<std::pair<std::string, std::string>> parse_pairs(std::string_view line, int lineno) {
    std::vector<std::pair<std::string, std::string>> out;
    std::size_t i = 0;
    auto skip_ws = [&] {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])))
            ++i;
    };
    while (skip_ws(), i < line.size()) {
        std::size_t eq = line.find('=', i);
        if (eq == std::string_view::npos)
            parse_fail(lineno, "expected attr=value, got '" + std::string(line.substr(i)) + "'");
        std::string name(trim(line.substr(i, eq - i)));
        if (name.empty())
            parse_fail(lineno, "empty attribute name");
        i = eq + 1;
        std::string value;
        if (i < line.size() && line[i] == '"') {
            ++i;
            while (i < line.size() && line[i] != '"')
                value.push_back(line[i++]);
            if (i >= line.size())
                parse_fail(lineno, "unterminated quote");
            ++i;
        } else {
            while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i])))
                value.push_back(line[i++]);
        }
        out.emplace_back(std::move(name), std::move(value));
    }
    return out;
}

std::string quote_if_needed(const std::string& s) {
    if (s.empty() || s.find(' ') != std::string::npos || s.find('\t') != std::string::npos)
        return "\"" + s + "\"";
    return s;
}

} // namespace

std::vector<ObjectInstance> parse_extent_file(const std::string& text,
                                              const LocalSchema& schema) {
    std::vector<ObjectInstance> objects;
    const LocalClass* cur = nullptr;
    std::istringstream in(text);
    std::string raw;
    int lineno = 0;
    while (std::getline(in, raw)) {
        ++lineno;
        std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#')
            continue;
        if (line.starts_with("class ") || line.starts_with("class\t")) {
            std::string name(trim(line.substr(6)));
            cur = schema.find_class(name);
            if (!cur)
                parse_fail(lineno, "extent for unknown class '" + name + "'");
            continue;
        }
        if (!cur)
            parse_fail(lineno, "object row outside a class section");
        ObjectInstance obj;
        obj.cls = cur->ref();
        for (auto& [name, value] : parse_pairs(line, lineno)) {
            const Attribute* a = cur->find_attribute(name);
            if (!a)
                parse_fail(lineno, "unknown attribute '" + name + "' of class " + cur->name);
            if (value == "NULL")
                obj.values[a->name] = Value{};
            else
                try {
                    obj.values[a->name] = parse_value(value, a->type);
                } catch (const Error& e) {
                    parse_fail(lineno, e.what());
                }
        }
        obj.validate(*cur);
        objects.push_back(std::move(obj));
    }
    return objects;
}

std::string serialize_extent(const std::vector<ObjectInstance>& objects,
                             const LocalSchema& schema) {
    std::string out;
    for (const auto& c : schema.classes) {
        bool header = false;
        for (const auto& obj : objects) {
            if (!name_eq(obj.cls.class_name, c.name))
                continue;
            if (!header) {
                out += "class " + c.name + "\n";
                header = true;
            }
            std::string line;
            for (const auto& a : c.attributes) {
                const Value* v = obj.find(a.name);
                std::string rendered = !v || is_null(*v) ? "NULL" : render_value(*v);
                if (!line.empty())
                    line += " ";
                line += a.name + "=" + quote_if_needed(rendered);
            }
            out += line + "\n";
        }
    }
    return out;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        fail(Errc::io_error, "cannot read '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            fail(Errc::io_error, "cannot write '" + tmp + "'");
        out << text;
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        fail(Errc::io_error, "cannot replace '" + path + "': " + ec.message());
}

} // namespace mdbs
