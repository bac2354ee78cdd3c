#include "mdbs/query.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <map>
#include <sstream>

#include "mdbs/errors.hpp"

namespace mdbs {

namespace {

std::vector<std::string> tokenize_query(const std::string& text) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            char quote = c;
            std::string tok(1, '"'); // normalized quote marker
            ++i;
            while (i < text.size() && text[i] != quote)
                tok.push_back(text[i++]);
            if (i >= text.size())
                fail(Errc::parse_error, "unterminated string literal in query");
            ++i;
            tokens.push_back(std::move(tok));
            continue;
        }
        if (c == ',' || c == '*') {
            tokens.push_back(std::string(1, c));
            ++i;
            continue;
        }
        if (c == '=' || c == '<' || c == '>' || c == '!') {
            std::string tok(1, c);
            ++i;
            if (i < text.size() && (text[i] == '=' || (c == '<' && text[i] == '>')))
                tok.push_back(text[i++]);
            tokens.push_back(std::move(tok));
            continue;
        }
        std::string tok;
        while (i < text.size() && !std::isspace(static_cast<unsigned char>(text[i])) &&
               text[i] != ',' && text[i] != '=' && text[i] != '<' && text[i] != '>' &&
               text[i] != '!')
            tok.push_back(text[i++]);
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

bool is_word(const std::string& tok, const char* word) { return name_eq(tok, word); }

Cmp mirror(Cmp op) {
    switch (op) {
    case Cmp::lt: return Cmp::gt;
    case Cmp::le: return Cmp::ge;
    case Cmp::gt: return Cmp::lt;
    case Cmp::ge: return Cmp::le;
    default: return op;
    }
}

} // namespace

ParsedQuery parse_query_text(const std::string& text) {
    auto tokens = tokenize_query(text);
    std::size_t i = 0;
    auto need = [&](const char* what) -> const std::string& {
        if (i >= tokens.size())
            fail(Errc::parse_error, std::string("query ended early; expected ") + what);
        return tokens[i];
    };
    ParsedQuery q;
    if (!is_word(need("select"), "select"))
        fail(Errc::parse_error, "query must start with select");
    ++i;
    if (need("a projection") == "*") {
        ++i;
    } else {
        for (;;) {
            q.projection.push_back(need("an attribute name"));
            ++i;
            if (i < tokens.size() && tokens[i] == ",") {
                ++i;
                continue;
            }
            break;
        }
    }
    if (!is_word(need("from"), "from"))
        fail(Errc::parse_error, "expected 'from'");
    ++i;
    q.virtual_class = need("a virtual class name");
    ++i;
    if (i < tokens.size()) {
        if (!is_word(tokens[i], "where"))
            fail(Errc::parse_error, "expected 'where', got '" + tokens[i] + "'");
        ++i;
        for (;;) {
            ParsedQuery::RawCondition cond;
            cond.attribute = need("an attribute name");
            ++i;
            cond.op = parse_cmp(need("a comparator"));
            ++i;
            cond.lexeme = need("a literal");
            ++i;
            q.conditions.push_back(std::move(cond));
            if (i < tokens.size() && is_word(tokens[i], "and")) {
                ++i;
                continue;
            }
            break;
        }
    }
    if (i != tokens.size())
        fail(Errc::parse_error, "trailing input after query: '" + tokens[i] + "'");
    return q;
}

GlobalQuery bind_query(const ParsedQuery& q, const VirtualClass& vc) {
    GlobalQuery out;
    out.virtual_class = vc.name;
    for (const auto& p : q.projection) {
        const GlobalAttribute* g = vc.find_attribute(p);
        if (!g)
            fail(Errc::unknown_attribute, vc.name + "." + p);
        out.projection.push_back(g->name);
    }
    for (const auto& c : q.conditions) {
        const GlobalAttribute* g = vc.find_attribute(c.attribute);
        if (!g)
            fail(Errc::unknown_attribute, vc.name + "." + c.attribute);
        std::string lexeme = c.lexeme;
        bool quoted = !lexeme.empty() && lexeme.front() == '"';
        if (quoted)
            lexeme.erase(0, 1);
        Value literal = parse_value(lexeme, g->type);
        out.predicate.push_back(Condition{g->name, c.op, std::move(literal)});
    }
    return out;
}

DecomposedQuery decompose(const GlobalQuery& q, const VirtualClass& vc,
                          const AssertionStore& store, bool pushdown) {
    if (!vc.status.valid)
        fail(Errc::invalidated_virtual_class, vc.name + " is " + vc.status.display());
    DecomposedQuery out;
    out.mediator_predicate = q.predicate;

    // projection + predicate attributes, plus the key when rows merge by it
    std::vector<const GlobalAttribute*> needed;
    auto add_needed = [&](const std::string& name) {
        const GlobalAttribute* g = vc.find_attribute(name);
        if (!g)
            fail(Errc::unknown_attribute, vc.name + "." + name);
        if (std::find(needed.begin(), needed.end(), g) == needed.end())
            needed.push_back(g);
    };
    if (q.projection.empty())
        for (const auto& g : vc.attributes)
            needed.push_back(&g);
    else
        for (const auto& p : q.projection)
            add_needed(p);
    for (const auto& c : q.predicate)
        add_needed(c.attribute);
    bool merging = vc.merges_by_key() || vc.op == OperatorKind::specialize;
    if (merging && vc.key)
        add_needed(*vc.key);
    for (const auto* g : needed)
        out.needed_attributes.push_back(g->name);

    for (const auto& ref : vc.constituents) {
        ConstituentSubQuery sub;
        sub.target = ref;
        sub.query.class_name = ref.class_name;
        for (const auto* g : needed)
            if (const AttributeMemberRef* b = g->binding_for(ref))
                if (std::find_if(sub.query.projection.begin(), sub.query.projection.end(),
                                 [&](const std::string& s) {
                                     return name_eq(s, b->attribute);
                                 }) == sub.query.projection.end())
                    sub.query.projection.push_back(b->attribute);
        if (pushdown) {
            for (const auto& c : q.predicate) {
                const GlobalAttribute* g = vc.find_attribute(c.attribute);
                if (merging && !(vc.key && name_eq(g->name, *vc.key)))
                    continue; // non-key filtering would perturb cross-site merging
                const AttributeMemberRef* b = g->binding_for(ref);
                if (!b)
                    continue; // retained for mediator-side filtering
                if (!b->conversion) {
                    sub.query.predicate.push_back(Condition{b->attribute, c.op, c.literal});
                    continue;
                }
                const ConversionFunction* f = store.find_conversion(*b->conversion);
                if (!f || !f->invertible())
                    continue;
                bool flips = false;
                auto local_literal = f->invert(c.literal, flips);
                if (!local_literal)
                    continue;
                sub.query.predicate.push_back(
                    Condition{b->attribute, flips ? mirror(c.op) : c.op, *local_literal});
            }
        }
        out.subqueries.push_back(std::move(sub));
    }
    return out;
}

namespace {

// One constituent's contribution mapped into the global attribute grid;
// absent bindings and unfetched columns read as null.
struct GlobalRows {
    std::vector<std::vector<Value>> rows;
    std::vector<bool> bound; // per vc attribute: constituent has a live column
};

GlobalRows to_global(const SubResult& sub, const VirtualClass& vc, const ClassRef& ref,
                     const AssertionStore& store) {
    GlobalRows out;
    out.bound.assign(vc.attributes.size(), false);
    std::vector<int> column(vc.attributes.size(), -1);
    std::vector<const ConversionFunction*> conv(vc.attributes.size(), nullptr);
    for (std::size_t a = 0; a < vc.attributes.size(); ++a) {
        const AttributeMemberRef* b = vc.attributes[a].binding_for(ref);
        if (!b)
            continue;
        for (std::size_t h = 0; h < sub.header.size(); ++h)
            if (name_eq(sub.header[h], b->attribute)) {
                column[a] = static_cast<int>(h);
                out.bound[a] = true;
                if (b->conversion)
                    conv[a] = store.find_conversion(*b->conversion);
                break;
            }
    }
    for (const auto& sub_row : sub.rows) {
        std::vector<Value> row(vc.attributes.size());
        for (std::size_t a = 0; a < vc.attributes.size(); ++a) {
            if (column[a] < 0)
                continue;
            Value v = sub_row[static_cast<std::size_t>(column[a])];
            if (conv[a])
                v = conv[a]->apply(v);
            row[a] = coerce_value(v, vc.attributes[a].type);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

struct ValueOrder {
    bool operator()(const Value& a, const Value& b) const { return value_less(a, b); }
};

} // namespace

QueryResult compose(const std::vector<std::optional<SubResult>>& sub_results,
                    const VirtualClass& vc, const GlobalQuery& q,
                    const AssertionStore& store, bool /*pushdown*/) {
    const std::size_t n = vc.constituents.size();
    if (sub_results.size() != n)
        fail(Errc::partial_result, "expected one sub-result per constituent of " + vc.name);

    QueryResult result;
    std::vector<std::string> answered, offline;
    for (std::size_t i = 0; i < n; ++i)
        (sub_results[i] ? answered : offline).push_back(vc.constituents[i].display());
    if (!offline.empty()) {
        if (vc.op == OperatorKind::specialize) {
            std::string who;
            for (const auto& s : answered)
                who += (who.empty() ? "" : ", ") + s;
            fail(Errc::partial_result,
                 "extent intersection is unsound with constituents offline; answered: " +
                     (who.empty() ? std::string("none") : who));
        }
        for (const auto& s : offline)
            result.warnings.push_back("constituent " + s + " is offline; partial result");
    }

    std::size_t key_idx = vc.attributes.size();
    if (vc.key)
        for (std::size_t a = 0; a < vc.attributes.size(); ++a)
            if (name_eq(vc.attributes[a].name, *vc.key))
                key_idx = a;
    bool merging =
        (vc.merges_by_key() || vc.op == OperatorKind::specialize) && key_idx < vc.attributes.size();

    std::vector<std::vector<Value>> rows; // full attribute grid
    if (!merging) {
        for (std::size_t i = 0; i < n; ++i) {
            if (!sub_results[i])
                continue;
            GlobalRows g = to_global(*sub_results[i], vc, vc.constituents[i], store);
            for (auto& row : g.rows)
                rows.push_back(std::move(row));
        }
    } else {
        struct Merged {
            std::vector<Value> row;
            std::vector<std::string> sources; // per attribute: first contributor
            std::uint64_t present = 0;        // bitmask of constituents holding this key
        };
        std::map<Value, Merged, ValueOrder> by_key;
        std::vector<std::vector<Value>> keyless;
        for (std::size_t i = 0; i < n; ++i) {
            if (!sub_results[i])
                continue;
            const std::string source = vc.constituents[i].display();
            GlobalRows g = to_global(*sub_results[i], vc, vc.constituents[i], store);
            for (auto& row : g.rows) {
                if (is_null(row[key_idx])) {
                    keyless.push_back(std::move(row));
                    continue;
                }
                auto [it, fresh] = by_key.try_emplace(row[key_idx]);
                Merged& m = it->second;
                if (fresh) {
                    m.row.assign(vc.attributes.size(), Value{});
                    m.sources.assign(vc.attributes.size(), "");
                }
                m.present |= std::uint64_t{1} << i;
                for (std::size_t a = 0; a < vc.attributes.size(); ++a) {
                    if (!g.bound[a] || is_null(row[a]))
                        continue;
                    if (is_null(m.row[a])) {
                        m.row[a] = row[a];
                        m.sources[a] = source;
                    } else if (!values_equal(m.row[a], row[a])) {
                        result.warnings.push_back(
                            "value conflict on " + vc.name + "." + vc.attributes[a].name +
                            " for key " + render_value(row[key_idx]) + ": kept '" +
                            render_value(m.row[a]) + "' (" + m.sources[a] + "), ignored '" +
                            render_value(row[a]) + "' (" + source + ")");
                    }
                }
            }
        }
        for (auto& [key, m] : by_key) {
            if (vc.op == OperatorKind::specialize &&
                static_cast<std::size_t>(std::popcount(m.present)) < n)
                continue; // key must be present at every constituent
            rows.push_back(std::move(m.row));
        }
        if (vc.op != OperatorKind::specialize)
            for (auto& row : keyless)
                rows.push_back(std::move(row));
    }

    // residual filtering: the full predicate runs against composed rows
    std::vector<std::vector<Value>> kept;
    for (auto& row : rows) {
        bool ok = true;
        for (const auto& c : q.predicate) {
            const GlobalAttribute* g = vc.find_attribute(c.attribute);
            std::size_t a = static_cast<std::size_t>(g - vc.attributes.data());
            if (!eval_condition(row[a], c.op, c.literal)) {
                ok = false;
                break;
            }
        }
        if (ok)
            kept.push_back(std::move(row));
    }

    // final projection
    std::vector<std::size_t> out_cols;
    if (q.projection.empty()) {
        for (std::size_t a = 0; a < vc.attributes.size(); ++a)
            out_cols.push_back(a);
    } else {
        for (const auto& p : q.projection) {
            const GlobalAttribute* g = vc.find_attribute(p);
            if (!g)
                fail(Errc::unknown_attribute, vc.name + "." + p);
            out_cols.push_back(static_cast<std::size_t>(g - vc.attributes.data()));
        }
    }
    for (std::size_t c : out_cols)
        result.header.push_back(vc.attributes[c].name);
    for (auto& row : kept) {
        std::vector<Value> out_row;
        out_row.reserve(out_cols.size());
        for (std::size_t c : out_cols)
            out_row.push_back(std::move(row[c]));
        result.rows.push_back(std::move(out_row));
    }
    return result;
}

std::string render_table(const QueryResult& result) {
    std::vector<std::size_t> width(result.header.size());
    auto cell = [&](const Value& v) { return render_value(v, ""); };
    for (std::size_t c = 0; c < result.header.size(); ++c)
        width[c] = result.header[c].size();
    for (const auto& row : result.rows)
        for (std::size_t c = 0; c < row.size(); ++c)
            width[c] = std::max(width[c], cell(row[c]).size());
    std::string out;
    auto emit_row = [&](const std::vector<std::string>& cells) {
        std::string line;
        for (std::size_t c = 0; c < cells.size(); ++c) {
            line += cells[c];
            if (c + 1 < cells.size())
                line += std::string(width[c] - cells[c].size() + 2, ' ');
        }
        while (!line.empty() && line.back() == ' ')
            line.pop_back();
        out += line + "\n";
    };
    emit_row(result.header);
    for (const auto& row : result.rows) {
        std::vector<std::string> cells;
        cells.reserve(row.size());
        for (const auto& v : row)
            cells.push_back(cell(v));
        emit_row(cells);
    }
    for (const auto& w : result.warnings)
        out += "-- warning: " + w + "\n";
    return out;
}

std::string render_tsv(const QueryResult& result) {
    std::string out;
    for (std::size_t c = 0; c < result.header.size(); ++c)
        out += (c ? "\t" : "") + result.header[c];
    out += "\n";
    for (const auto& row : result.rows) {
        for (std::size_t c = 0; c < row.size(); ++c)
            out += (c ? "\t" : "") + render_value(row[c], "\\N");
        out += "\n";
    }
    return out;
}

} // namespace mdbs
