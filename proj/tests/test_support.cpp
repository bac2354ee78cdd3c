#include "test_support.hpp"

#include <array>
#include <algorithm>

namespace mdbs::test {

RowSet central_oracle(const Federation& fed, const VirtualClass& vc, const GlobalQuery& q) {
    const AssertionStore& store = fed.assertions();
    const std::size_t n = vc.constituents.size();
    const std::size_t width = vc.attributes.size();

    std::size_t key_idx = width;
    if (vc.key)
        for (std::size_t a = 0; a < width; ++a)
            if (name_eq(vc.attributes[a].name, *vc.key))
                key_idx = a;
    bool merging = key_idx < width && (n > 1 || vc.op == OperatorKind::specialize);

    // materialize every constituent extent in global terms
    std::vector<std::vector<std::vector<Value>>> per_constituent(n);
    std::vector<std::vector<bool>> bound(n, std::vector<bool>(width, false));
    for (std::size_t i = 0; i < n; ++i) {
        const ClassRef& ref = vc.constituents[i];
        auto extent = fed.adapter(ref.site).extent_snapshot(ref.class_name);
        for (std::size_t a = 0; a < width; ++a)
            bound[i][a] = vc.attributes[a].binding_for(ref) != nullptr;
        for (const auto& obj : extent) {
            std::vector<Value> row(width);
            for (std::size_t a = 0; a < width; ++a) {
                const AttributeMemberRef* b = vc.attributes[a].binding_for(ref);
                if (!b)
                    continue;
                const Value* raw = obj.find(b->attribute);
                if (!raw || is_null(*raw))
                    continue;
                Value v = *raw;
                if (b->conversion)
                    if (const ConversionFunction* f = store.find_conversion(*b->conversion))
                        v = f->apply(v);
                row[a] = coerce_value(v, vc.attributes[a].type);
            }
            per_constituent[i].push_back(std::move(row));
        }
    }

    std::vector<std::vector<Value>> composed;
    if (!merging) {
        for (auto& rows : per_constituent)
            for (auto& row : rows)
                composed.push_back(std::move(row));
    } else {
        std::map<std::string, std::vector<Value>> merged;
        std::map<std::string, std::set<std::size_t>> present;
        std::vector<std::vector<Value>> keyless;
        for (std::size_t i = 0; i < n; ++i) {
            for (auto& row : per_constituent[i]) {
                if (is_null(row[key_idx])) {
                    keyless.push_back(std::move(row));
                    continue;
                }
                std::string k = normalize_cell(row[key_idx]);
                present[k].insert(i);
                auto it = merged.find(k);
                if (it == merged.end()) {
                    merged.emplace(k, row);
                    continue;
                }
                for (std::size_t a = 0; a < width; ++a)
                    if (is_null(it->second[a]) && bound[i][a])
                        it->second[a] = row[a]; // earliest constituent wins conflicts
            }
        }
        for (auto& [k, row] : merged) {
            if (vc.op == OperatorKind::specialize && present[k].size() < n)
                continue;
            composed.push_back(std::move(row));
        }
        if (vc.op != OperatorKind::specialize)
            for (auto& row : keyless)
                composed.push_back(std::move(row));
    }

    // filter, then project
    RowSet out;
    for (const auto& row : composed) {
        bool keep = true;
        for (const auto& c : q.predicate) {
            std::size_t a = width;
            for (std::size_t i = 0; i < width; ++i)
                if (name_eq(vc.attributes[i].name, c.attribute))
                    a = i;
            if (a == width || !eval_condition(row[a], c.op, c.literal)) {
                keep = false;
                break;
            }
        }
        if (!keep)
            continue;
        std::vector<std::string> cells;
        if (q.projection.empty()) {
            for (const auto& v : row)
                cells.push_back(normalize_cell(v));
        } else {
            for (const auto& p : q.projection)
                for (std::size_t a = 0; a < width; ++a)
                    if (name_eq(vc.attributes[a].name, p))
                        cells.push_back(normalize_cell(row[a]));
        }
        out.insert(std::move(cells));
    }
    return out;
}

namespace {

std::string site_name(std::size_t i) { return "S" + std::to_string(i + 1); }

} // namespace

RandomFederation make_random_federation(std::mt19937_64& rng) {
    auto pick = [&](std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    };
    auto chance = [&](double p) {
        return std::uniform_real_distribution<double>(0, 1)(rng) < p;
    };

    const std::size_t nsites = 2 + pick(3); // 2..4
    const std::array<OperatorKind, 3> ops{OperatorKind::union_op, OperatorKind::generalize,
                                          OperatorKind::specialize};
    const OperatorKind op = ops[pick(3)];
    const bool keyed = op == OperatorKind::specialize || chance(0.8);
    const bool same_name = chance(0.5);

    struct Concept {
        std::string name;
        BaseType base;
    };
    std::vector<Concept> concepts;
    const std::array<BaseType, 4> bases{BaseType::integer, BaseType::real, BaseType::text,
                                        BaseType::date};
    const std::size_t nconcepts = 3 + pick(4); // 3..6
    for (std::size_t i = 0; i < nconcepts; ++i)
        concepts.push_back({"c" + std::to_string(i), bases[pick(4)]});

    struct Member {
        bool present = false;
        std::string local_name;
        BaseType local_base = BaseType::text;
        bool nullable = false;
        std::string conversion; // empty = none
        int conv_scale = 1, conv_offset = 0;
    };
    std::vector<std::vector<Member>> members(nsites, std::vector<Member>(nconcepts));
    std::string conversions_dsl;

    std::vector<LocalSchema> schemas(nsites);
    for (std::size_t s = 0; s < nsites; ++s) {
        LocalClass cls;
        cls.site = site_name(s);
        cls.name = same_name ? "rec" : "rec_" + site_name(s);
        cls.attributes.push_back(Attribute{"k", SemanticType{BaseType::integer, {}}, false});
        cls.key = {"k"};
        for (std::size_t c = 0; c < nconcepts; ++c) {
            if (!chance(0.7))
                continue;
            Member& m = members[s][c];
            m.present = true;
            m.local_name =
                chance(0.5) ? concepts[c].name : concepts[c].name + "_" + site_name(s);
            m.nullable = chance(0.4);
            m.local_base = concepts[c].base;
            if (is_numeric(concepts[c].base) && chance(0.3)) {
                m.local_base = BaseType::integer;
                m.conversion = "f_" + site_name(s) + "_" + concepts[c].name;
                int scale_pool[] = {-3, -2, -1, 1, 2, 3};
                m.conv_scale = scale_pool[pick(6)];
                m.conv_offset = static_cast<int>(pick(11)) - 5;
                conversions_dsl += "conversion " + m.conversion + "(integer) -> real = x * " +
                                   std::to_string(m.conv_scale) +
                                   (m.conv_offset < 0
                                        ? " - " + std::to_string(-m.conv_offset)
                                        : " + " + std::to_string(m.conv_offset)) +
                                   "\n";
            }
            cls.attributes.push_back(
                Attribute{m.local_name, SemanticType{m.local_base, {}}, m.nullable});
        }
        schemas[s].site = cls.site;
        schemas[s].classes.push_back(std::move(cls));
    }

    // pairwise assertions over the shared concepts
    std::string dsl = conversions_dsl;
    for (std::size_t i = 0; i < nsites; ++i)
        for (std::size_t j = i + 1; j < nsites; ++j) {
            const LocalClass& ci = schemas[i].classes[0];
            const LocalClass& cj = schemas[j].classes[0];
            dsl += std::string(same_name ? "equivalence" : "synonymy") + " " + ci.site + "." +
                   ci.name + " ~ " + cj.site + "." + cj.name + " {\n";
            dsl += std::string("  ") + (keyed ? "key " : "") + "k == k;\n";
            for (std::size_t c = 0; c < nconcepts; ++c) {
                const Member& mi = members[i][c];
                const Member& mj = members[j][c];
                if (!mi.present || !mj.present)
                    continue;
                auto side = [](const Member& m) {
                    return m.conversion.empty() ? m.local_name
                                                : m.conversion + "(" + m.local_name + ")";
                };
                dsl += "  " + side(mi) + " == " + side(mj) + ";\n";
            }
            dsl += "}\n";
        }

    // extents
    RandomFederation out;
    for (std::size_t s = 0; s < nsites; ++s) {
        const LocalClass& cls = schemas[s].classes[0];
        std::vector<int> key_pool(60);
        for (int i = 0; i < 60; ++i)
            key_pool[static_cast<std::size_t>(i)] = i + 1;
        std::shuffle(key_pool.begin(), key_pool.end(), rng);
        std::size_t rows = pick(51); // 0..50
        std::vector<ObjectInstance> extent;
        static const char* words[] = {"alpha", "beta", "gamma", "delta", "Alpha", "beta "};
        for (std::size_t r = 0; r < rows; ++r) {
            ObjectInstance obj;
            obj.cls = cls.ref();
            obj.values["k"] = static_cast<std::int64_t>(key_pool[r]);
            for (std::size_t c = 0; c < nconcepts; ++c) {
                const Member& m = members[s][c];
                if (!m.present)
                    continue;
                if (m.nullable && chance(0.2)) {
                    obj.values[m.local_name] = Value{};
                    continue;
                }
                Value v;
                switch (m.local_base) {
                case BaseType::integer: v = static_cast<std::int64_t>(pick(21)); break;
                case BaseType::real:
                    v = static_cast<double>(pick(200)) / 10.0;
                    break;
                case BaseType::text:
                case BaseType::identifier: v = std::string(words[pick(6)]); break;
                case BaseType::date: {
                    Date d;
                    d.year = 1990 + static_cast<int>(pick(30));
                    d.month = 1 + static_cast<int>(pick(12));
                    d.day = 1 + static_cast<int>(pick(28));
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", d.day % 100, d.month % 100, d.year % 10000);
                    d.lexeme = buf;
                    v = d;
                    break;
                }
                }
                obj.values[m.local_name] = std::move(v);
            }
            extent.push_back(std::move(obj));
        }
        out.fed.register_site(schemas[s], std::move(extent));
    }
    out.fed.load_assertions(dsl);

    std::vector<ClassRef> refs;
    for (std::size_t s = 0; s < nsites; ++s)
        refs.push_back(schemas[s].classes[0].ref());
    out.vc_name = "vrec";
    out.fed.integrate_class(op, out.vc_name, refs);
    return out;
}

GlobalQuery random_query(std::mt19937_64& rng, const VirtualClass& vc) {
    auto pick = [&](std::size_t n) {
        return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    };
    auto chance = [&](double p) {
        return std::uniform_real_distribution<double>(0, 1)(rng) < p;
    };
    GlobalQuery q;
    q.virtual_class = vc.name;
    if (!vc.attributes.empty() && chance(0.7)) {
        std::size_t count = 1 + pick(vc.attributes.size());
        std::set<std::size_t> chosen;
        while (chosen.size() < count)
            chosen.insert(pick(vc.attributes.size()));
        for (std::size_t a : chosen)
            q.projection.push_back(vc.attributes[a].name);
    }
    std::size_t nconds = vc.attributes.empty() ? 0 : pick(3);
    static const char* words[] = {"alpha", "beta", "gamma", "delta", "Alpha", "zeta"};
    const std::array<Cmp, 6> cmps{Cmp::eq, Cmp::ne, Cmp::lt, Cmp::le, Cmp::gt, Cmp::ge};
    for (std::size_t i = 0; i < nconds; ++i) {
        const GlobalAttribute& g = vc.attributes[pick(vc.attributes.size())];
        Condition c;
        c.attribute = g.name;
        c.op = cmps[pick(6)];
        switch (g.type.base) {
        case BaseType::integer: c.literal = static_cast<std::int64_t>(pick(25)) - 2; break;
        case BaseType::real:
            c.literal = (static_cast<double>(pick(240)) - 20.0) / 10.0;
            break;
        case BaseType::text:
        case BaseType::identifier: c.literal = std::string(words[pick(6)]); break;
        case BaseType::date: {
            Date d;
            d.year = 1990 + static_cast<int>(pick(30));
            d.month = 1 + static_cast<int>(pick(12));
            d.day = 1 + static_cast<int>(pick(28));
            char buf[32];
            std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", d.year % 10000, d.month % 100, d.day % 100);
            d.lexeme = buf;
            c.literal = d;
            break;
        }
        }
        q.predicate.push_back(std::move(c));
    }
    return q;
}

} // namespace mdbs::test
