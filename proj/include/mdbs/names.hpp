#pragma once

#include <string>
#include <string_view>

namespace mdbs {

// Schema object names (sites, classes, attributes, virtual classes) compare
// case-insensitively but are stored and displayed as given.
std::string fold_name(std::string_view s);
bool name_eq(std::string_view a, std::string_view b);
bool name_lt(std::string_view a, std::string_view b);

struct NameLess {
    using is_transparent = void;
    bool operator()(std::string_view a, std::string_view b) const { return name_lt(a, b); }
};

} // namespace mdbs
