#pragma once

#include <string>
#include <vector>

#include "mdbs/types.hpp"

namespace mdbs {

// Line-oriented schema description document, one per site:
//
//   # comment
//   class employees
//     employeecode:integer
//     name:text
//     salary:integer:USD?nullable
//     key: employeecode
//
// Attribute lines are `name:type[:unit][?nullable]`; an optional `key:` line
// names the identity attribute(s) of the class.
LocalSchema parse_schema_file(const std::string& text, const SiteId& site);
std::string serialize_schema(const LocalSchema& schema);

// Extent data document: `class <name>` sections followed by one object per
// line as attribute=value pairs. Values with spaces are double-quoted; the
// bare literal NULL denotes null.
//
//   class employees
//   employeecode=1 name=john country=NY age=25
std::vector<ObjectInstance> parse_extent_file(const std::string& text,
                                              const LocalSchema& schema);
std::string serialize_extent(const std::vector<ObjectInstance>& objects,
                             const LocalSchema& schema);

// Attribute spec shared by schema files and AddAttribute change payloads.
Attribute parse_attribute_spec(std::string_view spec); // name:type[:unit][?nullable]
std::string attribute_spec(const Attribute& a);

std::string read_text_file(const std::string& path);                  // throws IoError
void write_text_file(const std::string& path, const std::string& text); // atomic replace

} // namespace mdbs
