#pragma once

#include <stdexcept>
#include <string>

namespace mdbs {

enum class Errc {
    duplicate_site,
    unknown_site,
    invalid_schema,
    unknown_class,
    unknown_attribute,
    name_collision,
    site_offline,
    invalid_change,
    parse_error,
    unknown_reference,
    type_mismatch,
    inconsistent_assertion,
    homonymy_forbidden,
    missing_assertion,
    arity_error,
    missing_key_link,
    invalidated_virtual_class,
    partial_result,
    invalid_query,
    io_error,
};

const char* errc_name(Errc c);

struct Error : std::runtime_error {
    Errc code;
    Error(Errc c, const std::string& msg)
        : std::runtime_error(std::string(errc_name(c)) + ": " + msg), code(c) {}
};

[[noreturn]] inline void fail(Errc c, const std::string& msg) { throw Error(c, msg); }

} // namespace mdbs
