#include "mdbs/errors.hpp"

namespace mdbs {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::duplicate_site: return "DuplicateSite";
    case Errc::unknown_site: return "UnknownSite";
    case Errc::invalid_schema: return "InvalidSchema";
    case Errc::unknown_class: return "UnknownClass";
    case Errc::unknown_attribute: return "UnknownAttribute";
    case Errc::name_collision: return "NameCollision";
    case Errc::site_offline: return "SiteOffline";
    case Errc::invalid_change: return "InvalidChange";
    case Errc::parse_error: return "ParseError";
    case Errc::unknown_reference: return "UnknownReference";
    case Errc::type_mismatch: return "TypeMismatch";
    case Errc::inconsistent_assertion: return "InconsistentAssertion";
    case Errc::homonymy_forbidden: return "HomonymyForbidden";
    case Errc::missing_assertion: return "MissingAssertion";
    case Errc::arity_error: return "ArityError";
    case Errc::missing_key_link: return "MissingKeyLink";
    case Errc::invalidated_virtual_class: return "InvalidatedVirtualClass";
    case Errc::partial_result: return "PartialResultError";
    case Errc::invalid_query: return "InvalidQuery";
    case Errc::io_error: return "IoError";
    }
    return "Error";
}

} // namespace mdbs
