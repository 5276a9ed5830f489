#pragma once

#include <compare>
#include <string>

#include "cce/cost.hpp"

namespace cce {

// Kind order (Insert < Delete < Substitute) is the canonical sort order for
// edits and is relied on by deterministic tie-breaking; do not reorder.
enum class EditKind { Insert = 0, Delete = 1, Substitute = 2 };

const char* edit_kind_name(EditKind k);

// Identity of a directed edit, without cost. Insert has no source,
// Delete has no target; absent endpoints are empty strings.
struct EditDescriptor {
    EditKind kind;
    std::string source;
    std::string target;

    auto operator<=>(const EditDescriptor&) const = default;
};

// A costed edit as it appears in a minimal edit set.
struct Edit {
    EditKind kind;
    std::string source;  // empty for Insert
    std::string target;  // empty for Delete
    Cost cost;

    EditDescriptor descriptor() const { return {kind, source, target}; }
};

inline bool edit_identity_less(const Edit& a, const Edit& b) {
    return a.descriptor() < b.descriptor();
}

inline bool edit_identity_equal(const Edit& a, const Edit& b) {
    return a.descriptor() == b.descriptor();
}

// Human-readable form, e.g. "insert(chair)", "substitute(couch->bed)".
std::string edit_to_string(const EditDescriptor& e);
std::string edit_to_string(const Edit& e);

} // namespace cce
