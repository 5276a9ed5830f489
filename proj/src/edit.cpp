#include "cce/edit.hpp"

namespace cce {

const char* edit_kind_name(EditKind k) {
    switch (k) {
        case EditKind::Insert: return "insert";
        case EditKind::Delete: return "delete";
        case EditKind::Substitute: return "substitute";
    }
    return "unknown";
}

std::string edit_to_string(const EditDescriptor& e) {
    switch (e.kind) {
        case EditKind::Insert: return "insert(" + e.target + ")";
        case EditKind::Delete: return "delete(" + e.source + ")";
        case EditKind::Substitute: return "substitute(" + e.source + "->" + e.target + ")";
    }
    return "unknown";
}

std::string edit_to_string(const Edit& e) {
    return edit_to_string(e.descriptor());
}

} // namespace cce
