#include "densecrab/error.hpp"

namespace densecrab {

const char* err_kind_name(ErrKind kind) {
    switch (kind) {
        case ErrKind::io: return "io";
        case ErrKind::parse: return "parse";
        case ErrKind::format: return "format";
        case ErrKind::truncated: return "truncated";
        case ErrKind::invalid: return "invalid";
        case ErrKind::config: return "config";
    }
    return "unknown";
}

}  // namespace densecrab
