#include "cuescope/error.hpp"

namespace cuescope {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::schema: return "schema";
    case ErrorKind::validation: return "validation";
    case ErrorKind::ordering: return "ordering";
    case ErrorKind::dimension: return "dimension";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::data: return "data";
    case ErrorKind::index: return "index";
    case ErrorKind::parameter: return "parameter";
    case ErrorKind::contract: return "contract";
    case ErrorKind::not_found: return "not_found";
    case ErrorKind::not_ready: return "not_ready";
    case ErrorKind::conflict: return "conflict";
    case ErrorKind::range: return "range";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace cuescope
