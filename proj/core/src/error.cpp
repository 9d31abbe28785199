#include "frugal/error.hpp"

namespace frugal {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::missing_file: return "missing_file";
    case Errc::duplicate_entry: return "duplicate_entry";
    case Errc::missing_special: return "missing_special";
    case Errc::empty_entry: return "empty_entry";
    case Errc::empty_input: return "empty_input";
    case Errc::index_out_of_range: return "index_out_of_range";
    case Errc::malformed_header: return "malformed_header";
    case Errc::invalid_config: return "invalid_config";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::non_finite_weight: return "non_finite_weight";
    case Errc::sequence_too_long: return "sequence_too_long";
    case Errc::id_out_of_range: return "id_out_of_range";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::length_mismatch: return "length_mismatch";
    case Errc::non_finite_score: return "non_finite_score";
    case Errc::parse_error: return "parse_error";
    case Errc::consistency_failure: return "consistency_failure";
    case Errc::transport_exhausted: return "transport_exhausted";
    case Errc::auth_failure: return "auth_failure";
    case Errc::request_rejected: return "request_rejected";
    case Errc::replay_miss: return "replay_miss";
    case Errc::missing_api_key: return "missing_api_key";
  }
  return "unknown";
}

}  // namespace frugal
