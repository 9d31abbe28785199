#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace frugal {

/// Every failure the library reports carries one of these codes so callers
/// (and the CLI exit-code mapping) can tell them apart without parsing text.
enum class Errc {
  // vocab / tokenizer
  missing_file,
  duplicate_entry,
  missing_special,
  empty_entry,
  empty_input,
  index_out_of_range,
  // model container
  malformed_header,
  invalid_config,
  shape_mismatch,
  non_finite_weight,
  // forward pass
  sequence_too_long,
  id_out_of_range,
  // generic argument / data problems
  invalid_argument,
  length_mismatch,
  non_finite_score,
  parse_error,
  // attribution
  consistency_failure,
  // llm transport
  transport_exhausted,
  auth_failure,
  request_rejected,
  replay_miss,
  missing_api_key,
};

std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace frugal
