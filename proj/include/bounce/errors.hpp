#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bounce {

enum class Errc {
  file_not_found,
  parse_error,
  non_monotone_timestamps,
  too_short,
  scale_too_large,
  invalid_hurst,
  invalid_bias,
  invalid_counts,
  degenerate_variance,
  invalid_dof,
  series_too_short,
  window_range_invalid,
  too_few_bins,
  empty_samples,
  path_mismatch,
  bad_config,
  io_error,
};

/// Library-wide exception; `code()` identifies which contract was violated
/// and `line()` carries a 1-based input line number where that applies.
class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message, std::size_t line = 0)
      : std::runtime_error(std::move(message)), code_(code), line_(line) {}

  Errc code() const noexcept { return code_; }
  std::size_t line() const noexcept { return line_; }

 private:
  Errc code_;
  std::size_t line_;
};

}  // namespace bounce
