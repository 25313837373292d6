#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace polsar {

// Exception hierarchy shared by every module. The CLI maps these onto exit
// codes: ConfigError -> 2, DataError/FormatError -> 3, NumericError -> 4.

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Caller broke a documented precondition (non-scalar loss, non-reciprocal
// pixel handed to Krogager, out-of-range H/alpha...).
struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class FormatError : public DataError {
 public:
  FormatError(const std::string& what, std::uint64_t offset)
      : DataError(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace polsar
