#ifndef REG_ERRORS_HPP
#define REG_ERRORS_HPP

#include <cstdint>
#include <stdexcept>
#include <string>

namespace reg {

// Shape/channel mismatch between operands, or an invalid shape.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite data or out-of-domain parameter values.
class ValueError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// normalize01 on a constant volume.
class DegenerateRangeError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

enum class IoErrorCode {
    missing_file,
    malformed_header,
    length_mismatch,
    non_finite_payload,
    write_failure,
    bad_index,
};

class IoError : public std::runtime_error {
public:
    IoError(IoErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}
    IoErrorCode code() const { return code_; }

private:
    IoErrorCode code_;
};

// Raised when an optimisation step produces a non-finite loss.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(std::int64_t iteration, const std::string& what)
        : std::runtime_error(what), iteration_(iteration) {}
    std::int64_t iteration() const { return iteration_; }

private:
    std::int64_t iteration_;
};

}  // namespace reg

#endif  // REG_ERRORS_HPP
