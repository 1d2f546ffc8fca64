#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sem {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class DegenerateInputError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class EmptyInputError : public Error { using Error::Error; };
class NumericError : public Error { using Error::Error; };
class InfeasibleRegionError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class DataError : public Error { using Error::Error; };

/// Raised when a training loss becomes non-finite.
class TrainingFailure : public Error {
public:
    TrainingFailure(std::size_t step, const std::string& what)
        : Error("training diverged at step " + std::to_string(step) + ": " + what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace sem
