#ifndef EMOGLASS_TYPES_HPP
#define EMOGLASS_TYPES_HPP

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace emoglass {

using Real = double;
using Vector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;
using RowVector = Eigen::Matrix<Real, 1, Eigen::Dynamic>;
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic>;
using ConstVectorRef = const Eigen::Ref<const Vector>&;
using ConstMatrixRef = const Eigen::Ref<const Matrix>&;

/// 8-bit grayscale image, row-major so that a flattened frame is scanline order.
using Frame = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
/// Real-valued image (averaged frames, templates).
using Image = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Error hierarchy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument, violated precondition or inconsistent configuration.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Missing, unreadable or unwritable file.
class IoError : public Error {
public:
    using Error::Error;
};

/// Malformed document (manifest, CSV, PGM, persisted model).
class FormatError : public Error {
public:
    using Error::Error;
};

/// Persisted document written by an unsupported format version.
class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Numerical failure inside a fitting routine.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Pipeline failure tagged with the stage that raised it.
class TrainingError : public Error {
public:
    TrainingError(std::string stage, const std::string& what)
        : Error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace emoglass

#endif  // EMOGLASS_TYPES_HPP
