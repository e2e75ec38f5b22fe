#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace qesn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    /// Short machine-readable category, e.g. "numeric" or "load".
    virtual const char* kind() const noexcept { return "error"; }
};

#define QESN_DEFINE_ERROR(Name, Kind)                                  \
    class Name : public Error {                                        \
    public:                                                            \
        using Error::Error;                                            \
        const char* kind() const noexcept override { return Kind; }    \
    }

QESN_DEFINE_ERROR(InvalidArgument, "invalid_argument");
QESN_DEFINE_ERROR(DimensionError, "invalid_dimension");
QESN_DEFINE_ERROR(DomainError, "domain");
QESN_DEFINE_ERROR(NumericError, "numeric");
QESN_DEFINE_ERROR(InputError, "input");
QESN_DEFINE_ERROR(PriorError, "prior");
QESN_DEFINE_ERROR(LoadError, "load");
QESN_DEFINE_ERROR(ConfigError, "config");
QESN_DEFINE_ERROR(AuditError, "audit");

#undef QESN_DEFINE_ERROR

/// Execution policy for kernels that have both a serial reference and an
/// OpenMP implementation. Both produce bitwise-identical results.
enum class Exec { serial, parallel };

}  // namespace qesn
