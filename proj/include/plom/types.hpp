#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <exception>
#include <string>
#include <utility>
#include <vector>

namespace plom {

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Matrix = MatrixX<double>;
using Vector = VectorX<double>;
using Index = Eigen::Index;

enum class ErrorCode {
  invalid_parameter,
  dimension_mismatch,
  degenerate_feature,
  numerical_failure,
  numerical_blowup,
  io_error,
  parse_error,
  version_mismatch,
  not_fitted,
  insufficient_support,
};

const char* error_code_name(ErrorCode code);

/// Base error type. A pipeline stage name can be attached after the fact so
/// that callers see where in a multi-stage fit the failure happened.
class Error : public std::exception {
 public:
  Error(ErrorCode code, std::string message)
      : code_(code), message_(std::move(message)) {
    rebuild();
  }

  const char* what() const noexcept override { return full_.c_str(); }
  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }
  const std::string& message() const noexcept { return message_; }

  void set_stage(std::string stage) {
    if (stage_.empty()) {
      stage_ = std::move(stage);
      rebuild();
    }
  }

 private:
  void rebuild() {
    full_.clear();
    if (!stage_.empty()) {
      full_ += "[stage " + stage_ + "] ";
    }
    full_ += error_code_name(code_);
    full_ += ": ";
    full_ += message_;
  }

  ErrorCode code_;
  std::string stage_;
  std::string message_;
  std::string full_;
};

#define PLOM_DEFINE_ERROR(Name, code_value)                    \
  struct Name : Error {                                        \
    explicit Name(std::string m)                               \
        : Error(ErrorCode::code_value, std::move(m)) {}        \
  }

PLOM_DEFINE_ERROR(InvalidParameter, invalid_parameter);
PLOM_DEFINE_ERROR(DimensionMismatch, dimension_mismatch);
PLOM_DEFINE_ERROR(DegenerateFeature, degenerate_feature);
PLOM_DEFINE_ERROR(NumericalFailure, numerical_failure);
PLOM_DEFINE_ERROR(NumericalBlowup, numerical_blowup);
PLOM_DEFINE_ERROR(IoError, io_error);
PLOM_DEFINE_ERROR(ParseError, parse_error);
PLOM_DEFINE_ERROR(VersionMismatch, version_mismatch);
PLOM_DEFINE_ERROR(NotFitted, not_fitted);
PLOM_DEFINE_ERROR(InsufficientSupport, insufficient_support);

#undef PLOM_DEFINE_ERROR

/// Ambient dataset: n feature rows, N sample columns.
struct DataMatrix {
  Matrix values;
  std::vector<std::string> feature_labels;  // empty, or one label per row

  Index features() const { return values.rows(); }
  Index samples() const { return values.cols(); }
};

/// Checks finiteness, n >= 1, N >= 2 and label consistency.
void validate(const DataMatrix& data);

}  // namespace plom
