#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace ecomp {

/// Row-major sample matrix: one observation per row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Selects the serial reference path or the OpenMP path of a kernel.
enum class Exec { serial, parallel };

/// Library error. `code` is a short machine-readable tag (e.g. "csv.parse").
class Error : public std::runtime_error {
public:
  Error(std::string code, const std::string &what)
      : std::runtime_error(what), code_(std::move(code)) {}

  const std::string &code() const noexcept { return code_; }

private:
  std::string code_;
};

} // namespace ecomp
