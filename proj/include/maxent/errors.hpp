#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>

namespace maxent {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

// Input has the wrong shape, labels, or flags: nothing numerical can be said about it.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quantity that the model requires to be strictly positive came out zero,
// e.g. a hidden state that receives no stationary mass.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A proposed hidden block fails one of the stationarity identities it must satisfy.
class CompletionInvalidError : public std::runtime_error {
 public:
  CompletionInvalidError(std::string identity, double residual)
      : std::runtime_error("completion invalid: identity '" + identity +
                           "' violated, residual " + format_double(residual)),
        identity_(std::move(identity)),
        residual_(residual) {}

  const std::string& identity() const { return identity_; }
  double residual() const { return residual_; }

 private:
  std::string identity_;
  double residual_;
};

// The product-form scaling loop did not converge. Either no completion with the
// requested support exists, or every feasible completion needs a zero on an
// allowed edge (so the strictly positive product form cannot reach it).
class SolveError : public std::runtime_error {
 public:
  enum class Kind { infeasible_or_degenerate, degenerate_support };

  SolveError(Kind kind, long iterations, double residual, const std::string& context = "")
      : std::runtime_error(compose(kind, iterations, residual, context)),
        kind_(kind),
        iterations_(iterations),
        residual_(residual) {}

  Kind kind() const { return kind_; }
  long iterations() const { return iterations_; }
  double residual() const { return residual_; }

 private:
  static std::string compose(Kind kind, long iterations, double residual,
                             const std::string& context) {
    std::string msg = context.empty() ? std::string() : context + ": ";
    if (kind == Kind::degenerate_support) {
      msg += "scaling drifts to the boundary: a feasible completion exists only with "
             "zeros on allowed edges";
    } else {
      msg += "scaling did not converge; run the feasibility check to obtain a "
             "witness or a certificate of infeasibility";
    }
    msg += " (after " + std::to_string(iterations) + " sweeps, constraint residual " +
           format_double(residual) + ")";
    return msg;
  }

  Kind kind_;
  long iterations_;
  double residual_;
};

// The feasibility solver could not certify either branch within tolerance.
class IndeterminateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace maxent
