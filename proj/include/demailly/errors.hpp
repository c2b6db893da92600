#ifndef DEMAILLY_ERRORS_HPP
#define DEMAILLY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace demailly {

// Matrix logarithm requested at a point where the field is not positive
// definite (or a matrix exponential overflowed to non-finite values).
class NotPositiveDefinite : public std::runtime_error {
public:
    NotPositiveDefinite(int point, double min_eig, const std::string& what)
        : std::runtime_error(what), point_(point), min_eig_(min_eig) {}
    int point() const { return point_; }
    double min_eig() const { return min_eig_; }

private:
    int point_;
    double min_eig_;
};

// The curvature matrix M of the first equation left the positive cone:
// log det M is undefined and the state is inadmissible.
class NonPositiveM : public std::runtime_error {
public:
    NonPositiveM(int point, double min_eig)
        : std::runtime_error("M lost positivity at grid point " + std::to_string(point) +
                             " (min eigenvalue " + std::to_string(min_eig) + ")"),
          point_(point), min_eig_(min_eig) {}
    int point() const { return point_; }
    double min_eig() const { return min_eig_; }

private:
    int point_;
    double min_eig_;
};

// Cushioned solve exhausted its Newton + pseudo-time budget.
class NoConvergence : public std::runtime_error {
public:
    explicit NoConvergence(double best_norm)
        : std::runtime_error("cushioned solve did not converge (best residual " +
                             std::to_string(best_norm) + ")"),
          best_norm_(best_norm) {}
    double best_norm() const { return best_norm_; }

private:
    double best_norm_;
};

// Input to the quotient-degree estimator fails the projector contract.
class NotAProjector : public std::runtime_error {
public:
    explicit NotAProjector(double defect)
        : std::runtime_error("field is not an orthogonal projector (||pi^2-pi|| = " +
                             std::to_string(defect) + ")"),
          defect_(defect) {}
    double defect() const { return defect_; }

private:
    double defect_;
};

// Config file could not be parsed; carries the 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(int line, const std::string& message)
        : std::runtime_error("parse error at line " + std::to_string(line) + ": " + message),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_;
};

// Config value violates a documented constraint.
class ValidationError : public std::runtime_error {
public:
    ValidationError(const std::string& key, const std::string& constraint)
        : std::runtime_error("invalid value for '" + key + "': must satisfy " + constraint),
          key_(key) {}
    const std::string& key() const { return key_; }

private:
    std::string key_;
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace demailly

#endif
