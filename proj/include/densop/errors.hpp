#ifndef DENSOP_ERRORS_HPP
#define DENSOP_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace densop {

// Evaluation left the valid region of an expression (division by zero,
// log of a nonpositive argument).
class DomainError : public std::runtime_error {
public:
  explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

// Expression text does not conform to the grammar. `position` is the
// 0-based offset of the offending character.
class ParseError : public std::runtime_error {
public:
  ParseError(const std::string& what, std::size_t position)
      : std::runtime_error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const { return position_; }

private:
  std::size_t position_;
};

// Scenario or type-invariant validation failure.
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public ValidationError {
public:
  explicit DimensionError(const std::string& what) : ValidationError(what) {}
};

// The weight hits one of the two excluded values where the gamma/theta
// denominators vanish.
class ResonantWeight : public std::runtime_error {
public:
  ResonantWeight(const std::string& what, int which) : std::runtime_error(what), which_(which) {}
  // 1: the gamma denominator (n+3)-w(n+1); 2: the theta denominator (n+2)-w(n+1).
  int which() const { return which_; }

private:
  int which_;
};

// Same failure for the rho/sigma family, where the effective weight is shifted.
class ShiftedResonance : public std::runtime_error {
public:
  ShiftedResonance(const std::string& what, int which) : std::runtime_error(what), which_(which) {}
  int which() const { return which_; }

private:
  int which_;
};

class NonpositiveDensity : public std::runtime_error {
public:
  explicit NonpositiveDensity(const std::string& what) : std::runtime_error(what) {}
};

} // namespace densop

#endif
