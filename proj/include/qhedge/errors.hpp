#ifndef QHEDGE_ERRORS_HPP
#define QHEDGE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace qhedge {

// Base of everything thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed trees, files, parameters. CLI maps these to exit 1.
class InputError : public Error {
 public:
  using Error::Error;
};

// Violated mathematical precondition. CLI maps these to exit 2.
class MathError : public Error {
 public:
  using Error::Error;
};

class DanglingParent : public InputError {
 public:
  using InputError::InputError;
};

class DuplicateNodeId : public InputError {
 public:
  using InputError::InputError;
};

class NoUniqueRoot : public InputError {
 public:
  using InputError::InputError;
};

class ProbabilitySumViolation : public InputError {
 public:
  using InputError::InputError;
};

class NonPositiveProbability : public InputError {
 public:
  using InputError::InputError;
};

// Leaf not at the stated horizon.
class RaggedHorizon : public InputError {
 public:
  using InputError::InputError;
};

class UnknownNode : public InputError {
 public:
  using InputError::InputError;
};

// A process value was requested at a node that carries none.
class MissingValue : public InputError {
 public:
  using InputError::InputError;
};

// Custom claim table does not cover a leaf.
class MissingLeaf : public InputError {
 public:
  using InputError::InputError;
};

class InvalidFactors : public InputError {
 public:
  using InputError::InputError;
};

class InvalidProbability : public InputError {
 public:
  using InputError::InputError;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// Zero conditional variance of the stock increment at a node.
class DegenerateNode : public MathError {
 public:
  DegenerateNode(const std::string& node_id, const std::string& msg)
      : MathError(msg), node_id_(node_id) {}
  const std::string& node_id() const { return node_id_; }

 private:
  std::string node_id_;
};

class NotComplete : public MathError {
 public:
  using MathError::MathError;
};

class NotBinomial : public MathError {
 public:
  using MathError::MathError;
};

class SingularSystem : public MathError {
 public:
  using MathError::MathError;
};

class TooLarge : public MathError {
 public:
  using MathError::MathError;
};

// Exact square root requested for a rational that is not a perfect square.
class IrrationalSqrt : public MathError {
 public:
  using MathError::MathError;
};

}  // namespace qhedge

#endif  // QHEDGE_ERRORS_HPP
