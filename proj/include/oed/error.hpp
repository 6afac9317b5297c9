#pragma once

#include <stdexcept>
#include <string>

namespace oed {

/// Invalid arguments or data handed to a library routine.
class InputError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that could not be completed (solver breakdown, model failure).
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

} // namespace oed
