// Copyright 2026 The scenario_abstraction Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SCENARIO_ABSTRACTION__ERRORS_HPP_
#define SCENARIO_ABSTRACTION__ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scenario_abstraction
{

/// Bad input: malformed files, violated preconditions, unknown references.
class ValidationError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// A position that projects onto no lane corridor.
class OutOfRoadError : public ValidationError
{
public:
  OutOfRoadError(const std::string & what, std::size_t sample_index)
  : ValidationError(what), sample_index_(sample_index)
  {
  }

  std::size_t sample_index() const { return sample_index_; }

private:
  std::size_t sample_index_;
};

class FitError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

class PayloadError : public std::runtime_error
{
public:
  enum class Kind { bad_magic, unknown_version, truncated, crc_mismatch, malformed };

  PayloadError(Kind kind, const std::string & what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }

private:
  Kind kind_;
};

/// An internal postcondition failed. Signals a bug, not bad input.
class InvariantViolation : public std::logic_error
{
public:
  using std::logic_error::logic_error;
};

}  // namespace scenario_abstraction

#endif  // SCENARIO_ABSTRACTION__ERRORS_HPP_
