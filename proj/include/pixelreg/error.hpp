// Copyright 2026 The pixelreg Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace pixelreg {

// All library failures derive from Error so callers can map them onto exit
// codes without enumerating every subtype.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Non-finite state or parameter fed to the dynamics.
class InvalidState : public Error {
 public:
  using Error::Error;
};

// Spacing outside the renderable interval.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// The spacing estimator could not find the lead object in the frame.
class ObjectNotFound : public Error {
 public:
  using Error::Error;
};

// A numerical assumption check (e.g. the quadratic fit) failed outright.
class AssumptionViolation : public Error {
 public:
  using Error::Error;
};

// Riccati synthesis produced a policy that does not factor through the output.
class SynthesisInconsistency : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace pixelreg
