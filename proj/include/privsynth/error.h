//
// Copyright 2026 The privsynth Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef PRIVSYNTH_ERROR_H_
#define PRIVSYNTH_ERROR_H_

#include <stdexcept>
#include <string>

namespace privsynth {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A matrix that must be symmetric positive definite failed its Cholesky
// factorization.
class NotPositiveDefiniteError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

// Malformed model or mechanism file.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Well-formed file with a missing field or a field of the wrong shape.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Inputs parsed but violate a model invariant (PD covariances, rank of D...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// The solved program did not yield a positive definite Sigma_V.
class ExtractionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace privsynth

#endif  // PRIVSYNTH_ERROR_H_
