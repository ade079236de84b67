#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The rkhskl Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include <stdexcept>
#include <string>

namespace rkhskl {

/// Base of every error raised by the library.
class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid dimensions or hyperparameters.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Bad input data (non-finite values, wrong shapes coming from the caller).
class InputError : public Error
{
public:
  using Error::Error;
};

/// Internal contract broken between two library components.
class ContractError : public Error
{
public:
  using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error
{
public:
  using Error::Error;
};

/// A training step produced a non-finite value. The trainer converts this
/// into an unstable run instead of propagating it.
class TrainingError : public Error
{
public:
  using Error::Error;
};

class IoError : public Error
{
public:
  using Error::Error;
};

}  // namespace rkhskl
