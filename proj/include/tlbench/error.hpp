/**
 * Copyright 2026 The tlbench Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef TLBENCH_ERROR_HPP_
#define TLBENCH_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tlbench {

// Values match the tlb_status codes of the C API.
enum class ErrorCode {
  kInvalidArgument = 1,
  kParse = 2,
  kValidation = 3,
  kIo = 4,
  kUndefinedTest = 5,
  kRuntime = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message) : std::runtime_error(message), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_validation(const std::string &message) {
  throw Error(ErrorCode::kValidation, message);
}

[[noreturn]] inline void throw_parse(const std::string &message) { throw Error(ErrorCode::kParse, message); }

[[noreturn]] inline void throw_io(const std::string &message) { throw Error(ErrorCode::kIo, message); }

}  // namespace tlbench

#endif  // TLBENCH_ERROR_HPP_
