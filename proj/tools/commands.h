/******************************************************************************
 * Copyright 2026 The coperc Authors. All Rights Reserved.
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
 *****************************************************************************/
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "coperc/errors.h"

namespace coperc::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitProfileIncomplete = 3;
inline constexpr int kExitInternal = 4;

struct GenTraceArgs {
  int cavs = 150;
  int frames = 100;
  std::uint64_t seed = 1;
  double extent_m = 0.0;   // 0 keeps the generator default
  double spacing_m = 0.0;
  std::filesystem::path out;
  bool force = false;
};

struct ProfileArgs {
  std::string mode = "surrogate";
  std::filesystem::path out;
  int samples = 50;
  std::uint64_t seed = 1;
  bool force = false;
};

struct RunArgs {
  std::filesystem::path trace;
  std::filesystem::path config;
  std::string policy;  // empty keeps the config's policy
  std::filesystem::path out;
  bool force = false;
};

struct SweepArgs {
  std::string param;
  std::vector<std::string> values;
  std::vector<std::string> policies;
  std::filesystem::path trace;   // generated when empty or when sweeping cavs
  std::filesystem::path config;
  std::filesystem::path out;
  int cavs = 150;
  int frames = 100;
  std::uint64_t trace_seed = 1;
  bool force = false;
};

int ExitCodeFor(const Error& e);

int GenTrace(const GenTraceArgs& args);
int Profile(const ProfileArgs& args);
int Run(const RunArgs& args);
int Sweep(const SweepArgs& args);

}  // namespace coperc::cli
