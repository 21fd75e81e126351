/*
 * Copyright 2026 The antinoise Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstdint>
#include <string_view>

namespace antinoise {

/// Named random streams derived from the single experiment seed.
enum class SeedStream : std::uint64_t {
  kInit = 1,        // parameter initialization
  kDataOrder = 2,   // per-epoch shuffling
  kAugment = 3,     // per-epoch flip decisions
  kTrainNoise = 4,  // per-epoch noise generator
  kEvalNoise = 5,   // evaluation-time noise
  kToyData = 6,     // procedural dataset rendering
};

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

/// Sub-seed for `stream` at position `index` (epoch, repeat, ...):
///   mix64(mix64(seed ^ stream * golden) + index).
/// Depends only on its arguments, so a run resumed at an epoch boundary
/// reproduces the same data order and noise.
std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t index = 0);

/// 64-bit FNV-1a, stable across platforms (used for splits and config hashes).
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t basis = 0xcbf29ce484222325ULL);
inline std::uint64_t fnv1a64(std::string_view text) { return fnv1a64(text.data(), text.size()); }

}  // namespace antinoise
