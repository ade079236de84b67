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

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace rkhskl {

using Rng = std::mt19937_64;

/// Independent generator for one named stream of a run. Different streams of
/// the same seed are decorrelated through seed_seq mixing.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0)
{
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return Rng(seq);
}

inline Eigen::MatrixXd standard_normal(Eigen::Index rows, Eigen::Index cols, Rng &rng)
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  // column-major fill keeps the draw order independent of Eigen internals
  for (Eigen::Index c = 0; c < cols; ++c)
  {
    for (Eigen::Index r = 0; r < rows; ++r)
    {
      out(r, c) = normal(rng);
    }
  }
  return out;
}

}  // namespace rkhskl
