/*
 * Copyright 2026 The heartsim authors
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

#include "heartsim/softnum.hpp"

#include <cassert>

namespace heartsim::num {

C32 dotp_widening(std::span<const C16> a, std::span<const C16> b) {
  assert(a.size() == b.size());
  C32 acc;
  for (size_t i = 0; i < a.size(); ++i) acc = cmac_widening(acc, a[i], b[i]);
  return acc;
}

}  // namespace heartsim::num
