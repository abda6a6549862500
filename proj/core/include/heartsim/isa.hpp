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

#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

// Abstract per-core micro-op ISA. Registers are 32 bits, interpretable as
// int32, binary32, or a packed complex16 lane. Four registers (r16..r19) can
// be linked to hardware queues (QLRs) for systolic streaming.

namespace heartsim::core {

inline constexpr uint32_t kNumRegs = 32;
inline constexpr std::array<uint8_t, 4> kQlrRegs = {16, 17, 18, 19};

inline bool is_qlr_reg(uint8_t r) { return r >= 16 && r <= 19; }

enum class OpKind : uint8_t {
  Alu,      // integer / scalar f32 / packed-c16 SIMD lane ops (sub = AluFn)
  Imac,     // dst += src1 * src2 (int32)
  Cmac,     // (dst,dst+1) f32 pair += src1 * src2 (packed c16), widening
  Cmul,     // dst = src1 * src2 (packed c16)
  Fadd3,    // dst = (src1 + src2) + src3 (f32)
  Fdiv,     // dst = src1 / src2 (f32, tile-shared unit)
  Fsqrt,    // dst = sqrt(src1) (f32, tile-shared unit)
  Load,     // dst <- [src1]; src1 += imm (post-increment)
  Store,    // [src2] <- src1; src2 += imm (post-increment)
  LoadImm,  // dst <- imm (bit pattern)
  QlrCfg,   // activate qlr config #imm of this core's table
  Barrier,  // id = imm
  Halt,
};
inline constexpr size_t kNumOpKinds = 13;

enum class AluFn : uint8_t {
  IAdd,     // dst = src1 + src2
  IAddImm,  // dst = src1 + imm
  ISub,     // dst = src1 - src2
  Mv,       // dst = src1 (any 32-bit pattern; pops/pushes like any read/write)
  FAdd32,   // f32 dst = src1 + src2
  FSub32,
  FMul32,
  CAdd16,   // packed c16 lane add
  CSub16,
  CMulJ16,  // dst = j * src1 (lane swap + negate)
  CConj16,  // dst = conj(src1)
  CScale16, // packed c16 src1 scaled by f32 src2, rounded back to c16
};

enum class MulFlag : uint8_t { None = 0, ConjA = 1 };  // Cmac/Cmul: conjugate src1

struct MicroOp {
  OpKind kind = OpKind::Halt;
  uint8_t sub = 0;  // AluFn for Alu, MulFlag for Cmac/Cmul
  uint8_t dst = 0;
  uint8_t src1 = 0;
  uint8_t src2 = 0;
  uint8_t src3 = 0;
  int32_t imm = 0;  // LoadImm pattern, post-increment stride, barrier id, qlr cfg index
};
static_assert(sizeof(MicroOp) == 12, "micro-op streams are large; keep the encoding compact");

enum class QlrDir : uint8_t { Input, Output };

// A register-linked queue endpoint. Links are matched by directed core pair:
// an output config on the producer pairs with the input config on the
// consumer whose expected producer is that core. At most one active link per
// directed core pair.
struct QlrConfig {
  uint8_t reg = 0;
  QlrDir direction = QlrDir::Input;
  uint8_t peer_core = 0;       // consumer (output) or expected producer (input)
  uint32_t request_count = 0;  // transfers before auto-deactivation
};

struct OutputRegion {
  std::string name;
  uint32_t addr = 0;   // byte address in L1
  uint32_t words = 0;
};

// A complete cluster workload: one micro-op stream per core, the initial L1
// image, where the results land, and the builder's op accounting.
struct ProgramSet {
  std::string name;
  std::vector<std::vector<MicroOp>> streams;      // one per core
  std::vector<std::vector<QlrConfig>> qlr_tables; // per core, indexed by QlrCfg imm
  std::vector<uint32_t> l1_image;                 // initial L1 words (word 0 upward)
  std::vector<OutputRegion> outputs;
  uint64_t expected_flops = 0;
  uint64_t expected_intops = 0;

  uint64_t total_ops() const;
  uint64_t count_kind(OpKind k) const;

  std::string dump(uint32_t core, size_t max_ops = 0) const;  // debug listing
};

const char* op_kind_name(OpKind k);
const char* alu_fn_name(AluFn f);

}  // namespace heartsim::core
