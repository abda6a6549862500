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

#include <bit>
#include <cmath>
#include <cstdint>
#include <span>

// Bit-accurate binary16/binary32 arithmetic and the complex mixed-precision
// primitives of the simulated ISA: complex multiply, widening complex MAC,
// three-term addition, division and square root.
//
// Conventions (all round-to-nearest-even):
//  - binary16 add/sub/mul are computed on an exact binary64 intermediate and
//    rounded once, so results are correctly rounded.
//  - complex ops keep a binary32 internal datapath; cmul16 rounds its two
//    binary32 component results back to binary16.
//  - every NaN produced here is canonicalized (0x7E00 / 0x7FC00000) so runs
//    are reproducible bit-for-bit.
//
// Host binary32 arithmetic is IEEE-754 with RNE on x86-64 (SSE, no excess
// precision), which these routines rely on for +,-,*,/ and sqrtf.

namespace heartsim::num {

inline constexpr uint16_t kF16QuietNan = 0x7E00;
inline constexpr uint32_t kF32QuietNan = 0x7FC00000;

inline uint32_t f32_bits(float x) { return std::bit_cast<uint32_t>(x); }
inline float f32_from_bits(uint32_t b) { return std::bit_cast<float>(b); }

inline float canon32(float x) { return std::isnan(x) ? f32_from_bits(kF32QuietNan) : x; }

// IEEE 754 binary16 value as its 16-bit pattern (1 sign, 5 exp, 10 mantissa).
struct F16 {
  uint16_t bits = 0;

  constexpr F16() = default;
  constexpr explicit F16(uint16_t b) : bits(b) {}

  bool is_nan() const { return (bits & 0x7C00) == 0x7C00 && (bits & 0x03FF) != 0; }
  bool is_inf() const { return (bits & 0x7FFF) == 0x7C00; }
  bool is_zero() const { return (bits & 0x7FFF) == 0; }

  friend bool operator==(F16 a, F16 b) { return a.bits == b.bits; }
};

// Round a binary64 value to binary16 (RNE, subnormals, overflow to inf).
// Exact inputs (sums/products of two binary16 values fit in 53 bits) make
// this a single correct rounding.
inline F16 f16_round(double x) {
  const uint64_t db = std::bit_cast<uint64_t>(x);
  const uint16_t sign = static_cast<uint16_t>((db >> 48) & 0x8000u);
  const int64_t dexp = static_cast<int64_t>((db >> 52) & 0x7FF);
  const uint64_t frac = db & ((uint64_t{1} << 52) - 1);

  if (dexp == 0x7FF) {
    if (frac != 0) return F16(kF16QuietNan);
    return F16(static_cast<uint16_t>(sign | 0x7C00));
  }
  if (dexp == 0) return F16(sign);  // double subnormals are far below binary16 range

  const int64_t e = dexp - 1023;                // x = 1.frac * 2^e
  const uint64_t sig = (uint64_t{1} << 52) | frac;

  int64_t shift = 42;                           // 53 -> 11 significand bits
  if (e < -14) shift += (-14 - e);              // denormalize below 2^-14
  if (shift >= 64) return F16(sign);

  const uint64_t half = uint64_t{1} << (shift - 1);
  const uint64_t rem = sig & ((uint64_t{1} << shift) - 1);
  uint64_t rounded = sig >> shift;
  if (rem > half || (rem == half && (rounded & 1))) rounded++;

  if (e < -14) {
    // Subnormal result; a carry to 1<<10 lands exactly on the smallest normal.
    return F16(static_cast<uint16_t>(sign | rounded));
  }
  int64_t oexp = e;
  if (rounded >= (uint64_t{1} << 11)) {
    rounded >>= 1;
    oexp++;
  }
  if (oexp > 15) return F16(static_cast<uint16_t>(sign | 0x7C00));
  return F16(static_cast<uint16_t>(sign | ((oexp + 15) << 10) | (rounded & 0x3FF)));
}

inline float f16_to_float(F16 h) {
  const uint32_t sign = (h.bits & 0x8000u) << 16;
  const uint32_t exp = (h.bits >> 10) & 0x1F;
  const uint32_t frac = h.bits & 0x3FF;
  if (exp == 0x1F) {
    if (frac != 0) return f32_from_bits(kF32QuietNan);
    return f32_from_bits(sign | 0x7F800000u);
  }
  if (exp == 0) {
    if (frac == 0) return f32_from_bits(sign);
    float v = static_cast<float>(frac) * 0x1p-24f;  // exact
    return (sign != 0) ? -v : v;
  }
  return f32_from_bits(sign | ((exp - 15 + 127) << 23) | (frac << 13));
}

inline double f16_to_double(F16 h) { return static_cast<double>(f16_to_float(h)); }
inline F16 f16_from_float(float x) { return f16_round(static_cast<double>(x)); }

// Correctly rounded binary16 add/sub/mul: the binary64 intermediate is exact.
inline F16 f16_add(F16 a, F16 b) { return f16_round(f16_to_double(a) + f16_to_double(b)); }
inline F16 f16_sub(F16 a, F16 b) { return f16_round(f16_to_double(a) - f16_to_double(b)); }
inline F16 f16_mul(F16 a, F16 b) { return f16_round(f16_to_double(a) * f16_to_double(b)); }

// Complex binary16 sample, one SIMD lane: packs into one 32-bit word
// (re in the low half, im in the high half).
struct C16 {
  F16 re, im;

  constexpr C16() = default;
  constexpr C16(F16 r, F16 i) : re(r), im(i) {}

  uint32_t pack() const { return static_cast<uint32_t>(re.bits) | (static_cast<uint32_t>(im.bits) << 16); }
  static C16 unpack(uint32_t w) {
    return C16(F16(static_cast<uint16_t>(w & 0xFFFF)), F16(static_cast<uint16_t>(w >> 16)));
  }

  friend bool operator==(C16 a, C16 b) { return a.re == b.re && a.im == b.im; }
};

inline C16 c16_from(double re, double im) { return C16(f16_round(re), f16_round(im)); }

// Widening complex accumulator: a pair of binary32.
struct C32 {
  float re = 0.0f, im = 0.0f;

  constexpr C32() = default;
  constexpr C32(float r, float i) : re(r), im(i) {}
};

// The four real products of two binary16 operands are exact in binary32
// (11-bit significands -> 22-bit product).
inline float f16_prod32(F16 a, F16 b) { return f16_to_float(a) * f16_to_float(b); }

// Complex multiply with a binary32 internal datapath, components rounded
// back to binary16: (ar*br - ai*bi, ar*bi + ai*br).
inline C16 cmul16(C16 a, C16 b) {
  const float pr1 = f16_prod32(a.re, b.re);
  const float pr2 = f16_prod32(a.im, b.im);
  const float pi1 = f16_prod32(a.re, b.im);
  const float pi2 = f16_prod32(a.im, b.re);
  return C16(f16_from_float(canon32(pr1 - pr2)), f16_from_float(canon32(pi1 + pi2)));
}

// conj(a) * b with the same datapath.
inline C16 cmul16_conj_a(C16 a, C16 b) {
  const float pr1 = f16_prod32(a.re, b.re);
  const float pr2 = f16_prod32(a.im, b.im);
  const float pi1 = f16_prod32(a.re, b.im);
  const float pi2 = f16_prod32(a.im, b.re);
  return C16(f16_from_float(canon32(pr1 + pr2)), f16_from_float(canon32(pi1 - pi2)));
}

// acc + a*b; products exact in binary32, then two RNE accumulation steps per
// component in documented order: re: (acc+p1)-p2, im: (acc+p3)+p4.
// The accumulator never passes through binary16.
inline C32 cmac_widening(C32 acc, C16 a, C16 b) {
  const float pr1 = f16_prod32(a.re, b.re);
  const float pr2 = f16_prod32(a.im, b.im);
  const float pi1 = f16_prod32(a.re, b.im);
  const float pi2 = f16_prod32(a.im, b.re);
  return C32(canon32((acc.re + pr1) - pr2), canon32((acc.im + pi1) + pi2));
}

// acc + conj(a)*b: re: (acc+p1)+p2, im: (acc+p3)-p4.
inline C32 cmac_widening_conj_a(C32 acc, C16 a, C16 b) {
  const float pr1 = f16_prod32(a.re, b.re);
  const float pr2 = f16_prod32(a.im, b.im);
  const float pi1 = f16_prod32(a.re, b.im);
  const float pi2 = f16_prod32(a.im, b.re);
  return C32(canon32((acc.re + pr1) + pr2), canon32((acc.im + pi1) - pi2));
}

// Three-term addition, evaluated as (a+b)+c with two RNE roundings.
inline float fadd3(float a, float b, float c) { return canon32((a + b) + c); }

// Correctly rounded binary32 divide / square root (host FPU).
inline float fdiv(float a, float b) { return canon32(a / b); }
inline float fsqrt(float a) { return canon32(std::sqrt(a)); }

// Left-to-right fold of cmac_widening from a zero accumulator.
C32 dotp_widening(std::span<const C16> a, std::span<const C16> b);

}  // namespace heartsim::num
