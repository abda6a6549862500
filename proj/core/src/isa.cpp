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

#include "heartsim/isa.hpp"

#include <sstream>

namespace heartsim::core {

const char* op_kind_name(OpKind k) {
  switch (k) {
    case OpKind::Alu: return "alu";
    case OpKind::Imac: return "imac";
    case OpKind::Cmac: return "cmac";
    case OpKind::Cmul: return "cmul";
    case OpKind::Fadd3: return "fadd3";
    case OpKind::Fdiv: return "fdiv";
    case OpKind::Fsqrt: return "fsqrt";
    case OpKind::Load: return "load";
    case OpKind::Store: return "store";
    case OpKind::LoadImm: return "load_imm";
    case OpKind::QlrCfg: return "qlr_cfg";
    case OpKind::Barrier: return "barrier";
    case OpKind::Halt: return "halt";
  }
  return "?";
}

const char* alu_fn_name(AluFn f) {
  switch (f) {
    case AluFn::IAdd: return "iadd";
    case AluFn::IAddImm: return "iaddi";
    case AluFn::ISub: return "isub";
    case AluFn::Mv: return "mv";
    case AluFn::FAdd32: return "fadd";
    case AluFn::FSub32: return "fsub";
    case AluFn::FMul32: return "fmul";
    case AluFn::CAdd16: return "cadd16";
    case AluFn::CSub16: return "csub16";
    case AluFn::CMulJ16: return "cmulj16";
    case AluFn::CConj16: return "cconj16";
    case AluFn::CScale16: return "cscale16";
  }
  return "?";
}

uint64_t ProgramSet::total_ops() const {
  uint64_t n = 0;
  for (const auto& s : streams) n += s.size();
  return n;
}

uint64_t ProgramSet::count_kind(OpKind k) const {
  uint64_t n = 0;
  for (const auto& s : streams)
    for (const auto& op : s)
      if (op.kind == k) n++;
  return n;
}

std::string ProgramSet::dump(uint32_t core, size_t max_ops) const {
  std::ostringstream os;
  const auto& s = streams.at(core);
  const size_t n = max_ops == 0 ? s.size() : std::min(max_ops, s.size());
  os << "core " << core << " (" << s.size() << " ops)\n";
  for (size_t i = 0; i < n; ++i) {
    const MicroOp& op = s[i];
    os << "  " << i << ": " << op_kind_name(op.kind);
    if (op.kind == OpKind::Alu) os << "." << alu_fn_name(static_cast<AluFn>(op.sub));
    if ((op.kind == OpKind::Cmac || op.kind == OpKind::Cmul) && op.sub != 0) os << ".conj_a";
    os << " dst=r" << int(op.dst) << " src=r" << int(op.src1) << ",r" << int(op.src2) << ",r"
       << int(op.src3) << " imm=" << op.imm << "\n";
  }
  return os.str();
}

}  // namespace heartsim::core
