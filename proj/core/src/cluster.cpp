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

#include "heartsim/cluster.hpp"

#include <algorithm>
#include <sstream>

#include "heartsim/softnum.hpp"

namespace heartsim::core {

using num::C16;
using num::C32;

const char* stall_name(Stall s) {
  switch (s) {
    case Stall::RawHazard: return "raw_hazard";
    case Stall::QlrEmpty: return "qlr_empty";
    case Stall::QlrFull: return "qlr_full";
    case Stall::MemRetry: return "mem_retry";
    case Stall::DivsqrtBusy: return "divsqrt_busy";
    case Stall::Barrier: return "barrier";
  }
  return "?";
}

uint32_t flop_weight(const MicroOp& op) {
  switch (op.kind) {
    case OpKind::Cmac: return 8;
    case OpKind::Cmul: return 6;
    case OpKind::Fadd3: return 2;
    case OpKind::Fdiv: return 1;
    case OpKind::Fsqrt: return 1;
    case OpKind::Alu:
      switch (static_cast<AluFn>(op.sub)) {
        case AluFn::FAdd32:
        case AluFn::FSub32:
        case AluFn::FMul32: return 1;
        case AluFn::CAdd16:
        case AluFn::CSub16:
        case AluFn::CScale16: return 2;
        default: return 0;
      }
    default: return 0;
  }
}

uint32_t intop_weight(const MicroOp& op) {
  switch (op.kind) {
    case OpKind::Imac: return 2;
    case OpKind::Alu:
      switch (static_cast<AluFn>(op.sub)) {
        case AluFn::IAdd:
        case AluFn::IAddImm:
        case AluFn::ISub: return 1;
        default: return 0;
      }
    default: return 0;
  }
}

uint64_t ClusterCounters::issued_total() const {
  uint64_t s = 0;
  for (const auto& c : core) s += c.issued_total();
  return s;
}
uint64_t ClusterCounters::flops_total() const {
  uint64_t s = 0;
  for (const auto& c : core) s += c.flops;
  return s;
}
uint64_t ClusterCounters::intops_total() const {
  uint64_t s = 0;
  for (const auto& c : core) s += c.intops;
  return s;
}
double ClusterCounters::ipc() const {
  if (cycles == 0) return 0.0;
  return static_cast<double>(issued_total()) / (static_cast<double>(core.size()) * static_cast<double>(cycles));
}
std::array<double, kNumStalls> ClusterCounters::stall_fractions() const {
  std::array<double, kNumStalls> out{};
  const double denom = static_cast<double>(core.size()) * static_cast<double>(cycles);
  if (denom == 0) return out;
  for (const auto& c : core)
    for (size_t i = 0; i < kNumStalls; ++i) out[i] += static_cast<double>(c.stalls[i]);
  for (auto& v : out) v /= denom;
  return out;
}
double ClusterCounters::issue_fraction() const {
  const double denom = static_cast<double>(core.size()) * static_cast<double>(cycles);
  return denom == 0 ? 0.0 : static_cast<double>(issued_total()) / denom;
}
double ClusterCounters::idle_fraction() const {
  const double denom = static_cast<double>(core.size()) * static_cast<double>(cycles);
  if (denom == 0) return 0.0;
  uint64_t idle = 0;
  for (const auto& c : core) idle += c.idle;
  return static_cast<double>(idle) / denom;
}

Cluster::Cluster(const SimParams& params) : p_(params) {
  p_.topo.validate();
  p_.lat.validate();
}

void Cluster::fault(uint32_t c, const std::string& what) const {
  std::ostringstream os;
  os << "core " << c;
  if (prog_ && c < cores_.size()) os << " pc " << cores_[c].pc;
  os << ": " << what;
  throw SimFault(os.str());
}

void Cluster::greedy_halt(uint32_t c) {
  Core& core = cores_[c];
  const auto& stream = (*prog_).streams[c];
  if (core.pc >= stream.size() || stream[core.pc].kind == OpKind::Halt) core.halted = true;
}

Cluster::QlrEndpoint* Cluster::find_input_from(uint32_t consumer, uint32_t producer) {
  QlrEndpoint* found = nullptr;
  for (uint8_t r : kQlrRegs) {
    QlrEndpoint& ep = cores_[consumer].qlr[r];
    if (ep.active && ep.dir == QlrDir::Input && ep.peer == producer) {
      if (found) fault(consumer, "two active input QLR links from the same producer");
      found = &ep;
    }
  }
  return found;
}

void Cluster::apply_qlr_cfg(uint32_t c, const QlrConfig& cfg) {
  if (!is_qlr_reg(cfg.reg)) fault(c, "qlr_cfg on a non-QLR register");
  if (cfg.request_count == 0) fault(c, "qlr_cfg with zero request count");
  if (cfg.peer_core >= p_.topo.n_cores() || cfg.peer_core == c) fault(c, "qlr_cfg bad peer");
  QlrEndpoint& ep = cores_[c].qlr[cfg.reg];
  if (ep.active) fault(c, "qlr_cfg on a register with an active configuration");
  ep.active = true;
  ep.dir = cfg.direction;
  ep.peer = cfg.peer_core;
  ep.remaining = cfg.request_count;
  ep.queue.clear();
  const bool intra = p_.topo.tile_of_core(c) == p_.topo.tile_of_core(cfg.peer_core);
  ep.capacity = intra ? p_.qlr_depth_intra : p_.qlr_depth_inter;
}

bool Cluster::operand_ready(Core& core, uint8_t reg, uint64_t cycle, Stall* why) const {
  const QlrEndpoint& ep = core.qlr[reg];
  if (ep.active && ep.dir == QlrDir::Input) {
    if (ep.queue.empty() || ep.queue.front().ready > cycle) {
      *why = Stall::QlrEmpty;
      return false;
    }
    return true;
  }
  if (core.pending[reg]) {
    *why = Stall::RawHazard;
    return false;
  }
  return true;
}

uint32_t Cluster::read_operand(uint32_t c, uint8_t reg, uint64_t cycle) {
  Core& core = cores_[c];
  QlrEndpoint& ep = core.qlr[reg];
  if (ep.active && ep.dir == QlrDir::Input) {
    const QlrEntry e = ep.queue.front();
    (void)cycle;
    ep.queue.pop_front();
    core.regs[reg] = e.value;
    core.written[reg] = 1;
    if (--ep.remaining == 0) ep.active = false;
    return e.value;
  }
  if (!core.written[reg]) fault(c, "read of never-written register r" + std::to_string(reg));
  return core.regs[reg];
}

bool Cluster::dest_ready(uint32_t c, uint8_t reg, uint64_t cycle, Stall* why) const {
  const Core& core = cores_[c];
  const QlrEndpoint& ep = core.qlr[reg];
  if (ep.active) {
    if (ep.dir == QlrDir::Input) return true;  // faulted at write time
    // Output link: room at the consumer (counting in-flight values)?
    const Core& peer = cores_[ep.peer];
    const QlrEndpoint* in = nullptr;
    for (uint8_t r : kQlrRegs) {
      const QlrEndpoint& pe = peer.qlr[r];
      if (pe.active && pe.dir == QlrDir::Input && pe.peer == c) {
        in = &pe;
        break;
      }
    }
    if (in && in->queue.size() >= in->capacity) {
      *why = Stall::QlrFull;
      return false;
    }
    (void)cycle;
    return true;
  }
  if (core.pending[reg]) {
    *why = Stall::RawHazard;
    return false;
  }
  return true;
}

void Cluster::qlr_push(uint32_t producer, uint8_t reg, uint32_t value, uint64_t cycle) {
  Core& core = cores_[producer];
  QlrEndpoint& out = core.qlr[reg];
  QlrEndpoint* in = find_input_from(out.peer, producer);
  if (!in) fault(producer, "QLR push to a consumer with no matching input configuration");
  const uint32_t lat = fabric::core_link_latency(producer, out.peer, p_.topo, p_.lat);
  in->queue.push_back(QlrEntry{value, cycle + lat});
  if (--out.remaining == 0) out.active = false;
}

void Cluster::write_dest(uint32_t c, uint8_t reg, uint32_t value, uint64_t cycle) {
  Core& core = cores_[c];
  QlrEndpoint& ep = core.qlr[reg];
  if (ep.active && ep.dir == QlrDir::Input) fault(c, "write to an input-configured QLR register");
  core.regs[reg] = value;
  core.written[reg] = 1;
  if (ep.active && ep.dir == QlrDir::Output) qlr_push(c, reg, value, cycle);
}

void Cluster::account_issue(uint32_t c, const MicroOp& op) {
  CoreCounters& cc = counters_.core[c];
  cc.issued[static_cast<size_t>(op.kind)]++;
  cc.flops += flop_weight(op);
  cc.intops += intop_weight(op);
  progress_ = true;
}

Cluster::IssueOut Cluster::step_core(uint32_t c, uint64_t cycle) {
  Core& core = cores_[c];
  if (core.halted) {
    counters_.core[c].idle++;
    return IssueOut::Idle;
  }
  if (core.at_barrier) {
    stall(c, Stall::Barrier);
    return IssueOut::Stalled;
  }
  const auto& stream = (*prog_).streams[c];
  const MicroOp& op = stream[core.pc];
  Stall why = Stall::RawHazard;

  // Unique source registers of this op, in read order.
  uint8_t srcs[4];
  size_t n_srcs = 0;
  auto add_src = [&](uint8_t r) {
    for (size_t i = 0; i < n_srcs; ++i)
      if (srcs[i] == r) return;
    srcs[n_srcs++] = r;
  };

  bool has_dst = false;
  bool dst_pair = false;  // Cmac accumulator pair
  switch (op.kind) {
    case OpKind::Alu: {
      const AluFn fn = static_cast<AluFn>(op.sub);
      add_src(op.src1);
      if (fn == AluFn::IAdd || fn == AluFn::ISub || fn == AluFn::FAdd32 || fn == AluFn::FSub32 ||
          fn == AluFn::FMul32 || fn == AluFn::CAdd16 || fn == AluFn::CSub16 || fn == AluFn::CScale16)
        add_src(op.src2);
      has_dst = true;
      break;
    }
    case OpKind::Imac:
      add_src(op.src1);
      add_src(op.src2);
      add_src(op.dst);  // accumulator
      has_dst = true;
      break;
    case OpKind::Cmac:
      add_src(op.src1);
      add_src(op.src2);
      add_src(op.dst);
      add_src(op.dst + 1);
      has_dst = true;
      dst_pair = true;
      break;
    case OpKind::Cmul:
      add_src(op.src1);
      add_src(op.src2);
      has_dst = true;
      break;
    case OpKind::Fadd3:
      add_src(op.src1);
      add_src(op.src2);
      add_src(op.src3);
      has_dst = true;
      break;
    case OpKind::Fdiv:
      add_src(op.src1);
      add_src(op.src2);
      has_dst = true;
      break;
    case OpKind::Fsqrt:
      add_src(op.src1);
      has_dst = true;
      break;
    case OpKind::Load:
      add_src(op.src1);  // address
      has_dst = true;
      break;
    case OpKind::Store:
      add_src(op.src1);  // value
      add_src(op.src2);  // address
      break;
    case OpKind::LoadImm:
      has_dst = true;
      break;
    case OpKind::QlrCfg:
    case OpKind::Barrier:
      break;
    case OpKind::Halt:
      core.halted = true;
      counters_.core[c].idle++;
      return IssueOut::Idle;
  }

  if (dst_pair && uint32_t(op.dst) + 1 >= kNumRegs) fault(c, "Cmac accumulator pair out of range");

  for (size_t i = 0; i < n_srcs; ++i) {
    if (!operand_ready(core, srcs[i], cycle, &why)) {
      stall(c, why);
      return IssueOut::Stalled;
    }
  }
  if (has_dst) {
    if (!dest_ready(c, op.dst, cycle, &why) ||
        (dst_pair && !dest_ready(c, op.dst + 1, cycle, &why))) {
      stall(c, why);
      return IssueOut::Stalled;
    }
    if (dst_pair && (core.qlr[op.dst].active || core.qlr[op.dst + 1].active))
      fault(c, "QLR register used as widening accumulator");
  }

  // Structural checks.
  switch (op.kind) {
    case OpKind::Load:
      if (core.outstanding >= p_.scoreboard_depth) {
        stall(c, Stall::MemRetry);
        return IssueOut::Stalled;
      }
      if (core.qlr[op.dst].active) fault(c, "load destination is QLR-configured");
      if (core.qlr[op.src1].active) fault(c, "load address register is QLR-configured");
      break;
    case OpKind::Store:
      if (core.store_credits == 0) {
        stall(c, Stall::MemRetry);
        return IssueOut::Stalled;
      }
      if (core.qlr[op.src2].active) fault(c, "store address register is QLR-configured");
      break;
    case OpKind::Fdiv:
    case OpKind::Fsqrt: {
      if (core.outstanding >= p_.scoreboard_depth) {
        stall(c, Stall::MemRetry);
        return IssueOut::Stalled;
      }
      DivSqrtUnit& unit = divsqrt_[p_.topo.tile_of_core(c)];
      unit.candidates.push_back(c);
      return IssueOut::Deferred;  // resolved round-robin after the sweep
    }
    default:
      break;
  }

  // Commit: pops, computation, writes.
  switch (op.kind) {
    case OpKind::Alu: {
      const AluFn fn = static_cast<AluFn>(op.sub);
      uint32_t v = 0;
      const uint32_t a = read_operand(c, op.src1, cycle);
      switch (fn) {
        case AluFn::IAdd: v = a + read_operand(c, op.src2, cycle); break;
        case AluFn::IAddImm: v = a + static_cast<uint32_t>(op.imm); break;
        case AluFn::ISub: v = a - read_operand(c, op.src2, cycle); break;
        case AluFn::Mv: v = a; break;
        case AluFn::FAdd32:
          v = num::f32_bits(num::canon32(num::f32_from_bits(a) + num::f32_from_bits(read_operand(c, op.src2, cycle))));
          break;
        case AluFn::FSub32:
          v = num::f32_bits(num::canon32(num::f32_from_bits(a) - num::f32_from_bits(read_operand(c, op.src2, cycle))));
          break;
        case AluFn::FMul32:
          v = num::f32_bits(num::canon32(num::f32_from_bits(a) * num::f32_from_bits(read_operand(c, op.src2, cycle))));
          break;
        case AluFn::CAdd16: {
          const C16 x = C16::unpack(a), y = C16::unpack(read_operand(c, op.src2, cycle));
          v = C16(num::f16_add(x.re, y.re), num::f16_add(x.im, y.im)).pack();
          break;
        }
        case AluFn::CSub16: {
          const C16 x = C16::unpack(a), y = C16::unpack(read_operand(c, op.src2, cycle));
          v = C16(num::f16_sub(x.re, y.re), num::f16_sub(x.im, y.im)).pack();
          break;
        }
        case AluFn::CMulJ16: {  // j*(re+j im) = -im + j re
          const C16 x = C16::unpack(a);
          v = C16(num::F16(static_cast<uint16_t>(x.im.bits ^ 0x8000)), x.re).pack();
          break;
        }
        case AluFn::CConj16: {
          const C16 x = C16::unpack(a);
          v = C16(x.re, num::F16(static_cast<uint16_t>(x.im.bits ^ 0x8000))).pack();
          break;
        }
        case AluFn::CScale16: {
          const C16 x = C16::unpack(a);
          const float s = num::f32_from_bits(read_operand(c, op.src2, cycle));
          v = C16(num::f16_from_float(num::canon32(num::f16_to_float(x.re) * s)),
                  num::f16_from_float(num::canon32(num::f16_to_float(x.im) * s)))
                  .pack();
          break;
        }
      }
      write_dest(c, op.dst, v, cycle);
      break;
    }
    case OpKind::Imac: {
      const uint32_t a = read_operand(c, op.src1, cycle);
      const uint32_t b = read_operand(c, op.src2, cycle);
      const uint32_t acc = read_operand(c, op.dst, cycle);
      write_dest(c, op.dst, acc + a * b, cycle);
      break;
    }
    case OpKind::Cmac: {
      const C16 a = C16::unpack(read_operand(c, op.src1, cycle));
      const C16 b = C16::unpack(read_operand(c, op.src2, cycle));
      const C32 acc(num::f32_from_bits(read_operand(c, op.dst, cycle)),
                    num::f32_from_bits(read_operand(c, op.dst + 1, cycle)));
      const C32 r = (static_cast<MulFlag>(op.sub) == MulFlag::ConjA)
                        ? num::cmac_widening_conj_a(acc, a, b)
                        : num::cmac_widening(acc, a, b);
      write_dest(c, op.dst, num::f32_bits(r.re), cycle);
      write_dest(c, static_cast<uint8_t>(op.dst + 1), num::f32_bits(r.im), cycle);
      break;
    }
    case OpKind::Cmul: {
      const C16 a = C16::unpack(read_operand(c, op.src1, cycle));
      const C16 b = C16::unpack(read_operand(c, op.src2, cycle));
      const C16 r = (static_cast<MulFlag>(op.sub) == MulFlag::ConjA) ? num::cmul16_conj_a(a, b)
                                                                     : num::cmul16(a, b);
      write_dest(c, op.dst, r.pack(), cycle);
      break;
    }
    case OpKind::Fadd3: {
      const float a = num::f32_from_bits(read_operand(c, op.src1, cycle));
      const float b = num::f32_from_bits(read_operand(c, op.src2, cycle));
      const float d = num::f32_from_bits(read_operand(c, op.src3, cycle));
      write_dest(c, op.dst, num::f32_bits(num::fadd3(a, b, d)), cycle);
      break;
    }
    case OpKind::Load: {
      const uint32_t addr = read_operand(c, op.src1, cycle);
      const uint32_t value = fabric_->load_word(addr);  // functional effect at issue
      fabric_->submit(fabric::MemRequest{c, fabric::MemKind::Load, addr, op.dst, value, cycle});
      core.regs[op.src1] = addr + static_cast<uint32_t>(op.imm);
      core.pending[op.dst] = 1;
      core.written[op.dst] = 1;
      core.outstanding++;
      break;
    }
    case OpKind::Store: {
      const uint32_t value = read_operand(c, op.src1, cycle);
      const uint32_t addr = read_operand(c, op.src2, cycle);
      fabric_->store_word(addr, value);  // functional effect at issue
      fabric_->submit(fabric::MemRequest{c, fabric::MemKind::Store, addr, 0, value, cycle});
      core.regs[op.src2] = addr + static_cast<uint32_t>(op.imm);
      core.store_credits--;
      break;
    }
    case OpKind::LoadImm:
      write_dest(c, op.dst, static_cast<uint32_t>(op.imm), cycle);
      break;
    case OpKind::QlrCfg: {
      if ((*prog_).qlr_tables.size() <= c) fault(c, "program has no QLR table for this core");
      const auto& table = (*prog_).qlr_tables[c];
      if (op.imm < 0 || static_cast<size_t>(op.imm) >= table.size()) fault(c, "qlr_cfg index out of range");
      apply_qlr_cfg(c, table[static_cast<size_t>(op.imm)]);
      break;
    }
    case OpKind::Barrier: {
      if (barrier_arrived_ == 0 && !barrier_releasing_) barrier_active_id_ = op.imm;
      if (op.imm != barrier_active_id_ || barrier_releasing_)
        fault(c, "barrier id mismatch (got " + std::to_string(op.imm) + ")");
      core.at_barrier = true;
      core.barrier_id = op.imm;
      barrier_arrived_++;
      if (barrier_arrived_ == p_.topo.n_cores()) {
        barrier_releasing_ = true;
        barrier_release_ = cycle + p_.barrier_overhead;
      }
      break;
    }
    case OpKind::Fdiv:
    case OpKind::Fsqrt:
    case OpKind::Halt:
      break;  // handled above
  }

  account_issue(c, op);
  core.pc++;
  greedy_halt(c);
  return IssueOut::Issued;
}

void Cluster::resolve_divsqrt(uint64_t cycle) {
  for (uint32_t t = 0; t < divsqrt_.size(); ++t) {
    DivSqrtUnit& unit = divsqrt_[t];
    if (unit.candidates.empty()) continue;
    int winner = -1;
    if (unit.busy_until <= cycle) {
      // Round-robin among this cycle's requesters, starting after the last grant.
      const uint32_t n = p_.topo.cores_per_tile;
      for (uint32_t off = 1; off <= n && winner < 0; ++off) {
        const uint32_t slot = (unit.rr + off) % n;
        const uint32_t core_id = t * n + slot;
        for (uint32_t cand : unit.candidates)
          if (cand == core_id) {
            winner = static_cast<int>(cand);
            break;
          }
      }
    }
    for (uint32_t cand : unit.candidates) {
      if (static_cast<int>(cand) == winner) continue;
      stall(cand, Stall::DivsqrtBusy);
    }
    if (winner >= 0) {
      const uint32_t c = static_cast<uint32_t>(winner);
      Core& core = cores_[c];
      const MicroOp& op = (*prog_).streams[c][core.pc];
      const float a = num::f32_from_bits(read_operand(c, op.src1, cycle));
      float r;
      uint32_t latency;
      if (op.kind == OpKind::Fdiv) {
        const float b = num::f32_from_bits(read_operand(c, op.src2, cycle));
        r = num::fdiv(a, b);
        latency = p_.fdiv_latency;
      } else {
        r = num::fsqrt(a);
        latency = p_.fsqrt_latency;
      }
      unit.busy_until = cycle + latency;
      unit.rr = c % p_.topo.cores_per_tile;
      core.pending[op.dst] = 1;
      core.written[op.dst] = 1;
      core.outstanding++;
      responses_.push(Response{cycle + latency, response_seq_++, c, op.dst, num::f32_bits(r)});
      account_issue(c, op);
      core.pc++;
      greedy_halt(c);
    }
    unit.candidates.clear();
  }
}

std::string Cluster::deadlock_report(uint64_t cycle) const {
  std::ostringstream os;
  os << "deadlock: no progress for " << p_.deadlock_window << " cycles (cycle " << cycle << ")\n";
  for (uint32_t c = 0; c < cores_.size(); ++c) {
    const Core& core = cores_[c];
    os << "  core " << c << ": ";
    if (core.halted) {
      os << "halted";
    } else if (core.at_barrier) {
      os << "waiting at barrier " << core.barrier_id;
    } else {
      const auto& stream = (*prog_).streams[c];
      os << "pc " << core.pc << " (" << op_kind_name(stream[core.pc].kind) << ")";
    }
    os << "\n";
  }
  return os.str();
}

RunResult Cluster::run(const ProgramSet& program) {
  const uint32_t n_cores = p_.topo.n_cores();
  if (program.streams.size() != n_cores) throw SimFault("program must provide one stream per core");
  if (program.qlr_tables.size() != n_cores && !program.qlr_tables.empty())
    throw SimFault("qlr tables must be empty or one per core");
  if (program.l1_image.size() > p_.topo.l1_words()) throw SimFault("initial image exceeds L1");

  prog_ = &program;
  fabric_ = std::make_unique<fabric::L1Fabric>(p_.topo, p_.lat);
  std::copy(program.l1_image.begin(), program.l1_image.end(), fabric_->words().begin());

  cores_.assign(n_cores, Core{});
  for (auto& core : cores_) core.store_credits = p_.store_buffer_depth;
  divsqrt_.assign(p_.topo.n_tiles(), DivSqrtUnit{});
  counters_ = ClusterCounters{};
  counters_.core.assign(n_cores, CoreCounters{});
  responses_ = {};
  response_seq_ = 0;
  barrier_arrived_ = 0;
  barrier_releasing_ = false;

  for (uint32_t c = 0; c < n_cores; ++c) greedy_halt(c);

  uint64_t cycle = 0;
  uint64_t last_progress_cycle = 0;
  std::vector<fabric::L1Fabric::Grant> grants;
  bool saw_grant = false;

  while (true) {
    bool all_halted = true;
    for (const Core& core : cores_)
      if (!core.halted) {
        all_halted = false;
        break;
      }
    if (all_halted && responses_.empty() && fabric_->pending_requests() == 0) break;

    progress_ = false;

    // 1. Deliver matured load / div-sqrt responses.
    while (!responses_.empty() && responses_.top().ready <= cycle) {
      const Response r = responses_.top();
      responses_.pop();
      Core& core = cores_[r.core];
      core.regs[r.reg] = r.value;
      core.pending[r.reg] = 0;
      core.outstanding--;
      progress_ = true;
    }

    // 2. Barrier release.
    if (barrier_releasing_ && cycle >= barrier_release_) {
      for (Core& core : cores_) core.at_barrier = false;
      barrier_arrived_ = 0;
      barrier_releasing_ = false;
      progress_ = true;
    }

    // 3. Issue sweep.
    for (uint32_t c = 0; c < n_cores; ++c) step_core(c, cycle);

    // 4. Tile-shared div/sqrt grants.
    resolve_divsqrt(cycle);

    // 5. Bank arbitration.
    grants.clear();
    fabric_->arbitrate(cycle, &grants);
    for (const auto& g : grants) {
      if (g.req.kind == fabric::MemKind::Load) {
        responses_.push(Response{g.ready_cycle, response_seq_++, g.req.core, g.req.dest_reg, g.req.data});
      } else {
        cores_[g.req.core].store_credits++;
      }
      progress_ = true;
    }
    counters_.l1_grants += grants.size();
    if (!grants.empty()) {
      if (!saw_grant) {
        counters_.first_grant_cycle = cycle;
        saw_grant = true;
      }
      counters_.last_grant_cycle = cycle;
      if (grants.size() == n_cores) counters_.full_rate_grant_cycles++;
    }

    if (progress_) last_progress_cycle = cycle;
    if (cycle - last_progress_cycle >= p_.deadlock_window) throw SimFault(deadlock_report(cycle));
    cycle++;
  }

  counters_.cycles = cycle;
  counters_.l1_requests = fabric_->total_submitted();

  RunResult out;
  out.memory = fabric_->words();
  out.counters = counters_;
  out.cycles = cycle;
  prog_ = nullptr;
  return out;
}

}  // namespace heartsim::core
