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
#include <deque>
#include <memory>
#include <optional>
#include <queue>
#include <vector>

#include "heartsim/isa.hpp"
#include "heartsim/memfabric.hpp"

// The cycle engine: single-issue in-order latency-tolerant cores with a load
// scoreboard, QLR streaming, tile-shared div/sqrt units and global barriers,
// advanced one cycle at a time against the banked L1 fabric.
//
// Functional memory and register effects happen at issue time; the fabric
// queues model timing only. Architectural results are therefore independent
// of latency tables and arbitration by construction, and a run is fully
// deterministic given its program.

namespace heartsim::core {

using fabric::SimFault;

enum class Stall : uint8_t {
  RawHazard = 0,
  QlrEmpty,
  QlrFull,
  MemRetry,
  DivsqrtBusy,
  Barrier,
};
inline constexpr size_t kNumStalls = 6;
const char* stall_name(Stall s);

struct SimParams {
  fabric::Topology topo;
  fabric::LatencyTable lat;
  uint32_t scoreboard_depth = 8;   // outstanding loads (and div/sqrt results)
  uint32_t store_buffer_depth = 8;
  uint32_t qlr_depth_intra = 2;
  uint32_t qlr_depth_inter = 4;
  uint32_t barrier_overhead = 10;  // arrival-to-release cycles
  uint32_t fdiv_latency = 11;
  uint32_t fsqrt_latency = 15;
  uint64_t deadlock_window = 10000;
};

struct CoreCounters {
  std::array<uint64_t, kNumOpKinds> issued{};
  std::array<uint64_t, kNumStalls> stalls{};
  uint64_t idle = 0;  // cycles after halt
  uint64_t flops = 0;
  uint64_t intops = 0;

  uint64_t issued_total() const {
    uint64_t s = 0;
    for (uint64_t v : issued) s += v;
    return s;
  }
  uint64_t stalls_total() const {
    uint64_t s = 0;
    for (uint64_t v : stalls) s += v;
    return s;
  }
};

struct ClusterCounters {
  std::vector<CoreCounters> core;
  uint64_t cycles = 0;
  uint64_t l1_requests = 0;
  uint64_t l1_grants = 0;
  uint64_t full_rate_grant_cycles = 0;  // cycles with one grant on every core's behalf
  uint64_t first_grant_cycle = 0;
  uint64_t last_grant_cycle = 0;

  uint64_t issued_total() const;
  uint64_t flops_total() const;
  uint64_t intops_total() const;
  double ipc() const;  // issued / (n_cores * cycles)
  std::array<double, kNumStalls> stall_fractions() const;
  double issue_fraction() const;
  double idle_fraction() const;
};

struct RunResult {
  std::vector<uint32_t> memory;  // final L1 words
  ClusterCounters counters;
  uint64_t cycles = 0;
};

class Cluster {
 public:
  explicit Cluster(const SimParams& params);

  // Runs a program on a fresh cluster state until every core has halted and
  // all in-flight traffic has drained. Throws SimFault on program bugs or
  // deadlock (no progress for params.deadlock_window cycles).
  RunResult run(const ProgramSet& program);

 private:
  struct QlrEntry {
    uint32_t value;
    uint64_t ready;
  };
  struct QlrEndpoint {
    bool active = false;
    QlrDir dir = QlrDir::Input;
    uint8_t peer = 0;
    uint32_t remaining = 0;
    uint32_t capacity = 0;             // input side only
    std::deque<QlrEntry> queue;        // input side only (includes in-flight)
  };
  struct Core {
    std::array<uint32_t, kNumRegs> regs{};
    std::array<uint8_t, kNumRegs> written{};
    std::array<uint8_t, kNumRegs> pending{};
    std::array<QlrEndpoint, kNumRegs> qlr;  // indexed by reg; only r16..r19 used
    uint32_t pc = 0;
    bool halted = false;
    bool at_barrier = false;
    int32_t barrier_id = 0;
    uint32_t outstanding = 0;
    uint32_t store_credits = 0;
  };
  struct Response {
    uint64_t ready;
    uint64_t seq;
    uint32_t core;
    uint8_t reg;
    uint32_t value;
    bool operator>(const Response& o) const {
      return ready != o.ready ? ready > o.ready : seq > o.seq;
    }
  };
  struct DivSqrtUnit {
    uint64_t busy_until = 0;
    uint32_t rr = 0;  // last-granted core slot within the tile
    // same-cycle candidates, resolved after the issue sweep
    std::vector<uint32_t> candidates;
  };

  // issue helpers
  enum class IssueOut { Issued, Stalled, Deferred, Idle };
  IssueOut step_core(uint32_t c, uint64_t cycle);
  bool operand_ready(Core& core, uint8_t reg, uint64_t cycle, Stall* why) const;
  uint32_t read_operand(uint32_t c, uint8_t reg, uint64_t cycle);
  bool dest_ready(uint32_t c, uint8_t reg, uint64_t cycle, Stall* why) const;
  void write_dest(uint32_t c, uint8_t reg, uint32_t value, uint64_t cycle);
  void qlr_push(uint32_t producer, uint8_t reg, uint32_t value, uint64_t cycle);
  QlrEndpoint* find_input_from(uint32_t consumer, uint32_t producer);
  void apply_qlr_cfg(uint32_t c, const QlrConfig& cfg);
  void fault(uint32_t c, const std::string& what) const;
  void stall(uint32_t c, Stall s) { counters_.core[c].stalls[static_cast<size_t>(s)]++; }
  void account_issue(uint32_t c, const MicroOp& op);
  void resolve_divsqrt(uint64_t cycle);
  void greedy_halt(uint32_t c);
  std::string deadlock_report(uint64_t cycle) const;

  SimParams p_;
  const ProgramSet* prog_ = nullptr;
  std::unique_ptr<fabric::L1Fabric> fabric_;
  std::vector<Core> cores_;
  std::vector<DivSqrtUnit> divsqrt_;
  std::priority_queue<Response, std::vector<Response>, std::greater<Response>> responses_;
  uint64_t response_seq_ = 0;
  ClusterCounters counters_;
  // barrier state
  int32_t barrier_active_id_ = 0;
  uint32_t barrier_arrived_ = 0;
  uint64_t barrier_release_ = 0;
  bool barrier_releasing_ = false;
  bool progress_ = false;
};

// FLOP / integer-op weights per issued op (CMAC 8, CMUL 6, FADD3 2, IMAC 2, ...).
uint32_t flop_weight(const MicroOp& op);
uint32_t intop_weight(const MicroOp& op);

}  // namespace heartsim::core
