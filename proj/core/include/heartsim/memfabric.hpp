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

#include <cstdint>
#include <deque>
#include <stdexcept>
#include <string>
#include <vector>

// Shared-L1 memory system: word-interleaved single-ported banks behind a
// hierarchical interconnect (1 cycle within a tile, 3 within a group,
// 5 across groups by default), with per-bank round-robin arbitration.

namespace heartsim::fabric {

// Raised on program bugs and structural misuse (bad address, uninitialized
// register read, QLR misconfiguration, deadlock). The CLI maps it to exit 3.
struct SimFault : std::runtime_error {
  explicit SimFault(const std::string& what) : std::runtime_error(what) {}
};

// Cluster shape: 4 groups x 4 tiles x 4 cores, 16 banks of 1 KiB per tile.
struct Topology {
  uint32_t n_groups = 4;
  uint32_t tiles_per_group = 4;
  uint32_t cores_per_tile = 4;
  uint32_t banks_per_tile = 16;
  uint32_t bank_bytes = 1024;
  uint32_t word_bytes = 4;

  uint32_t n_tiles() const { return n_groups * tiles_per_group; }
  uint32_t n_cores() const { return n_tiles() * cores_per_tile; }
  uint32_t n_banks() const { return n_tiles() * banks_per_tile; }
  uint32_t l1_bytes() const { return n_banks() * bank_bytes; }
  uint32_t l1_words() const { return l1_bytes() / word_bytes; }
  uint32_t banks_per_group() const { return tiles_per_group * banks_per_tile; }

  uint32_t tile_of_core(uint32_t core) const { return core / cores_per_tile; }
  uint32_t group_of_core(uint32_t core) const { return core / (cores_per_tile * tiles_per_group); }

  void validate() const;
};

struct BankAddress {
  uint32_t group = 0;
  uint32_t tile = 0;   // within group
  uint32_t bank = 0;   // within tile
  uint32_t offset = 0; // byte offset within the bank

  uint32_t global_bank(const Topology& t) const {
    return (group * t.tiles_per_group + tile) * t.banks_per_tile + bank;
  }
};

struct LatencyTable {
  uint32_t intra_tile = 1;
  uint32_t intra_group = 3;
  uint32_t inter_group = 5;

  void validate() const {
    if (!(1 <= intra_tile && intra_tile <= intra_group && intra_group <= inter_group &&
          inter_group <= 5))
      throw std::invalid_argument("latency table must satisfy 1 <= intra_tile <= intra_group <= inter_group <= 5");
  }
};

enum class MemKind : uint8_t { Load, Store };

struct MemRequest {
  uint32_t core = 0;
  MemKind kind = MemKind::Load;
  uint32_t address = 0;    // byte address, word aligned
  uint8_t dest_reg = 0;    // loads
  uint32_t data = 0;       // stores: value; loads: value captured at issue
  uint64_t issue_cycle = 0;
};

// Fully sequential word interleaving: global bank = word index mod n_banks,
// bank offset advances one word per full sweep of the banks.
BankAddress map_address(uint32_t addr, const Topology& topo);

// Fixed per-pair latency: contention is modeled separately by arbitration.
uint32_t access_latency(uint32_t core, const BankAddress& bank, const Topology& topo,
                        const LatencyTable& table);

// latency between two cores' tiles (QLR routing reuses the same table).
uint32_t core_link_latency(uint32_t a, uint32_t b, const Topology& topo, const LatencyTable& table);

// One single-ported bank: per-core FIFO sub-queues with a round-robin grant
// pointer, so same-core requests stay ordered and grants are fair.
class BankQueue {
 public:
  explicit BankQueue(uint32_t n_cores) : queues_(n_cores) {}

  void push(const MemRequest& req) {
    queues_[req.core].push_back(req);
    pending_++;
  }
  bool empty() const { return pending_ == 0; }
  uint64_t pending() const { return pending_; }

  // Grants at most one request (round-robin among requesting cores).
  bool grant(MemRequest* out);

 private:
  std::vector<std::deque<MemRequest>> queues_;
  uint64_t pending_ = 0;
  uint32_t rr_ = 0;
};

// L1 backing store plus the per-bank queues. Functional state is updated at
// issue time by the cluster engine; these queues model timing only, which
// keeps architectural results independent of latency and arbitration.
class L1Fabric {
 public:
  L1Fabric(const Topology& topo, const LatencyTable& lat);

  const Topology& topology() const { return topo_; }
  const LatencyTable& latency() const { return lat_; }

  uint32_t load_word(uint32_t addr) const;
  void store_word(uint32_t addr, uint32_t value);

  // Timing side: queue a request for arbitration.
  void submit(const MemRequest& req);

  // One arbitration round: at most one grant per bank. Returns granted
  // requests along with their response-ready cycle.
  struct Grant {
    MemRequest req;
    uint64_t ready_cycle;
  };
  void arbitrate(uint64_t cycle, std::vector<Grant>* out);

  uint64_t pending_requests() const { return pending_; }
  uint64_t total_submitted() const { return total_submitted_; }
  uint64_t total_granted() const { return total_granted_; }

  void check_word_address(uint32_t addr) const;

  std::vector<uint32_t>& words() { return words_; }
  const std::vector<uint32_t>& words() const { return words_; }

 private:
  Topology topo_;
  LatencyTable lat_;
  std::vector<uint32_t> words_;
  std::vector<BankQueue> banks_;
  std::vector<uint32_t> active_banks_;  // banks with pending requests
  std::vector<uint8_t> bank_active_flag_;
  uint64_t pending_ = 0;
  uint64_t total_submitted_ = 0;
  uint64_t total_granted_ = 0;
};

}  // namespace heartsim::fabric
