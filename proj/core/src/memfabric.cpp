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

#include "heartsim/memfabric.hpp"

#include <algorithm>

namespace heartsim::fabric {

namespace {
bool is_pow2(uint32_t v) { return v != 0 && (v & (v - 1)) == 0; }
}  // namespace

void Topology::validate() const {
  for (uint32_t v : {n_groups, tiles_per_group, cores_per_tile, banks_per_tile, bank_bytes, word_bytes}) {
    if (!is_pow2(v)) throw std::invalid_argument("topology fields must be powers of two");
  }
  if (word_bytes != 4) throw std::invalid_argument("word size is fixed at 4 bytes");
}

BankAddress map_address(uint32_t addr, const Topology& topo) {
  if (addr % topo.word_bytes != 0)
    throw SimFault("unaligned L1 address 0x" + std::to_string(addr));
  if (addr >= topo.l1_bytes())
    throw SimFault("L1 address out of range: 0x" + std::to_string(addr));
  const uint32_t word = addr / topo.word_bytes;
  const uint32_t global_bank = word % topo.n_banks();
  BankAddress out;
  out.offset = (word / topo.n_banks()) * topo.word_bytes;
  out.group = global_bank / topo.banks_per_group();
  out.tile = (global_bank / topo.banks_per_tile) % topo.tiles_per_group;
  out.bank = global_bank % topo.banks_per_tile;
  return out;
}

uint32_t access_latency(uint32_t core, const BankAddress& bank, const Topology& topo,
                        const LatencyTable& table) {
  const uint32_t core_tile = topo.tile_of_core(core);
  const uint32_t bank_tile = bank.group * topo.tiles_per_group + bank.tile;
  if (core_tile == bank_tile) return table.intra_tile;
  if (topo.group_of_core(core) == bank.group) return table.intra_group;
  return table.inter_group;
}

uint32_t core_link_latency(uint32_t a, uint32_t b, const Topology& topo, const LatencyTable& table) {
  if (topo.tile_of_core(a) == topo.tile_of_core(b)) return table.intra_tile;
  if (topo.group_of_core(a) == topo.group_of_core(b)) return table.intra_group;
  return table.inter_group;
}

bool BankQueue::grant(MemRequest* out) {
  if (pending_ == 0) return false;
  const uint32_t n = static_cast<uint32_t>(queues_.size());
  for (uint32_t off = 1; off <= n; ++off) {
    const uint32_t c = (rr_ + off) % n;
    if (!queues_[c].empty()) {
      *out = queues_[c].front();
      queues_[c].pop_front();
      pending_--;
      rr_ = c;
      return true;
    }
  }
  return false;
}

L1Fabric::L1Fabric(const Topology& topo, const LatencyTable& lat) : topo_(topo), lat_(lat) {
  topo_.validate();
  lat_.validate();
  words_.assign(topo_.l1_words(), 0);
  banks_.assign(topo_.n_banks(), BankQueue(topo_.n_cores()));
  bank_active_flag_.assign(topo_.n_banks(), 0);
}

void L1Fabric::check_word_address(uint32_t addr) const {
  if (addr % topo_.word_bytes != 0)
    throw SimFault("unaligned L1 address 0x" + std::to_string(addr));
  if (addr >= topo_.l1_bytes())
    throw SimFault("L1 address out of range: 0x" + std::to_string(addr));
}

uint32_t L1Fabric::load_word(uint32_t addr) const {
  check_word_address(addr);
  return words_[addr / topo_.word_bytes];
}

void L1Fabric::store_word(uint32_t addr, uint32_t value) {
  check_word_address(addr);
  words_[addr / topo_.word_bytes] = value;
}

void L1Fabric::submit(const MemRequest& req) {
  const uint32_t bank = map_address(req.address, topo_).global_bank(topo_);
  banks_[bank].push(req);
  if (!bank_active_flag_[bank]) {
    bank_active_flag_[bank] = 1;
    active_banks_.push_back(bank);
  }
  pending_++;
  total_submitted_++;
}

void L1Fabric::arbitrate(uint64_t cycle, std::vector<Grant>* out) {
  if (active_banks_.empty()) return;
  size_t keep = 0;
  for (size_t i = 0; i < active_banks_.size(); ++i) {
    const uint32_t bank = active_banks_[i];
    MemRequest req;
    if (banks_[bank].grant(&req)) {
      pending_--;
      total_granted_++;
      const BankAddress ba = map_address(req.address, topo_);
      Grant g;
      g.req = req;
      g.ready_cycle = cycle + access_latency(req.core, ba, topo_, lat_);
      out->push_back(g);
    }
    if (!banks_[bank].empty()) {
      active_banks_[keep++] = bank;
    } else {
      bank_active_flag_[bank] = 0;
    }
  }
  active_banks_.resize(keep);
}

}  // namespace heartsim::fabric
