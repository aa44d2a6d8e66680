#include "memfab/fabric.hpp"

#include <sstream>

namespace memfab {

FaultConfig parse_loss_trace(const std::string& text) {
  FaultConfig fc;
  fc.has_trace = true;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    unsigned long seq;
    if (!(in >> seq)) throw std::runtime_error("loss trace: missing seq after " + word);
    if (word == "DROP")
      fc.drop_seqs.insert(static_cast<SeqNum>(seq));
    else if (word == "CORRUPT")
      fc.corrupt_seqs.insert(static_cast<SeqNum>(seq));
    else
      throw std::runtime_error("loss trace: unknown directive " + word);
  }
  return fc;
}

Fabric::Fabric(Sim& sim, const LinkConfig& cfg, const FaultConfig& faults,
               uint64_t master_seed)
    : sim_(sim),
      cfg_(cfg),
      faults_(faults),
      fault_rng_{{master_seed, "fabric.fault.cn_to_mn"}, {master_seed, "fabric.fault.mn_to_cn"}},
      corrupt_bit_rng_(master_seed, "fabric.corrupt_bit") {}

void Fabric::set_receiver(Dir d, std::function<void(Delivery)> fn) {
  receiver_[static_cast<int>(d)] = std::move(fn);
}
void Fabric::set_space_callback(Dir d, std::function<void()> fn) {
  space_cb_[static_cast<int>(d)] = std::move(fn);
}
void Fabric::set_pfc_receiver(std::function<void(const Pfc&)> fn) {
  pfc_receiver_ = std::move(fn);
}

bool Fabric::fifo_full(Dir d) const {
  return lanes_[static_cast<int>(d)].fifo_count >= cfg_.mac_fifo_frames;
}

uint64_t Fabric::ser_ps(size_t wire_bytes) const {
  // ps = bits * 1e6 / kbps; exact for the line rates in use
  return static_cast<uint64_t>(wire_bytes) * 8 * 1'000'000 / static_cast<uint64_t>(cfg_.rate);
}

void Fabric::account_delivery(Dir d, SimTime at, size_t wire_bytes) {
  int i = static_cast<int>(d);
  stats_[i].delivered++;
  stats_[i].wire_bits_delivered += wire_bytes * 8;
  size_t bucket = static_cast<size_t>(at / kBucketNs);
  if (buckets_[i].size() <= bucket) buckets_[i].resize(bucket + 1, 0);
  buckets_[i][bucket] += wire_bytes * 8;
}

bool Fabric::try_submit(Dir d, Bytes bytes, FrameMeta meta) {
  int i = static_cast<int>(d);
  Lane& lane = lanes_[i];
  if (lane.fifo_count >= cfg_.mac_fifo_frames) return false;

  lane.fifo_count++;
  stats_[i].submitted++;

  size_t wire_bytes = bytes->size() + kWireOverheadBytes;
  uint64_t now_ps = sim_.now() * 1000;
  uint64_t start_ps = std::max(now_ps, lane.wire_free_ps);
  uint64_t end_ps = start_ps + ser_ps(wire_bytes);
  lane.wire_free_ps = end_ps;
  SimTime wire_end = static_cast<SimTime>((end_ps + 999) / 1000);

  // frame leaves the MAC when fully serialized
  sim_.schedule(wire_end, "fabric", "mac_drain", [this, i] {
    lanes_[i].fifo_count--;
    if (space_cb_[i]) space_cb_[i]();
  });

  bool drop = false, corrupt = false;
  if (faults_.has_trace) {
    if (d == Dir::CnToMn) {
      drop = faults_.drop_seqs.count(meta.seq) > 0;
      corrupt = !drop && faults_.corrupt_seqs.count(meta.seq) > 0;
    }
  } else {
    drop = fault_rng_[i].chance(faults_.drop_probability);
    corrupt = !drop && fault_rng_[i].chance(faults_.corrupt_probability);
  }

  if (drop) {
    stats_[i].dropped++;
    return true;
  }

  Delivery dv;
  dv.meta = meta;
  if (corrupt) {
    stats_[i].corrupted++;
    auto copy = std::make_shared<std::vector<uint8_t>>(*bytes);
    size_t bit = corrupt_bit_rng_.next_below(copy->size() * 8);
    (*copy)[bit / 8] ^= static_cast<uint8_t>(1u << (bit % 8));
    dv.bytes = std::move(copy);
    dv.corrupted = true;
  } else {
    dv.bytes = std::move(bytes);
  }

  SimTime arrival = sat_add(wire_end, proc_of(d) + cfg_.propagation_ns);
  arrival = std::max(arrival, lane.last_delivery);  // FIFO per direction
  lane.last_delivery = arrival;
  sim_.schedule(arrival, "fabric", d == Dir::CnToMn ? "deliver_to_mn" : "deliver_to_cn",
                [this, i, dv = std::move(dv), arrival, wire_bytes]() mutable {
                  account_delivery(static_cast<Dir>(i), arrival, wire_bytes);
                  if (receiver_[i]) receiver_[i](std::move(dv));
                });
  return true;
}

void Fabric::pfc_transmit(const Pfc& frame) {
  // control lane: serialization + propagation only, exempt from faults
  size_t wire_bytes = payload_length_of_command(0x07) + kCrcBytes + kWireOverheadBytes;
  SimTime ser = static_cast<SimTime>((ser_ps(wire_bytes) + 999) / 1000);
  SimTime arrival = sat_add(sim_.now(), ser + cfg_.propagation_ns);
  arrival = std::max(arrival, pfc_last_delivery_);
  pfc_last_delivery_ = arrival;
  sim_.schedule(arrival, "fabric", "deliver_pfc", [this, frame] {
    if (pfc_receiver_) pfc_receiver_(frame);
  });
}

}  // namespace memfab
