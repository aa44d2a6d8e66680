#pragma once

#include <cstdint>
#include <functional>
#include <unordered_set>
#include <vector>

#include "memfab/arq.hpp"
#include "memfab/congctl.hpp"
#include "memfab/sim.hpp"
#include "memfab/wire.hpp"

namespace memfab {

struct LinkConfig {
  RateKbps rate = 100 * kKbpsPerGbps;
  // Boards share a chassis in the reference deployment; raise toward 500 ns
  // for rack-scale studies.
  SimTime propagation_ns = 10;
  // Ethernet IP processing, one constant per direction, calibrated so the
  // unloaded round trip lands at the measured 1.06/1.11 us.
  SimTime proc_request_ns = 385;
  SimTime proc_response_ns = 385;
  size_t mac_fifo_frames = 48;  // per-direction egress staging
};

// DROP/CORRUPT by request-stream seq (deterministic trace), or per-frame
// probabilities. A trace overrides the probabilistic draws entirely.
struct FaultConfig {
  double drop_probability = 0;
  double corrupt_probability = 0;
  bool has_trace = false;
  std::unordered_set<SeqNum> drop_seqs;
  std::unordered_set<SeqNum> corrupt_seqs;
};

FaultConfig parse_loss_trace(const std::string& text);  // "DROP <seq>" / "CORRUPT <seq>" lines

struct FrameMeta {
  SeqNum seq = 0;  // request seq or response resp_seq
  uint8_t command = 0;
  uint64_t req_id = 0;
  // Path-boundary stamps carried with the frame so the receiver can account
  // latency parts of the exact copies that served the request.
  SimTime t_issue = 0;
  SimTime t_cn_mac_tx = 0;
  SimTime t_mn_mac_rx = 0;
  SimTime t_dram_done = 0;
  SimTime t_mn_mac_tx = 0;
};

struct Delivery {
  Bytes bytes;
  bool corrupted = false;
  FrameMeta meta;
};

struct LinkStats {
  uint64_t submitted = 0;
  uint64_t delivered = 0;
  uint64_t dropped = 0;
  uint64_t corrupted = 0;
  uint64_t wire_bits_delivered = 0;
};

// Point-to-point full-duplex link: per-direction MAC staging FIFO, a
// picosecond-exact serializer at line rate, fixed processing + propagation,
// and seeded fault injection. PFC rides a control lane that bypasses the
// data path and is never dropped or corrupted.
class Fabric {
 public:
  enum class Dir { CnToMn = 0, MnToCn = 1 };

  Fabric(Sim& sim, const LinkConfig& cfg, const FaultConfig& faults, uint64_t master_seed);

  void set_receiver(Dir d, std::function<void(Delivery)> fn);
  void set_space_callback(Dir d, std::function<void()> fn);
  void set_pfc_receiver(std::function<void(const Pfc&)> fn);

  bool fifo_full(Dir d) const;
  // False when the MAC FIFO is full; the caller keeps the frame queued and
  // retries from its space callback. On success meta.mac_entry time is now.
  bool try_submit(Dir d, Bytes bytes, FrameMeta meta);

  void pfc_transmit(const Pfc& frame);

  const LinkStats& stats(Dir d) const { return stats_[static_cast<int>(d)]; }
  // wire bits delivered per 10 us bucket, for throughput-over-time reports
  const std::vector<uint64_t>& throughput_buckets(Dir d) const {
    return buckets_[static_cast<int>(d)];
  }
  static constexpr SimTime kBucketNs = 10 * kNsPerUs;

 private:
  struct Lane {
    size_t fifo_count = 0;
    uint64_t wire_free_ps = 0;
    SimTime last_delivery = 0;
  };

  SimTime proc_of(Dir d) const {
    return d == Dir::CnToMn ? cfg_.proc_request_ns : cfg_.proc_response_ns;
  }
  uint64_t ser_ps(size_t wire_bytes) const;
  void account_delivery(Dir d, SimTime at, size_t wire_bytes);

  Sim& sim_;
  LinkConfig cfg_;
  FaultConfig faults_;
  RngStream fault_rng_[2];
  RngStream corrupt_bit_rng_;
  Lane lanes_[2];
  SimTime pfc_last_delivery_ = 0;
  std::function<void(Delivery)> receiver_[2];
  std::function<void()> space_cb_[2];
  std::function<void(const Pfc&)> pfc_receiver_;
  LinkStats stats_[2];
  std::vector<uint64_t> buckets_[2];
};

}  // namespace memfab
