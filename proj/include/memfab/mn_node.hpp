#pragma once

#include <deque>
#include <list>
#include <map>
#include <optional>
#include <unordered_map>

#include "memfab/arq.hpp"
#include "memfab/fabric.hpp"
#include "memfab/sim.hpp"
#include "memfab/wire.hpp"

namespace memfab {

struct GmmConfig {
  uint64_t pool_bytes = 256ull << 20;
  uint64_t granule_bytes = 2ull << 20;
};

struct CmemRegion {
  uint64_t base = 0;
  uint64_t length = 0;
};

struct MacHash {
  size_t operator()(const MacAddr& m) const {
    uint64_t v = 0;
    for (auto b : m) v = (v << 8) | b;
    return std::hash<uint64_t>{}(v);
  }
};

struct TranslationKey {
  MacAddr cn_id;
  uint64_t cmem_page;
  bool operator==(const TranslationKey&) const = default;
};

struct TranslationKeyHash {
  size_t operator()(const TranslationKey& k) const;
};

// Hash-with-chaining page table; the real structure lives in pool memory, so
// a walk costs one DRAM access (accounted by the caller).
class PageTable {
 public:
  void insert(const TranslationKey& k, uint64_t mpmem_page);
  std::optional<uint64_t> lookup(const TranslationKey& k) const;
  // synthetic pool address of the bucket, for bank accounting of walks
  uint64_t bucket_addr(const TranslationKey& k) const;
  size_t size() const { return map_.size(); }

 private:
  std::unordered_map<TranslationKey, uint64_t, TranslationKeyHash> map_;
};

// Fully associative, LRU, CAM-style.
class Tlb {
 public:
  explicit Tlb(size_t entries = 64) : capacity_(entries) {}

  std::optional<uint64_t> lookup(const TranslationKey& k);  // hit promotes
  void insert(const TranslationKey& k, uint64_t mpmem_page);

  uint64_t hits = 0, misses = 0;
  size_t size() const { return map_.size(); }

 private:
  size_t capacity_;
  std::list<std::pair<TranslationKey, uint64_t>> lru_;  // front = most recent
  std::unordered_map<TranslationKey, decltype(lru_)::iterator, TranslationKeyHash> map_;
};

// Central allocator: hands out CMem ranges at granule granularity, records
// which CN owns which pool pages, and fills the page table.
class Gmm {
 public:
  Gmm(const GmmConfig& cfg, PageTable& table);

  std::optional<CmemRegion> alloc(const MacAddr& cn, uint64_t bytes);
  // pre: the CN already has an allocation; prior mappings stay intact
  std::optional<CmemRegion> expand(const MacAddr& cn, uint64_t bytes);

  struct Record {
    CmemRegion region;
    std::vector<uint64_t> mpmem_pages;
  };
  const std::vector<Record>* records(const MacAddr& cn) const;
  size_t free_pages() const { return free_.size(); }
  uint64_t granule() const { return cfg_.granule_bytes; }

 private:
  GmmConfig cfg_;
  PageTable& table_;
  std::deque<uint64_t> free_;  // page indices, deterministic order
  std::unordered_map<MacAddr, std::vector<Record>, MacHash> per_cn_;
};

class AddressTranslator {
 public:
  AddressTranslator(PageTable& table, size_t tlb_entries, uint64_t granule)
      : table_(table), tlb_(tlb_entries), granule_(granule) {}

  struct Result {
    uint64_t mpmem_addr;
    bool tlb_hit;
  };
  // nullopt = TranslationFault (unmapped)
  std::optional<Result> translate(const MacAddr& cn, uint64_t cmem_addr);
  // page-table-only path for dual-route checks; no TLB side effects
  std::optional<uint64_t> table_lookup(const MacAddr& cn, uint64_t cmem_addr) const;
  uint64_t walk_addr(const MacAddr& cn, uint64_t cmem_addr) const;

  Tlb& tlb() { return tlb_; }

 private:
  TranslationKey key_of(const MacAddr& cn, uint64_t cmem_addr) const {
    return {cn, cmem_addr / granule_};
  }
  PageTable& table_;
  Tlb tlb_;
  uint64_t granule_;
};

struct DramConfig {
  unsigned banks = 16;
  SimTime t_access = 48;
  // Optional burstiness: service (banks and the serve stage) pauses during
  // [phase + k*period, +duration). period 0 disables.
  SimTime stall_period = 0;
  SimTime stall_duration = 0;
  SimTime stall_phase = 0;
};

// Banked DRAM with row-column-bank address split: bank index comes from the
// low bits of the line address, so consecutive lines interleave.
class DramModel {
 public:
  explicit DramModel(const DramConfig& cfg) : cfg_(cfg), bank_free_(cfg.banks, 0) {}

  unsigned bank_of(uint64_t addr) const { return (addr / 64) % cfg_.banks; }
  SimTime defer_for_stall(SimTime t) const;
  // Queues the access on its bank; returns completion time.
  SimTime schedule(uint64_t addr, SimTime ready);

  const DramConfig& config() const { return cfg_; }
  uint64_t accesses = 0;

 private:
  DramConfig cfg_;
  std::vector<SimTime> bank_free_;
};

// Backing store for the pool; untouched lines read as zeros.
class MemoryPool {
 public:
  CacheLineData read(uint64_t line_addr) const;
  void write(uint64_t line_addr, const CacheLineData& data);
  size_t touched() const { return lines_.size(); }
  // (address, line) pairs sorted by address
  std::vector<std::pair<uint64_t, CacheLineData>> snapshot() const;
  void dump(std::ostream& os) const;  // binary: u64 addr + 64 bytes, repeated

 private:
  std::unordered_map<uint64_t, CacheLineData> lines_;
};

struct RxFifoConfig {
  size_t depth = 512;
  size_t pfc_threshold = 105;
  size_t hysteresis = 4;
  SimTime pfc_min_gap = 5 * kNsPerUs;
};

// Occupancy tracking plus the PFC policy: emit on upward threshold crossing,
// then at most once per min-gap while the level stays above; re-arm after
// falling hysteresis entries below.
class RxFifo {
 public:
  explicit RxFifo(const RxFifoConfig& cfg) : cfg_(cfg) {}

  struct EnqueueResult {
    bool accepted;
    bool emit_pfc;
  };
  EnqueueResult enqueue(SimTime now);
  void dequeue();

  size_t occupancy() const { return occupancy_; }
  size_t peak_occupancy() const { return peak_; }
  uint64_t overruns() const { return overruns_; }
  const RxFifoConfig& config() const { return cfg_; }

 private:
  RxFifoConfig cfg_;
  size_t occupancy_ = 0;
  size_t peak_ = 0;
  uint64_t overruns_ = 0;
  bool armed_ = true;
  bool pfc_ever_ = false;
  SimTime last_pfc_ = 0;
};

struct MnConfig {
  MacAddr mac{{0x02, 0x4D, 0x4E, 0x00, 0x00, 0x01}};
  SimTime rx_pipeline_ns = 55;   // parse + translate latency
  SimTime tx_pipeline_ns = 55;   // egress pipeline latency
  SimTime serve_interval_ns = 4; // service initiation interval per frame
  uint16_t pfc_quanta = 1000;
  size_t tlb_entries = 64;
  GmmConfig gmm;
  DramConfig dram;
  RxFifoConfig fifo;
};

struct MnStats {
  uint64_t requests_served = 0;
  uint64_t reads = 0;
  uint64_t writes = 0;
  uint64_t pfc_sent = 0;
  uint64_t translation_faults = 0;
  uint64_t stale_fast_retransmits = 0;
  uint64_t response_retransmits = 0;
  uint64_t acks_sent = 0;
  uint64_t naks_sent = 0;
  uint64_t crc_errors = 0;
  uint64_t duplicates = 0;
  uint64_t reorder_overflows = 0;
};

// Memory-node model: RX FIFO (PFC source), in-order request delivery through
// the reorder buffer, translation, banked DRAM, and the response-side retry
// buffer with stale-request fast retransmit.
class MnNode {
 public:
  MnNode(Sim& sim, Fabric& fabric, const MnConfig& cfg);

  // setup + unit surface
  std::optional<CmemRegion> gmm_alloc(const MacAddr& cn, uint64_t bytes) {
    return gmm_.alloc(cn, bytes);
  }
  std::optional<CmemRegion> gmm_expand(const MacAddr& cn, uint64_t bytes) {
    return gmm_.expand(cn, bytes);
  }

  Gmm& gmm() { return gmm_; }
  AddressTranslator& translator() { return translator_; }
  MemoryPool& pool() { return pool_; }
  DramModel& dram() { return dram_; }
  const RxFifo& rx_fifo() const { return fifo_; }
  const MnStats& stats() const { return stats_; }

 private:
  struct RxItem {
    Frame frame;       // decoded (valid only when crc_ok)
    bool crc_ok;
    FrameMeta meta;
    SimTime arrived;
  };
  struct PendingResp {
    Frame frame;
    FrameMeta meta;
    SimTime ready;
  };

  void on_delivery(Delivery d);
  void pump_serve();
  void do_serve(RxItem item, SimTime t);
  void process_request(RxItem item, SimTime serve_time);
  void sequence_response(SeqNum req_seq, Frame f, FrameMeta meta, SimTime ready);
  void pump_sequencer();
  void emit_control(Frame f);
  void pump_egress();
  void send_pfc();

  Sim& sim_;
  Fabric& fabric_;
  MnConfig cfg_;

  PageTable page_table_;
  Gmm gmm_;
  AddressTranslator translator_;
  DramModel dram_;
  MemoryPool pool_;
  RxFifo fifo_;

  std::deque<RxItem> rx_queue_;
  bool serve_scheduled_ = false;
  SimTime serve_free_ = 0;

  ReorderBuffer<RxItem> reorder_;
  PendingControl pending_;

  // responses leave in request order; retransmits bypass the sequencer
  std::unordered_map<SeqNum, PendingResp> sequencer_;  // keyed by req_seq
  SeqNum next_emit_ = 0;
  bool sequencer_scheduled_ = false;

  SeqNum next_resp_seq_ = 0;
  RetryBuffer resp_retry_;
  std::unordered_map<SeqNum, SeqNum> resp_of_req_;    // req_seq -> resp_seq
  std::unordered_map<SeqNum, FrameMeta> resp_meta_;   // resp_seq -> path stamps
  std::deque<std::pair<SeqNum, SeqNum>> emitted_;     // (resp_seq, req_seq) fifo for eviction

  std::deque<std::pair<Bytes, FrameMeta>> egress_control_;
  std::deque<std::pair<Bytes, FrameMeta>> egress_data_;

  MacAddr cn_mac_{};  // learned from the first request
  MnStats stats_;
};

}  // namespace memfab
