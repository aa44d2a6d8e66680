#include "memfab/mn_node.hpp"

#include <ostream>

namespace memfab {

size_t TranslationKeyHash::operator()(const TranslationKey& k) const {
  uint64_t v = k.cmem_page;
  for (auto b : k.cn_id) v = v * 0x100000001b3ull + b;
  v ^= v >> 33;
  v *= 0xff51afd7ed558ccdull;
  v ^= v >> 33;
  return static_cast<size_t>(v);
}

void PageTable::insert(const TranslationKey& k, uint64_t mpmem_page) {
  map_[k] = mpmem_page;
}

std::optional<uint64_t> PageTable::lookup(const TranslationKey& k) const {
  auto it = map_.find(k);
  if (it == map_.end()) return std::nullopt;
  return it->second;
}

uint64_t PageTable::bucket_addr(const TranslationKey& k) const {
  // the table lives in the pool; pick a stable line address for the bucket
  return (TranslationKeyHash{}(k) % (1 << 20)) * 64;
}

std::optional<uint64_t> Tlb::lookup(const TranslationKey& k) {
  auto it = map_.find(k);
  if (it == map_.end()) {
    misses++;
    return std::nullopt;
  }
  hits++;
  lru_.splice(lru_.begin(), lru_, it->second);
  return it->second->second;
}

void Tlb::insert(const TranslationKey& k, uint64_t mpmem_page) {
  auto it = map_.find(k);
  if (it != map_.end()) {
    it->second->second = mpmem_page;
    lru_.splice(lru_.begin(), lru_, it->second);
    return;
  }
  if (lru_.size() >= capacity_) {
    map_.erase(lru_.back().first);
    lru_.pop_back();
  }
  lru_.emplace_front(k, mpmem_page);
  map_[k] = lru_.begin();
}

Gmm::Gmm(const GmmConfig& cfg, PageTable& table) : cfg_(cfg), table_(table) {
  for (uint64_t p = 0; p < cfg_.pool_bytes / cfg_.granule_bytes; p++) free_.push_back(p);
}

std::optional<CmemRegion> Gmm::alloc(const MacAddr& cn, uint64_t bytes) {
  uint64_t pages = (bytes + cfg_.granule_bytes - 1) / cfg_.granule_bytes;
  if (pages == 0) pages = 1;
  if (free_.size() < pages) return std::nullopt;  // OutOfPoolMemory

  auto& recs = per_cn_[cn];
  uint64_t base = 0;
  if (!recs.empty()) base = recs.back().region.base + recs.back().region.length;

  Record rec;
  rec.region = {base, pages * cfg_.granule_bytes};
  for (uint64_t i = 0; i < pages; i++) {
    uint64_t page = free_.front();
    free_.pop_front();
    rec.mpmem_pages.push_back(page);
    table_.insert({cn, base / cfg_.granule_bytes + i}, page);
  }
  recs.push_back(std::move(rec));
  return recs.back().region;
}

std::optional<CmemRegion> Gmm::expand(const MacAddr& cn, uint64_t bytes) {
  auto it = per_cn_.find(cn);
  if (it == per_cn_.end() || it->second.empty())
    throw std::logic_error("gmm_expand before gmm_alloc");
  return alloc(cn, bytes);
}

const std::vector<Gmm::Record>* Gmm::records(const MacAddr& cn) const {
  auto it = per_cn_.find(cn);
  return it == per_cn_.end() ? nullptr : &it->second;
}

std::optional<AddressTranslator::Result> AddressTranslator::translate(const MacAddr& cn,
                                                                      uint64_t cmem_addr) {
  TranslationKey k = key_of(cn, cmem_addr);
  uint64_t off = cmem_addr % granule_;
  if (auto page = tlb_.lookup(k)) return Result{*page * granule_ + off, true};
  auto page = table_.lookup(k);
  if (!page) return std::nullopt;  // TranslationFault
  tlb_.insert(k, *page);
  return Result{*page * granule_ + off, false};
}

std::optional<uint64_t> AddressTranslator::table_lookup(const MacAddr& cn,
                                                        uint64_t cmem_addr) const {
  auto page = table_.lookup(key_of(cn, cmem_addr));
  if (!page) return std::nullopt;
  return *page * granule_ + cmem_addr % granule_;
}

uint64_t AddressTranslator::walk_addr(const MacAddr& cn, uint64_t cmem_addr) const {
  return table_.bucket_addr(key_of(cn, cmem_addr));
}

SimTime DramModel::defer_for_stall(SimTime t) const {
  if (cfg_.stall_period == 0) return t;
  if (t < cfg_.stall_phase) return t;
  SimTime off = (t - cfg_.stall_phase) % cfg_.stall_period;
  if (off < cfg_.stall_duration) return t + (cfg_.stall_duration - off);
  return t;
}

SimTime DramModel::schedule(uint64_t addr, SimTime ready) {
  unsigned b = bank_of(addr);
  SimTime start = std::max(ready, bank_free_[b]);
  start = defer_for_stall(start);
  SimTime done = start + cfg_.t_access;
  bank_free_[b] = done;
  accesses++;
  return done;
}

CacheLineData MemoryPool::read(uint64_t line_addr) const {
  auto it = lines_.find(line_addr);
  if (it == lines_.end()) return CacheLineData{};
  return it->second;
}

void MemoryPool::write(uint64_t line_addr, const CacheLineData& data) {
  lines_[line_addr] = data;
}

std::vector<std::pair<uint64_t, CacheLineData>> MemoryPool::snapshot() const {
  std::vector<std::pair<uint64_t, CacheLineData>> out(lines_.begin(), lines_.end());
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void MemoryPool::dump(std::ostream& os) const {
  for (const auto& [addr, data] : snapshot()) {
    uint8_t hdr[8];
    for (int i = 0; i < 8; i++) hdr[i] = static_cast<uint8_t>(addr >> (8 * i));
    os.write(reinterpret_cast<const char*>(hdr), 8);
    os.write(reinterpret_cast<const char*>(data.data()), 64);
  }
}

RxFifo::EnqueueResult RxFifo::enqueue(SimTime now) {
  if (occupancy_ >= cfg_.depth) {
    overruns_++;
    return {false, false};
  }
  occupancy_++;
  peak_ = std::max(peak_, occupancy_);
  bool emit = false;
  if (occupancy_ >= cfg_.pfc_threshold) {
    if (armed_) {
      emit = true;
      armed_ = false;
    } else if (now - last_pfc_ >= cfg_.pfc_min_gap) {
      emit = true;
    }
    if (emit) {
      last_pfc_ = now;
      pfc_ever_ = true;
    }
  }
  return {true, emit};
}

void RxFifo::dequeue() {
  occupancy_--;
  if (occupancy_ + cfg_.hysteresis <= cfg_.pfc_threshold) armed_ = true;
}

MnNode::MnNode(Sim& sim, Fabric& fabric, const MnConfig& cfg)
    : sim_(sim),
      fabric_(fabric),
      cfg_(cfg),
      gmm_(cfg.gmm, page_table_),
      translator_(page_table_, cfg.tlb_entries, cfg.gmm.granule_bytes),
      dram_(cfg.dram),
      fifo_(cfg.fifo) {
  fabric_.set_receiver(Fabric::Dir::CnToMn, [this](Delivery d) { on_delivery(std::move(d)); });
  fabric_.set_space_callback(Fabric::Dir::MnToCn, [this] { pump_egress(); });
}

void MnNode::on_delivery(Delivery d) {
  auto res = decode(*d.bytes);
  bool crc_ok = res.ok() && !d.corrupted;

  if (crc_ok) {
    const Frame& f = *res.frame;
    if (const auto* sn = std::get_if<SackNak>(&f)) {
      // CN reports a gap in the response stream: selective retransmit
      auto r = resp_retry_.tx_on_sack_nak(
          sn->flags & SackNak::kSack ? std::optional<SeqNum>(sn->sack_seq) : std::nullopt,
          sn->flags & SackNak::kNak ? std::optional<SeqNum>(sn->nak_seq) : std::nullopt,
          std::nullopt, sim_.now());
      for (auto& rt : r.retransmit) {
        FrameMeta meta;
        auto mit = resp_meta_.find(rt.seq);
        if (mit != resp_meta_.end()) meta = mit->second;
        meta.seq = rt.seq;
        stats_.response_retransmits++;
        egress_control_.emplace_back(rt.bytes, meta);
      }
      pump_egress();
      return;
    }
    if (!std::holds_alternative<ReadReq>(f) && !std::holds_alternative<WriteReq>(f))
      return;  // acks/pfc are not expected on this direction
  } else if (d.meta.command != 0x01 && d.meta.command != 0x02) {
    stats_.crc_errors++;  // corrupt control frame: nothing to recover here
    return;
  }

  auto enq = fifo_.enqueue(sim_.now());
  if (enq.emit_pfc) send_pfc();
  if (!enq.accepted) return;  // overrun, dropped; ARQ recovers

  RxItem item;
  item.crc_ok = crc_ok;
  if (crc_ok) item.frame = *res.frame;
  item.meta = d.meta;
  item.arrived = sim_.now();
  rx_queue_.push_back(std::move(item));
  pump_serve();
}

void MnNode::pump_serve() {
  if (serve_scheduled_ || rx_queue_.empty()) return;
  SimTime t = std::max(sim_.now(), serve_free_);
  t = dram_.defer_for_stall(t);
  serve_scheduled_ = true;
  sim_.schedule(t, "mn", "serve", [this] {
    serve_scheduled_ = false;
    RxItem item = std::move(rx_queue_.front());
    rx_queue_.pop_front();
    fifo_.dequeue();
    serve_free_ = sim_.now() + cfg_.serve_interval_ns;
    do_serve(std::move(item), sim_.now());
    pump_serve();
  });
}

void MnNode::do_serve(RxItem item, SimTime t) {
  if (!item.crc_ok) {
    stats_.crc_errors++;
    auto r = reorder_.on_frame(item.meta.seq, false, std::move(item));
    if (r.nak) pending_.pending_nak = r.nak;
    if (r.sack) pending_.pending_sack = r.sack;
  } else {
    SeqNum seq = std::holds_alternative<ReadReq>(item.frame)
                     ? std::get<ReadReq>(item.frame).seq
                     : std::get<WriteReq>(item.frame).seq;
    auto r = reorder_.on_frame(seq, true, std::move(item));
    switch (r.kind) {
      case ReorderBuffer<RxItem>::Kind::Delivered:
        for (auto& it : r.delivered) process_request(std::move(it), t);
        break;
      case ReorderBuffer<RxItem>::Kind::Stale: {
        // an acknowledged packet went missing: resend it from the retry buffer
        auto rit = resp_of_req_.find(seq);
        if (rit != resp_of_req_.end() && resp_retry_.contains(rit->second)) {
          auto gb = resp_retry_.tx_on_sack_nak(std::nullopt, rit->second, std::nullopt,
                                               sim_.now());
          for (auto& rt : gb.retransmit) {
            FrameMeta meta;
            auto mit = resp_meta_.find(rt.seq);
            if (mit != resp_meta_.end()) meta = mit->second;
            meta.seq = rt.seq;
            stats_.stale_fast_retransmits++;
            egress_control_.emplace_back(rt.bytes, meta);
          }
        } else {
          Ack a;
          a.src = cfg_.mac;
          a.dst = cn_mac_;
          a.cum_ack = reorder_.cum_ack();
          stats_.acks_sent++;
          emit_control(Frame{a});
        }
        break;
      }
      case ReorderBuffer<RxItem>::Kind::Duplicate:
        stats_.duplicates++;
        break;
      case ReorderBuffer<RxItem>::Kind::Overflow:
        stats_.reorder_overflows++;
        break;
      default:
        break;
    }
    if (r.nak) pending_.pending_nak = r.nak;
    if (r.sack) pending_.pending_sack = r.sack;
  }

  if (pending_.pending_nak && pending_.pending_sack) {
    if (stats_.requests_served > 0) pending_.pending_ack = reorder_.cum_ack();
    if (auto sn = compose_control(pending_)) {
      sn->src = cfg_.mac;
      sn->dst = cn_mac_;
      stats_.naks_sent++;
      emit_control(Frame{*sn});
      pending_ = {};
    }
  }
  pump_egress();
}

void MnNode::process_request(RxItem item, SimTime serve_time) {
  stats_.requests_served++;
  const bool is_read = std::holds_alternative<ReadReq>(item.frame);
  MacAddr src = is_read ? std::get<ReadReq>(item.frame).src : std::get<WriteReq>(item.frame).src;
  uint64_t cmem = is_read ? std::get<ReadReq>(item.frame).address
                          : std::get<WriteReq>(item.frame).address;
  SeqNum seq = is_read ? std::get<ReadReq>(item.frame).seq : std::get<WriteReq>(item.frame).seq;
  cn_mac_ = src;

  FrameMeta meta = item.meta;
  meta.t_mn_mac_rx = item.arrived;

  SimTime pipe_out = serve_time + cfg_.rx_pipeline_ns;

  auto tr = translator_.translate(src, cmem);
  if (!tr) {
    stats_.translation_faults++;
    return;  // dropped; diagnostic counter raised
  }
  SimTime walk_done = pipe_out;
  if (!tr->tlb_hit)
    walk_done = dram_.schedule(translator_.walk_addr(src, cmem), pipe_out);

  // the normal ACK goes back immediately
  Ack a;
  a.src = cfg_.mac;
  a.dst = src;
  a.cum_ack = reorder_.cum_ack();
  stats_.acks_sent++;
  emit_control(Frame{a});

  if (is_read) {
    stats_.reads++;
    const auto& rq = std::get<ReadReq>(item.frame);
    // data snapshots in request order; the bank only delays the response
    CacheLineData data = pool_.read(tr->mpmem_addr);
    SimTime done = dram_.schedule(tr->mpmem_addr, walk_done);
    meta.t_dram_done = done;
    ReadResp resp;
    resp.src = cfg_.mac;
    resp.dst = src;
    resp.req_seq = rq.seq;
    resp.cum_ack = reorder_.cum_ack();
    resp.address = rq.address;
    resp.data = data;
    sequence_response(seq, Frame{resp}, meta, done);
  } else {
    stats_.writes++;
    const auto& wq = std::get<WriteReq>(item.frame);
    pool_.write(tr->mpmem_addr, wq.data);
    dram_.schedule(tr->mpmem_addr, walk_done);  // bank stays busy for the write
    meta.t_dram_done = walk_done;               // posted: accepted at translation
    WriteResp resp;
    resp.src = cfg_.mac;
    resp.dst = src;
    resp.req_seq = wq.seq;
    resp.cum_ack = reorder_.cum_ack();
    resp.awid = wq.awid;
    sequence_response(seq, Frame{resp}, meta, walk_done);
  }
}

void MnNode::sequence_response(SeqNum req_seq, Frame f, FrameMeta meta, SimTime ready) {
  sequencer_[req_seq] = PendingResp{std::move(f), meta, ready};
  pump_sequencer();
}

void MnNode::pump_sequencer() {
  while (true) {
    auto it = sequencer_.find(next_emit_);
    if (it == sequencer_.end()) return;
    PendingResp& p = it->second;
    if (p.ready > sim_.now()) {
      if (!sequencer_scheduled_) {
        sequencer_scheduled_ = true;
        sim_.schedule(p.ready, "mn", "resp_ready", [this] {
          sequencer_scheduled_ = false;
          pump_sequencer();
        });
      }
      return;
    }

    SeqNum resp_seq = next_resp_seq_;
    next_resp_seq_ = static_cast<SeqNum>(next_resp_seq_ + 1);
    if (auto* rr = std::get_if<ReadResp>(&p.frame)) rr->resp_seq = resp_seq;
    if (auto* wr = std::get_if<WriteResp>(&p.frame)) wr->resp_seq = resp_seq;

    Bytes bytes = make_bytes(encode(p.frame));
    if (resp_retry_.full()) {
      // oldest-first eviction; the CN window guarantees it is no longer needed
      SeqNum old_resp = emitted_.front().first;
      SeqNum old_req = emitted_.front().second;
      emitted_.pop_front();
      resp_retry_.tx_on_ack(old_resp);
      resp_of_req_.erase(old_req);
      resp_meta_.erase(old_resp);
    }
    FrameMeta meta = p.meta;
    meta.seq = resp_seq;
    meta.command = command_of(p.frame);
    resp_retry_.tx_record(resp_seq, bytes, sim_.now());
    resp_of_req_[next_emit_] = resp_seq;
    resp_meta_[resp_seq] = meta;
    emitted_.emplace_back(resp_seq, next_emit_);

    // egress pipeline latency before the MAC sees the frame
    sim_.schedule_in(cfg_.tx_pipeline_ns, "mn", "resp_egress",
                     [this, bytes = std::move(bytes), meta]() mutable {
                       egress_data_.emplace_back(std::move(bytes), meta);
                       pump_egress();
                     });

    sequencer_.erase(it);
    next_emit_ = static_cast<SeqNum>(next_emit_ + 1);
  }
}

void MnNode::emit_control(Frame f) {
  FrameMeta meta;
  meta.command = command_of(f);
  egress_control_.emplace_back(make_bytes(encode(f)), meta);
  pump_egress();
}

void MnNode::pump_egress() {
  while (!egress_control_.empty() || !egress_data_.empty()) {
    auto& q = !egress_control_.empty() ? egress_control_ : egress_data_;
    if (fabric_.fifo_full(Fabric::Dir::MnToCn)) return;
    auto [bytes, meta] = q.front();
    meta.t_mn_mac_tx = sim_.now();
    if (!fabric_.try_submit(Fabric::Dir::MnToCn, bytes, meta)) return;
    q.pop_front();
  }
}

void MnNode::send_pfc() {
  Pfc f;
  f.src = cfg_.mac;
  f.dst = cn_mac_;
  f.pfc_class = 0;
  f.pause_quanta = cfg_.pfc_quanta;
  stats_.pfc_sent++;
  fabric_.pfc_transmit(f);
}

}  // namespace memfab
