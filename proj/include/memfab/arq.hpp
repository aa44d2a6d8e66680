#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <unordered_map>
#include <vector>

#include "memfab/sim.hpp"
#include "memfab/wire.hpp"

namespace memfab {

// Encoded frames are shared between retry buffers and the link model.
using Bytes = std::shared_ptr<const std::vector<uint8_t>>;

inline Bytes make_bytes(std::vector<uint8_t> v) {
  return std::make_shared<const std::vector<uint8_t>>(std::move(v));
}

constexpr size_t kArqWindow = 512;  // bounded by the 512-deep async FIFOs

struct Retransmit {
  SeqNum seq;
  Bytes bytes;
};

// Transmit-side sliding window: frames are retained until released, SACK
// marks skip entries, and the window never exceeds 512 outstanding.
class RetryBuffer {
 public:
  explicit RetryBuffer(size_t capacity = kArqWindow) : capacity_(capacity) {}

  // seq must be the next unused sequence number. Returns false when the
  // window is full; the caller must stall rather than drop.
  bool tx_record(SeqNum seq, Bytes frame, SimTime now);

  // Releases every entry <= cum_ack. Stale or out-of-window acks release 0.
  size_t tx_on_ack(SeqNum cum_ack);

  struct SackNakResult {
    std::vector<Retransmit> retransmit;
    bool unknown_seq = false;  // sack/nak referenced a released entry
  };
  SackNakResult tx_on_sack_nak(std::optional<SeqNum> sack, std::optional<SeqNum> nak,
                               std::optional<SeqNum> cum_ack, SimTime now);

  std::vector<Retransmit> tx_on_timeout(SimTime now, SimTime rto);

  // Reference policy for the retransmission-economy comparison: everything
  // from `from` through the newest entry, SACK marks ignored.
  std::vector<Retransmit> tx_go_back_n(SeqNum from, SimTime now);

  bool full() const { return entries_.size() >= capacity_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  SeqNum base() const { return base_; }
  SeqNum next_seq() const { return static_cast<SeqNum>(base_ + entries_.size()); }
  bool contains(SeqNum seq) const;

 private:
  struct Entry {
    Bytes bytes;
    SimTime first_sent_at;
    bool sack_marked = false;
  };
  Entry* find(SeqNum seq);

  std::deque<Entry> entries_;
  SeqNum base_ = 0;
  size_t capacity_;
};

// Receive-side resequencer. Delivery is strictly in sequence order and each
// sequence number is delivered at most once.
template <typename T>
class ReorderBuffer {
 public:
  explicit ReorderBuffer(size_t capacity = kArqWindow) : capacity_(capacity) {}

  enum class Kind { Delivered, Held, Stale, Duplicate, CrcBad, Overflow };

  struct Result {
    Kind kind;
    std::vector<T> delivered;
    // Gap report, at most once per gap: the missing seq (or the corrupt
    // frame's seq) plus the newest held seq usable as a SACK mark.
    std::optional<SeqNum> nak;
    std::optional<SeqNum> sack;
  };

  Result on_frame(SeqNum seq, bool crc_ok, T v) {
    Result r{Kind::Held, {}, std::nullopt, std::nullopt};
    if (!crc_ok) {
      r.kind = Kind::CrcBad;
      r.nak = seq;
      if (auto s = newest_held()) r.sack = s;
      return r;
    }
    if (seq_less(seq, expected_)) {
      r.kind = Kind::Stale;
      return r;
    }
    if (seq == expected_) {
      r.kind = Kind::Delivered;
      r.delivered.push_back(std::move(v));
      advance();
      while (true) {
        auto it = held_.find(expected_);
        if (it == held_.end()) break;
        r.delivered.push_back(std::move(it->second));
        held_.erase(it);
        advance();
      }
      report_gap(r);
      return r;
    }
    // ahead of expected
    if (held_.count(seq)) {
      r.kind = Kind::Duplicate;
      return r;
    }
    if (held_.size() >= capacity_) {
      r.kind = Kind::Overflow;
      return r;
    }
    held_.emplace(seq, std::move(v));
    r.kind = Kind::Held;
    report_gap(r);
    return r;
  }

  SeqNum expected() const { return expected_; }
  size_t held() const { return held_.size(); }
  // highest in-order seq received; meaningful once anything was delivered
  SeqNum cum_ack() const { return static_cast<SeqNum>(expected_ - 1); }

 private:
  void advance() {
    expected_ = static_cast<SeqNum>(expected_ + 1);
  }

  std::optional<SeqNum> newest_held() const {
    std::optional<SeqNum> best;
    for (const auto& [s, _] : held_)
      if (!best || seq_less(*best, s)) best = s;
    return best;
  }

  void report_gap(Result& r) {
    if (held_.empty()) return;
    if (reported_ && *reported_ == expected_) return;
    reported_ = expected_;
    r.nak = expected_;
    r.sack = newest_held();
  }

  std::unordered_map<SeqNum, T> held_;
  SeqNum expected_ = 0;
  std::optional<SeqNum> reported_;
  size_t capacity_;
};

struct PendingControl {
  std::optional<SeqNum> pending_nak;
  std::optional<SeqNum> pending_sack;
  std::optional<SeqNum> pending_ack;
};

// A NAK is held back until a subsequent frame supplies a SACK mark; plain
// ACKs are never delayed, so the composed frame is SACK+NAK or SACK+NAK+ACK.
std::optional<SackNak> compose_control(const PendingControl& p);

}  // namespace memfab
