#include "memfab/arq.hpp"

namespace memfab {

RetryBuffer::Entry* RetryBuffer::find(SeqNum seq) {
  if (!contains(seq)) return nullptr;
  return &entries_[seq_sub(seq, base_)];
}

bool RetryBuffer::contains(SeqNum seq) const {
  if (entries_.empty()) return false;
  uint16_t off = seq_sub(seq, base_);
  return off < entries_.size();
}

bool RetryBuffer::tx_record(SeqNum seq, Bytes frame, SimTime now) {
  if (full()) return false;
  if (seq != next_seq())
    throw std::logic_error("tx_record out of order: seq " + std::to_string(seq) +
                           " expected " + std::to_string(next_seq()));
  entries_.push_back(Entry{std::move(frame), now, false});
  return true;
}

size_t RetryBuffer::tx_on_ack(SeqNum cum_ack) {
  if (entries_.empty()) return 0;
  uint16_t off = seq_sub(cum_ack, base_);
  if (off >= entries_.size()) return 0;  // stale or beyond window: ignore
  size_t n = static_cast<size_t>(off) + 1;
  entries_.erase(entries_.begin(), entries_.begin() + n);
  base_ = static_cast<SeqNum>(base_ + n);
  return n;
}

RetryBuffer::SackNakResult RetryBuffer::tx_on_sack_nak(std::optional<SeqNum> sack,
                                                       std::optional<SeqNum> nak,
                                                       std::optional<SeqNum> cum_ack,
                                                       SimTime now) {
  SackNakResult res;
  if (cum_ack) tx_on_ack(*cum_ack);
  if ((sack && !contains(*sack)) || (nak && !contains(*nak))) {
    res.unknown_seq = true;
    return res;
  }
  if (sack) {
    // boundary: highest previously marked seq below the new mark, else the
    // cumulative base; resend every unmarked entry strictly in between
    std::optional<SeqNum> boundary;
    for (SeqNum s = base_; seq_less(s, *sack); s = static_cast<SeqNum>(s + 1)) {
      if (entries_[seq_sub(s, base_)].sack_marked) boundary = s;
    }
    SeqNum from = boundary ? static_cast<SeqNum>(*boundary + 1) : base_;
    for (SeqNum s = from; seq_less(s, *sack); s = static_cast<SeqNum>(s + 1)) {
      Entry& e = entries_[seq_sub(s, base_)];
      if (e.sack_marked) continue;
      e.first_sent_at = now;
      res.retransmit.push_back({s, e.bytes});
    }
    find(*sack)->sack_marked = true;
  }
  if (nak) {
    bool present = false;
    for (const auto& r : res.retransmit) present |= r.seq == *nak;
    if (!present) {
      Entry* e = find(*nak);
      e->first_sent_at = now;
      res.retransmit.push_back({*nak, e->bytes});
    }
  }
  return res;
}

std::vector<Retransmit> RetryBuffer::tx_on_timeout(SimTime now, SimTime rto) {
  std::vector<Retransmit> out;
  SeqNum s = base_;
  for (auto& e : entries_) {
    if (sat_add(e.first_sent_at, rto) <= now) {
      e.first_sent_at = now;
      out.push_back({s, e.bytes});
    }
    s = static_cast<SeqNum>(s + 1);
  }
  return out;
}

std::vector<Retransmit> RetryBuffer::tx_go_back_n(SeqNum from, SimTime now) {
  std::vector<Retransmit> out;
  if (!contains(from)) return out;
  for (SeqNum s = from; seq_sub(s, base_) < entries_.size(); s = static_cast<SeqNum>(s + 1)) {
    Entry& e = entries_[seq_sub(s, base_)];
    e.first_sent_at = now;
    out.push_back({s, e.bytes});
  }
  return out;
}

std::optional<SackNak> compose_control(const PendingControl& p) {
  if (!p.pending_nak || !p.pending_sack) return std::nullopt;
  SackNak f;
  f.flags = SackNak::kSack | SackNak::kNak;
  f.sack_seq = *p.pending_sack;
  f.nak_seq = *p.pending_nak;
  if (p.pending_ack) {
    f.flags |= SackNak::kAck;
    f.cum_ack = *p.pending_ack;
  }
  return f;
}

}  // namespace memfab
