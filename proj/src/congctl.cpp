#include "memfab/congctl.hpp"

#include <algorithm>

namespace memfab {

const char* to_string(Phase p) {
  switch (p) {
    case Phase::StableRunning: return "stable_running";
    case Phase::PfcResponse: return "pfc_response";
    case Phase::FastRecovery: return "fast_recovery";
    case Phase::FastRecoveryPfcResponse: return "fast_recovery_pfc_response";
    case Phase::IncrementExploration: return "increment_exploration";
    case Phase::IncrementGuessing: return "increment_guessing";
  }
  return "?";
}

CongCtl::CongCtl(const CcParams& p, SimTime now) : p_(p) {
  cr_ = p_.line_rate;
  tr_ = p_.line_rate;
  arm(now, p_.t4);  // stable dwell, then exploration
}

RateKbps CongCtl::halved(RateKbps r) const { return std::max(r / 2, p_.min_rate); }

bool CongCtl::on_pfc(SimTime now) {
  if (seen_pfc_ && now - last_pfc_at_ < p_.t2) return false;  // duplicate
  switch (phase_) {
    case Phase::StableRunning:
      tr_ = cr_;
      cr_ = halved(cr_);
      phase_ = Phase::PfcResponse;
      arm(now, p_.t1);
      break;
    case Phase::PfcResponse:
      cr_ = halved(cr_);
      arm(now, p_.t1);
      break;
    case Phase::FastRecovery:
      tr_ = cr_ * 7 / 8;
      cr_ = std::max(cr_ * 3 / 4, p_.min_rate);
      phase_ = Phase::FastRecoveryPfcResponse;
      arm(now, p_.t1);
      break;
    case Phase::FastRecoveryPfcResponse:
      cr_ = std::max(cr_ * 3 / 4, p_.min_rate);
      arm(now, p_.t1);
      break;
    case Phase::IncrementExploration:
      cr_ = std::max(cr_ - p_.increment, p_.min_rate);  // roll the increase back once
      phase_ = Phase::IncrementGuessing;
      arm(now, p_.t6);
      break;
    case Phase::IncrementGuessing:
      tr_ = cr_;
      cr_ = halved(cr_);
      phase_ = Phase::PfcResponse;
      arm(now, p_.t1);
      break;
  }
  last_pfc_at_ = now;
  seen_pfc_ = true;
  epoch_++;
  return true;
}

void CongCtl::on_deadline(SimTime now) {
  switch (phase_) {
    case Phase::PfcResponse:
    case Phase::FastRecoveryPfcResponse:
      phase_ = Phase::FastRecovery;
      speedups_ = 0;
      arm(now, p_.t3);
      break;
    case Phase::FastRecovery:
      cr_ = std::min((cr_ + tr_) / 2, p_.line_rate);
      speedups_++;
      if (speedups_ >= p_.speedup_count_max) {
        phase_ = Phase::StableRunning;
        arm(now, p_.t4);
      } else {
        arm(now, p_.t3);
      }
      break;
    case Phase::StableRunning:
      phase_ = Phase::IncrementExploration;
      arm(now, p_.t5);
      break;
    case Phase::IncrementExploration:
      if (cr_ < p_.line_rate) {
        cr_ = std::min(cr_ + p_.increment, p_.line_rate);
        arm(now, p_.t5);
      }
      if (cr_ >= p_.line_rate) {
        phase_ = Phase::StableRunning;
        arm(now, p_.t4);
      }
      break;
    case Phase::IncrementGuessing:
      // quiet for t6: the threshold has been found
      phase_ = Phase::StableRunning;
      arm(now, p_.t4);
      break;
  }
  epoch_++;
}

TokenBucket::TokenBucket(int64_t capacity_bits, RateKbps rate, SimTime now)
    : capacity_ubits_(capacity_bits * 1'000'000),
      tokens_ubits_(capacity_bits * 1'000'000),
      rate_(rate),
      last_refill_(now) {}

void TokenBucket::refill(SimTime now) {
  if (now <= last_refill_) return;
  SimTime dt = now - last_refill_;
  last_refill_ = now;
  if (rate_ <= 0) return;
  int64_t deficit = capacity_ubits_ - tokens_ubits_;
  // saturate instead of overflowing dt * rate
  if (dt >= static_cast<SimTime>(deficit / rate_) + 1) {
    tokens_ubits_ = capacity_ubits_;
  } else {
    tokens_ubits_ += static_cast<int64_t>(dt) * rate_;
    tokens_ubits_ = std::min(tokens_ubits_, capacity_ubits_);
  }
}

void TokenBucket::set_rate(SimTime now, RateKbps rate) {
  refill(now);
  rate_ = rate;
}

TokenBucket::Acquire TokenBucket::acquire(size_t bytes, SimTime now) {
  int64_t need = static_cast<int64_t>(bytes) * 8 * 1'000'000;
  if (need > capacity_ubits_)
    throw FrameLargerThanBucket("frame of " + std::to_string(bytes) +
                                " bytes exceeds bucket capacity");
  refill(now);
  if (tokens_ubits_ >= need) {
    tokens_ubits_ -= need;
    return {true, now};
  }
  int64_t deficit = need - tokens_ubits_;
  SimTime wait = rate_ > 0 ? static_cast<SimTime>((deficit + rate_ - 1) / rate_)
                           : kTimeMax - now;
  return {false, sat_add(now, wait)};
}

int64_t TokenBucket::tokens_bits(SimTime now) {
  refill(now);
  return tokens_ubits_ / 1'000'000;
}

}  // namespace memfab
