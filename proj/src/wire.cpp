#include "memfab/wire.hpp"

#include <cstdio>
#include <cstring>

#include "memfab/crc32.hpp"

namespace memfab {

namespace {

constexpr uint8_t kCmdReadReq = 0x01;
constexpr uint8_t kCmdWriteReq = 0x02;
constexpr uint8_t kCmdReadResp = 0x03;
constexpr uint8_t kCmdWriteResp = 0x04;
constexpr uint8_t kCmdAck = 0x05;
constexpr uint8_t kCmdSackNak = 0x06;
constexpr uint8_t kCmdPfc = 0x07;

constexpr uint64_t kAddressMax = (1ull << 48) - 1;

class Writer {
 public:
  explicit Writer(size_t reserve) { buf_.reserve(reserve); }
  void u8(uint8_t v) { buf_.push_back(v); }
  void u16(uint16_t v) {
    buf_.push_back(static_cast<uint8_t>(v >> 8));
    buf_.push_back(static_cast<uint8_t>(v));
  }
  void u48(uint64_t v) {
    for (int shift = 40; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<uint8_t>(v >> shift));
  }
  void mac(const MacAddr& m) { buf_.insert(buf_.end(), m.begin(), m.end()); }
  void bytes(const CacheLineData& d) { buf_.insert(buf_.end(), d.begin(), d.end()); }
  std::vector<uint8_t> finish() {
    uint32_t crc = crc32(buf_.data(), buf_.size());
    for (int shift = 24; shift >= 0; shift -= 8)
      buf_.push_back(static_cast<uint8_t>(crc >> shift));
    return std::move(buf_);
  }

 private:
  std::vector<uint8_t> buf_;
};

class Reader {
 public:
  explicit Reader(std::span<const uint8_t> s) : s_(s) {}
  uint8_t u8() { return s_[pos_++]; }
  uint16_t u16() {
    uint16_t v = static_cast<uint16_t>((s_[pos_] << 8) | s_[pos_ + 1]);
    pos_ += 2;
    return v;
  }
  uint64_t u48() {
    uint64_t v = 0;
    for (int i = 0; i < 6; i++) v = (v << 8) | s_[pos_++];
    return v;
  }
  MacAddr mac() {
    MacAddr m;
    std::memcpy(m.data(), s_.data() + pos_, 6);
    pos_ += 6;
    return m;
  }
  CacheLineData line() {
    CacheLineData d;
    std::memcpy(d.data(), s_.data() + pos_, 64);
    pos_ += 64;
    return d;
  }

 private:
  std::span<const uint8_t> s_;
  size_t pos_ = 0;
};

void put_header(Writer& w, const MacAddr& dst, const MacAddr& src, uint8_t cmd) {
  w.mac(dst);
  w.mac(src);
  w.u16(kEtherType);
  w.u8(cmd);
}

void check_address(uint64_t addr) {
  if (addr > kAddressMax)
    throw FieldOverflow("address exceeds 48 bits: " + std::to_string(addr));
}

}  // namespace

std::string mac_to_string(const MacAddr& m) {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", m[0], m[1], m[2],
                m[3], m[4], m[5]);
  return buf;
}

uint8_t command_of(const Frame& f) {
  return static_cast<uint8_t>(f.index() + 1);
}

const char* kind_of(const Frame& f) {
  static const char* names[] = {"read_req", "write_req", "read_resp",
                                "write_resp", "ack", "sack_nak", "pfc"};
  return names[f.index()];
}

size_t payload_length_of_command(uint8_t command) {
  switch (command) {
    case kCmdReadReq: return 25;
    case kCmdWriteReq: return 89;
    case kCmdReadResp: return 91;
    case kCmdWriteResp: return 23;
    case kCmdAck: return 17;
    case kCmdSackNak: return 22;
    case kCmdPfc: return 18;
    default: return 0;
  }
}

size_t payload_length(const Frame& f) {
  return payload_length_of_command(command_of(f));
}

const char* to_string(DecodeError e) {
  switch (e) {
    case DecodeError::CrcError: return "crc_error";
    case DecodeError::UnknownCommand: return "unknown_command";
    case DecodeError::Truncated: return "truncated";
  }
  return "?";
}

std::vector<uint8_t> encode(const Frame& f) {
  Writer w(encoded_length(f));
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        put_header(w, v.dst, v.src, command_of(f));
        if constexpr (std::is_same_v<T, ReadReq>) {
          check_address(v.address);
          w.u16(v.seq);
          w.u16(v.arid);
          w.u48(v.address);
        } else if constexpr (std::is_same_v<T, WriteReq>) {
          check_address(v.address);
          w.u16(v.seq);
          w.u16(v.awid);
          w.u48(v.address);
          w.bytes(v.data);
        } else if constexpr (std::is_same_v<T, ReadResp>) {
          check_address(v.address);
          w.u16(v.resp_seq);
          w.u16(v.req_seq);
          w.u16(v.cum_ack);
          w.u48(v.address);
          w.bytes(v.data);
        } else if constexpr (std::is_same_v<T, WriteResp>) {
          w.u16(v.resp_seq);
          w.u16(v.req_seq);
          w.u16(v.cum_ack);
          w.u16(v.awid);
        } else if constexpr (std::is_same_v<T, Ack>) {
          w.u16(v.cum_ack);
        } else if constexpr (std::is_same_v<T, SackNak>) {
          w.u8(v.flags);
          w.u16(v.sack_seq);
          w.u16(v.nak_seq);
          w.u16(v.cum_ack);
        } else if constexpr (std::is_same_v<T, Pfc>) {
          w.u8(v.pfc_class);
          w.u16(v.pause_quanta);
        }
      },
      f);
  return w.finish();
}

DecodeResult decode(std::span<const uint8_t> bytes) {
  // Smallest legal frame is Ack: 17 payload + 4 CRC.
  if (bytes.size() < kEthHeaderBytes + 1 + kCrcBytes)
    return {std::nullopt, DecodeError::Truncated};

  size_t body = bytes.size() - kCrcBytes;
  uint32_t want = 0;
  for (size_t i = 0; i < 4; i++) want = (want << 8) | bytes[body + i];
  if (crc32(bytes.data(), body) != want) return {std::nullopt, DecodeError::CrcError};

  uint8_t cmd = bytes[kEthHeaderBytes];
  size_t expect = payload_length_of_command(cmd);
  if (expect == 0) return {std::nullopt, DecodeError::UnknownCommand};
  if (body != expect) return {std::nullopt, DecodeError::Truncated};

  Reader r(bytes);
  MacAddr dst = r.mac();
  MacAddr src = r.mac();
  r.u16();  // ethertype, not checked on receive
  r.u8();   // command, already known

  switch (cmd) {
    case kCmdReadReq: {
      ReadReq v;
      v.dst = dst; v.src = src;
      v.seq = r.u16(); v.arid = r.u16(); v.address = r.u48();
      return {Frame{v}, {}};
    }
    case kCmdWriteReq: {
      WriteReq v;
      v.dst = dst; v.src = src;
      v.seq = r.u16(); v.awid = r.u16(); v.address = r.u48(); v.data = r.line();
      return {Frame{v}, {}};
    }
    case kCmdReadResp: {
      ReadResp v;
      v.dst = dst; v.src = src;
      v.resp_seq = r.u16(); v.req_seq = r.u16(); v.cum_ack = r.u16();
      v.address = r.u48(); v.data = r.line();
      return {Frame{v}, {}};
    }
    case kCmdWriteResp: {
      WriteResp v;
      v.dst = dst; v.src = src;
      v.resp_seq = r.u16(); v.req_seq = r.u16(); v.cum_ack = r.u16(); v.awid = r.u16();
      return {Frame{v}, {}};
    }
    case kCmdAck: {
      Ack v;
      v.dst = dst; v.src = src;
      v.cum_ack = r.u16();
      return {Frame{v}, {}};
    }
    case kCmdSackNak: {
      SackNak v;
      v.dst = dst; v.src = src;
      v.flags = r.u8(); v.sack_seq = r.u16(); v.nak_seq = r.u16(); v.cum_ack = r.u16();
      return {Frame{v}, {}};
    }
    case kCmdPfc: {
      Pfc v;
      v.dst = dst; v.src = src;
      v.pfc_class = r.u8(); v.pause_quanta = r.u16();
      return {Frame{v}, {}};
    }
  }
  return {std::nullopt, DecodeError::UnknownCommand};
}

}  // namespace memfab
