#include "memfab/crc32.hpp"

namespace memfab {

uint32_t crc32_bitwise(uint32_t crc, const uint8_t* data, size_t len) {
  uint32_t c = ~crc;
  for (size_t i = 0; i < len; i++) {
    c ^= data[i];
    for (int k = 0; k < 8; k++) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
  }
  return ~c;
}

namespace {

struct Tables {
  uint32_t t[8][256];
  Tables() {
    for (uint32_t i = 0; i < 256; i++) {
      uint32_t c = i;
      for (int k = 0; k < 8; k++) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[0][i] = c;
    }
    for (uint32_t i = 0; i < 256; i++)
      for (int j = 1; j < 8; j++)
        t[j][i] = (t[j - 1][i] >> 8) ^ t[0][t[j - 1][i] & 0xFF];
  }
};

const Tables& tables() {
  static const Tables tbl;
  return tbl;
}

}  // namespace

// Raw-state update (no init/final inversion); shared with the SIMD tail path.
uint32_t crc32_scalar_raw(uint32_t c, const uint8_t* data, size_t len) {
  const auto& t = tables().t;
  while (len >= 8) {
    c ^= static_cast<uint32_t>(data[0]) | (static_cast<uint32_t>(data[1]) << 8) |
         (static_cast<uint32_t>(data[2]) << 16) | (static_cast<uint32_t>(data[3]) << 24);
    uint32_t hi = static_cast<uint32_t>(data[4]) | (static_cast<uint32_t>(data[5]) << 8) |
                  (static_cast<uint32_t>(data[6]) << 16) | (static_cast<uint32_t>(data[7]) << 24);
    c = t[7][c & 0xFF] ^ t[6][(c >> 8) & 0xFF] ^ t[5][(c >> 16) & 0xFF] ^ t[4][c >> 24] ^
        t[3][hi & 0xFF] ^ t[2][(hi >> 8) & 0xFF] ^ t[1][(hi >> 16) & 0xFF] ^ t[0][hi >> 24];
    data += 8;
    len -= 8;
  }
  while (len--) c = t[0][(c ^ *data++) & 0xFF] ^ (c >> 8);
  return c;
}

uint32_t crc32_scalar(uint32_t crc, const uint8_t* data, size_t len) {
  return ~crc32_scalar_raw(~crc, data, len);
}

uint32_t crc32(const uint8_t* data, size_t len) {
  static const bool use_simd = crc32_simd_available();
  if (use_simd && len >= 64) return crc32_pclmul(0, data, len);
  return crc32_scalar(0, data, len);
}

}  // namespace memfab
