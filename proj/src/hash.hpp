#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>
#include <vector>

namespace genlab {

// Incremental FNV-1a over raw bytes; used for parameter/statistics purity
// checks and dataset fingerprints.
class ByteHash {
 public:
  void update(const void* data, size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h_ ^= p[i];
      h_ *= 0x100000001b3ull;
    }
  }
  void update(const std::vector<double>& v) {
    if (!v.empty()) update(v.data(), v.size() * sizeof(double));
  }
  void update(double x) { update(&x, sizeof(x)); }
  void update(int64_t x) { update(&x, sizeof(x)); }
  void update(std::string_view s) { update(s.data(), s.size()); }
  uint64_t digest() const { return h_; }

 private:
  uint64_t h_ = 0xcbf29ce484222325ull;
};

}  // namespace genlab
