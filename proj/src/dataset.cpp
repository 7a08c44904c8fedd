#include "dataset.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

#include "hash.hpp"

namespace genlab {

void Dataset::append(Sample s) {
  if (capacity_ != 0 && items_.size() >= capacity_) {
    throw std::invalid_argument("dataset: capacity " + std::to_string(capacity_) +
                                " exceeded");
  }
  if (s.label < 0 || (class_count_ > 0 && s.label >= class_count_)) {
    throw std::invalid_argument("dataset: label " + std::to_string(s.label) +
                                " out of range [0," + std::to_string(class_count_) + ")");
  }
  items_.push_back(std::move(s));
}

std::vector<size_t> Dataset::class_counts() const {
  std::vector<size_t> counts(static_cast<size_t>(class_count_), 0);
  for (const Sample& s : items_) counts[static_cast<size_t>(s.label)]++;
  return counts;
}

uint64_t Dataset::content_hash() const {
  ByteHash h;
  h.update(static_cast<int64_t>(items_.size()));
  for (const Sample& s : items_) {
    h.update(s.x);
    h.update(static_cast<int64_t>(s.label));
    h.update(static_cast<int64_t>(s.provenance.kind));
    h.update(static_cast<int64_t>(s.provenance.mining_steps));
  }
  return h.digest();
}

namespace {
constexpr char kDatasetMagic[8] = {'G', 'L', 'D', 'S', '0', '0', '0', '1'};
}

// Layout (little-endian):
//   magic[8] | class_count i32 | capacity u64 | count u64 | dim u64
//   x column: count*dim doubles, row-major
//   y column: count i32
//   provenance kind column: count u8
//   provenance mining-step column: count i32
void Dataset::export_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dataset export: cannot open " + path);
  os.write(kDatasetMagic, sizeof(kDatasetMagic));
  int32_t kc = class_count_;
  uint64_t cap = capacity_, count = items_.size();
  uint64_t dim = items_.empty() ? 0 : items_[0].x.size();
  os.write(reinterpret_cast<const char*>(&kc), sizeof(kc));
  os.write(reinterpret_cast<const char*>(&cap), sizeof(cap));
  os.write(reinterpret_cast<const char*>(&count), sizeof(count));
  os.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
  for (const Sample& s : items_) {
    if (s.x.size() != dim) throw std::runtime_error("dataset export: ragged sample widths");
    os.write(reinterpret_cast<const char*>(s.x.data()),
             static_cast<std::streamsize>(dim * sizeof(double)));
  }
  for (const Sample& s : items_) {
    int32_t y = s.label;
    os.write(reinterpret_cast<const char*>(&y), sizeof(y));
  }
  for (const Sample& s : items_) {
    uint8_t k = static_cast<uint8_t>(s.provenance.kind);
    os.write(reinterpret_cast<const char*>(&k), sizeof(k));
  }
  for (const Sample& s : items_) {
    int32_t st = s.provenance.mining_steps;
    os.write(reinterpret_cast<const char*>(&st), sizeof(st));
  }
  if (!os) throw std::runtime_error("dataset export: write failure on " + path);
}

Dataset Dataset::import_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("dataset import: cannot open " + path);
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDatasetMagic, sizeof(magic)) != 0) {
    throw std::runtime_error("dataset import: bad magic or unsupported version in " + path);
  }
  int32_t kc = 0;
  uint64_t cap = 0, count = 0, dim = 0;
  is.read(reinterpret_cast<char*>(&kc), sizeof(kc));
  is.read(reinterpret_cast<char*>(&cap), sizeof(cap));
  is.read(reinterpret_cast<char*>(&count), sizeof(count));
  is.read(reinterpret_cast<char*>(&dim), sizeof(dim));
  Dataset d(kc, cap);
  d.items_.resize(count);
  for (auto& s : d.items_) {
    s.x.resize(dim);
    is.read(reinterpret_cast<char*>(s.x.data()),
            static_cast<std::streamsize>(dim * sizeof(double)));
  }
  for (auto& s : d.items_) {
    int32_t y;
    is.read(reinterpret_cast<char*>(&y), sizeof(y));
    s.label = y;
  }
  for (auto& s : d.items_) {
    uint8_t k;
    is.read(reinterpret_cast<char*>(&k), sizeof(k));
    s.provenance.kind = static_cast<SampleKind>(k);
  }
  for (auto& s : d.items_) {
    int32_t st;
    is.read(reinterpret_cast<char*>(&st), sizeof(st));
    s.provenance.mining_steps = st;
  }
  if (!is) throw std::runtime_error("dataset import: truncated file " + path);
  return d;
}

}  // namespace genlab
