#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace genlab {

enum class SampleKind : uint8_t { kGeneratedRandom = 0, kGeneratedHsm = 1, kReal = 2 };

struct Provenance {
  SampleKind kind = SampleKind::kGeneratedRandom;
  int32_t mining_steps = 0;  // meaningful for kGeneratedHsm

  bool operator==(const Provenance&) const = default;
};

struct Sample {
  std::vector<double> x;
  int label = 0;
  Provenance provenance;
};

// Ordered, capacity-bounded sample collection. Capacity 0 means unbounded.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int class_count, size_t capacity)
      : class_count_(class_count), capacity_(capacity) {}

  void append(Sample s);
  size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  size_t capacity() const { return capacity_; }
  int class_count() const { return class_count_; }

  const Sample& operator[](size_t i) const { return items_[i]; }
  Sample& operator[](size_t i) { return items_[i]; }
  const std::vector<Sample>& items() const { return items_; }
  std::vector<Sample>& items() { return items_; }

  std::vector<size_t> class_counts() const;
  uint64_t content_hash() const;

  // Columnar binary layout, versioned; round-trips exactly.
  void export_file(const std::string& path) const;
  static Dataset import_file(const std::string& path);

 private:
  std::vector<Sample> items_;
  int class_count_ = 0;
  size_t capacity_ = 0;
};

}  // namespace genlab
