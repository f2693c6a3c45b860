#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

namespace shockmeet {

/// Closed integer interval of lattice sites.
struct Window {
  std::int64_t lo = 0;
  std::int64_t hi = -1;

  std::int64_t size() const { return hi - lo + 1; }
  bool contains(std::int64_t x) const { return lo <= x && x <= hi; }
  bool operator==(const Window&) const = default;
};

using Priority = std::uint8_t;

/// Lowest priority; compares greater than every particle class.
inline constexpr Priority kHole = 255;
inline constexpr int kMaxLabels = 64;

/// The coupled configurations sigma^0..sigma^n on a finite window, encoded by
/// one priority per site: sigma^k(x) = 1{priority(x) <= k}, so the priority-k
/// sites are exactly the xi^k discrepancies.
class MulticlassConfig {
 public:
  MulticlassConfig() = default;
  MulticlassConfig(Window window, std::vector<Priority> priority,
                   std::vector<std::int64_t> tagged);

  const Window& window() const { return window_; }
  int labels() const { return static_cast<int>(tagged_.size()); }

  Priority priority(std::int64_t x) const { return priority_[index(x)]; }
  void set_priority(std::int64_t x, Priority p) { priority_[index(x)] = p; }
  std::span<const Priority> priorities() const { return priority_; }
  std::span<Priority> priorities() { return priority_; }

  /// sigma^k(x)
  bool occupied(std::int64_t x, int k) const { return priority(x) <= k; }

  /// Current site of the tagged label-k particle, k = 1..n.
  std::int64_t tagged(int k) const { return tagged_[k - 1]; }
  void set_tagged(int k, std::int64_t x) { tagged_[k - 1] = x; }
  const std::vector<std::int64_t>& tagged_sites() const { return tagged_; }

  /// Number of sites holding each priority value, HOLE last (index labels()+1).
  std::vector<std::int64_t> priority_counts() const;

  bool operator==(const MulticlassConfig&) const = default;

 private:
  std::size_t index(std::int64_t x) const { return static_cast<std::size_t>(x - window_.lo); }

  Window window_;
  std::vector<Priority> priority_;
  std::vector<std::int64_t> tagged_;
};

// Checkpoint format (little endian):
//   "SMCKPT\0\0"  magic, 8 bytes
//   u32 version (=1), u32 label count n
//   i64 window.lo, i64 window.hi
//   n x i64 tagged sites
//   u64 run count, then runs of (u8 priority, u32 length)
void write_checkpoint(std::ostream& out, const MulticlassConfig& config);
MulticlassConfig read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const MulticlassConfig& config);
MulticlassConfig load_checkpoint(const std::filesystem::path& path);

}  // namespace shockmeet
