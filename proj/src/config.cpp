#include "shockmeet/config.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "shockmeet/error.hpp"

namespace shockmeet {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kBadInput: return "BadInput";
    case ErrorKind::kInconsistentMeeting: return "InconsistentMeeting";
    case ErrorKind::kMissingHint: return "MissingHint";
    case ErrorKind::kWindowTooSmall: return "WindowTooSmall";
    case ErrorKind::kTaggedCollision: return "TaggedCollision";
    case ErrorKind::kBoundaryReached: return "BoundaryReached";
    case ErrorKind::kRangeOutOfWindow: return "RangeOutOfWindow";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kOrderingFailed: return "OrderingFailed";
    case ErrorKind::kTooFewSamples: return "TooFewSamples";
    case ErrorKind::kObservableMissing: return "ObservableMissing";
    case ErrorKind::kSupportTooWide: return "SupportTooWide";
    case ErrorKind::kTooManyInvalid: return "TooManyInvalid";
    case ErrorKind::kIo: return "Io";
  }
  return "Unknown";
}

MulticlassConfig::MulticlassConfig(Window window, std::vector<Priority> priorities,
                                   std::vector<std::int64_t> tagged)
    : window_(window), priority_(std::move(priorities)), tagged_(std::move(tagged)) {
  if (window_.size() <= 0 || static_cast<std::int64_t>(priority_.size()) != window_.size()) {
    throw Error(ErrorKind::kBadInput, "priority vector does not match window");
  }
  if (tagged_.size() > kMaxLabels) throw Error(ErrorKind::kBadInput, "too many labels");
  for (std::size_t k = 0; k < tagged_.size(); ++k) {
    if (!window_.contains(tagged_[k])) {
      throw Error(ErrorKind::kWindowTooSmall, "tagged site outside window");
    }
    if (priority(tagged_[k]) != static_cast<Priority>(k + 1)) {
      throw Error(ErrorKind::kBadInput, "tagged site does not hold its label's priority");
    }
  }
}

std::vector<std::int64_t> MulticlassConfig::priority_counts() const {
  std::vector<std::int64_t> counts(static_cast<std::size_t>(labels()) + 2, 0);
  for (Priority p : priority_) {
    if (p == kHole) {
      ++counts.back();
    } else if (p <= labels()) {
      ++counts[p];
    }
  }
  return counts;
}

namespace {

constexpr std::array<char, 8> kMagic = {'S', 'M', 'C', 'K', 'P', 'T', '\0', '\0'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little, "checkpoint IO assumes little endian");

template <typename T>
void put(std::ostream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw Error(ErrorKind::kIo, "truncated checkpoint");
  return value;
}

}  // namespace

void write_checkpoint(std::ostream& out, const MulticlassConfig& config) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(config.labels()));
  put<std::int64_t>(out, config.window().lo);
  put<std::int64_t>(out, config.window().hi);
  for (std::int64_t x : config.tagged_sites()) put<std::int64_t>(out, x);

  std::vector<std::pair<Priority, std::uint32_t>> runs;
  for (Priority p : config.priorities()) {
    if (!runs.empty() && runs.back().first == p && runs.back().second < UINT32_MAX) {
      ++runs.back().second;
    } else {
      runs.emplace_back(p, 1);
    }
  }
  put<std::uint64_t>(out, runs.size());
  for (auto [p, len] : runs) {
    put<std::uint8_t>(out, p);
    put<std::uint32_t>(out, len);
  }
  if (!out) throw Error(ErrorKind::kIo, "checkpoint write failed");
}

MulticlassConfig read_checkpoint(std::istream& in) {
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw Error(ErrorKind::kIo, "not a checkpoint file");
  auto version = get<std::uint32_t>(in);
  if (version != kVersion) {
    throw Error(ErrorKind::kIo, "unsupported checkpoint version " + std::to_string(version));
  }
  auto labels = get<std::uint32_t>(in);
  if (labels > kMaxLabels) throw Error(ErrorKind::kIo, "corrupt label count");
  Window window{get<std::int64_t>(in), get<std::int64_t>(in)};
  if (window.size() <= 0) throw Error(ErrorKind::kIo, "corrupt window");
  std::vector<std::int64_t> tagged(labels);
  for (auto& x : tagged) x = get<std::int64_t>(in);

  auto run_count = get<std::uint64_t>(in);
  std::vector<Priority> priority;
  priority.reserve(static_cast<std::size_t>(window.size()));
  for (std::uint64_t r = 0; r < run_count; ++r) {
    auto p = get<std::uint8_t>(in);
    auto len = get<std::uint32_t>(in);
    if (static_cast<std::int64_t>(priority.size() + len) > window.size()) {
      throw Error(ErrorKind::kIo, "run lengths exceed window");
    }
    priority.insert(priority.end(), len, p);
  }
  return MulticlassConfig(window, std::move(priority), std::move(tagged));
}

void save_checkpoint(const std::filesystem::path& path, const MulticlassConfig& config) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  write_checkpoint(out, config);
}

MulticlassConfig load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace shockmeet
