#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "mobnet/ingest.hpp"

namespace mobnet {

/// One user's records in (timestamp, tweet_id) order.
struct UserTimeline {
  UserId user_id = 0;
  std::vector<TweetRecord> records;
  /// Records seen for this user before duplicate tweet ids were dropped.
  std::uint64_t raw_record_count = 0;
};

struct SortOptions {
  std::filesystem::path tmp_dir;  // empty: system temp directory
  std::size_t max_memory_bytes = std::size_t{512} << 20;
  /// Runs merged at once; more runs are pre-merged in a cascade.
  std::size_t max_merge_fanin = 128;
};

struct SortStats {
  std::uint64_t records_in = 0;
  std::uint64_t records_out = 0;
  std::uint64_t duplicates_dropped = 0;
  std::uint64_t users = 0;
  std::uint64_t runs_spilled = 0;
  std::size_t peak_buffered_bytes = 0;
};

/// Heap footprint charged to the sort buffer for one record, excluding the
/// record's slot in the buffer itself.
std::size_t heap_bytes(const TweetRecord& r) noexcept;

/// Groups records by user and orders each group chronologically, spilling
/// sorted runs to disk whenever the buffer would exceed the memory budget.
/// Output is identical whether or not anything was spilled: users ascend by
/// id, records ascend by (timestamp, tweet_id), and the first record of each
/// repeated tweet id wins.
class TimelineSorter {
public:
  explicit TimelineSorter(SortOptions options = {});
  ~TimelineSorter();
  TimelineSorter(const TimelineSorter&) = delete;
  TimelineSorter& operator=(const TimelineSorter&) = delete;

  void add(TweetRecord record);

  /// Emits every user group exactly once. May be called only once.
  void finish(const std::function<void(UserTimeline&&)>& emit);

  const SortStats& stats() const noexcept { return stats_; }

private:
  std::size_t buffered_bytes() const noexcept;
  bool make_room(const TweetRecord& incoming);
  void spill();
  std::filesystem::path merge_runs(const std::vector<std::filesystem::path>& runs);
  void emit_sorted_stream(const std::function<bool(TweetRecord&)>& next,
                          const std::function<void(UserTimeline&&)>& emit);

  SortOptions options_;
  std::filesystem::path work_dir_;
  std::vector<TweetRecord> buffer_;
  std::size_t buffer_heap_bytes_ = 0;
  std::vector<std::filesystem::path> runs_;
  std::uint64_t next_run_id_ = 0;
  SortStats stats_;
  bool finished_ = false;
};

/// Full record order used for sorting, with a content tie-break so records
/// that share (user, timestamp, tweet id) still order deterministically.
bool sort_order_less(const TweetRecord& a, const TweetRecord& b);

}  // namespace mobnet
