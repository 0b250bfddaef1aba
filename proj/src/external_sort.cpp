#include "mobnet/external_sort.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <memory>
#include <queue>
#include <random>
#include <stdexcept>
#include <string>
#include <system_error>
#include <unordered_set>

#include <unistd.h>

namespace mobnet {

namespace {

std::size_t string_heap(const std::string& s) noexcept {
  // libstdc++ keeps up to 15 chars inline.
  return s.capacity() > 15 ? s.capacity() + 1 : 0;
}

std::filesystem::path make_work_dir(const std::filesystem::path& base) {
  static std::atomic<std::uint64_t> counter{0};
  const auto root = base.empty() ? std::filesystem::temp_directory_path() : base;
  std::filesystem::create_directories(root);
  std::random_device rd;
  for (int attempt = 0; attempt < 16; ++attempt) {
    auto dir = root / ("mobnet-sort-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter++) + "-" + std::to_string(rd() % 100000));
    if (std::filesystem::create_directory(dir)) return dir;
  }
  throw std::runtime_error("cannot create sort directory under " + root.string());
}

class RunReader {
public:
  explicit RunReader(const std::filesystem::path& path) : in_(path) {
    if (!in_) throw std::runtime_error("cannot reopen sort run " + path.string());
  }

  bool next(TweetRecord& out) {
    if (!std::getline(in_, line_)) return false;
    auto outcome = parse_record(line_);
    auto* rec = std::get_if<TweetRecord>(&outcome);
    if (!rec) throw std::runtime_error("corrupt sort run line: " + line_);
    out = std::move(*rec);
    return true;
  }

private:
  std::ifstream in_;
  std::string line_;
};

void write_run(const std::filesystem::path& path, const std::vector<TweetRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write sort run " + path.string());
  std::string chunk;
  chunk.reserve(1 << 20);
  for (const auto& r : records) {
    append_record(chunk, r);
    chunk.push_back('\n');
    if (chunk.size() >= (1 << 20) - 512) {
      out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
      chunk.clear();
    }
  }
  out.write(chunk.data(), static_cast<std::streamsize>(chunk.size()));
  if (!out) throw std::runtime_error("short write on sort run " + path.string());
}

// K-way merge of sorted runs; yields records in sort_order_less order.
class RunMerger {
public:
  explicit RunMerger(const std::vector<std::filesystem::path>& runs) {
    readers_.reserve(runs.size());
    for (const auto& p : runs) readers_.push_back(std::make_unique<RunReader>(p));
    heads_.resize(readers_.size());
    for (std::size_t i = 0; i < readers_.size(); ++i) {
      if (readers_[i]->next(heads_[i])) heap_.push(i);
    }
  }

  bool next(TweetRecord& out) {
    if (heap_.empty()) return false;
    const std::size_t i = heap_.top();
    heap_.pop();
    out = std::move(heads_[i]);
    if (readers_[i]->next(heads_[i])) heap_.push(i);
    return true;
  }

private:
  struct HeadGreater {
    const RunMerger* self;
    bool operator()(std::size_t a, std::size_t b) const {
      if (sort_order_less(self->heads_[b], self->heads_[a])) return true;
      if (sort_order_less(self->heads_[a], self->heads_[b])) return false;
      return a > b;
    }
  };

  std::vector<std::unique_ptr<RunReader>> readers_;
  std::vector<TweetRecord> heads_;
  std::priority_queue<std::size_t, std::vector<std::size_t>, HeadGreater> heap_{HeadGreater{this}};
};

}  // namespace

bool sort_order_less(const TweetRecord& a, const TweetRecord& b) {
  if (timeline_less(a, b)) return true;
  if (timeline_less(b, a)) return false;
  return format_record(a) < format_record(b);
}

std::size_t heap_bytes(const TweetRecord& r) noexcept {
  if (!r.place) return 0;
  return string_heap(r.place->place_id) + string_heap(r.place->name) +
         string_heap(r.place->country_code);
}

TimelineSorter::TimelineSorter(SortOptions options) : options_(std::move(options)) {
  if (options_.max_merge_fanin < 2) options_.max_merge_fanin = 2;
}

TimelineSorter::~TimelineSorter() {
  if (!work_dir_.empty()) {
    std::error_code ec;
    std::filesystem::remove_all(work_dir_, ec);
  }
}

std::size_t TimelineSorter::buffered_bytes() const noexcept {
  return buffer_.capacity() * sizeof(TweetRecord) + buffer_heap_bytes_;
}

// Grows the buffer within budget; false means the caller must spill first.
bool TimelineSorter::make_room(const TweetRecord& incoming) {
  const std::size_t budget = options_.max_memory_bytes;
  const std::size_t extra = heap_bytes(incoming);
  if (buffer_.size() < buffer_.capacity()) {
    return buffered_bytes() + extra <= budget;
  }
  const std::size_t slot = sizeof(TweetRecord);
  if (buffer_heap_bytes_ + extra > budget) return false;
  const std::size_t affordable = (budget - buffer_heap_bytes_ - extra) / slot;
  const std::size_t wanted = std::max<std::size_t>(1024, buffer_.capacity() * 2);
  const std::size_t new_cap = std::min(wanted, affordable);
  if (new_cap <= buffer_.size()) return false;
  buffer_.reserve(new_cap);
  return true;
}

void TimelineSorter::add(TweetRecord record) {
  if (finished_) throw std::logic_error("TimelineSorter::add after finish");
  ++stats_.records_in;
  if (!make_room(record)) {
    if (!buffer_.empty()) spill();
    if (!make_room(record)) {
      // A single record larger than the whole budget still has to go somewhere.
      buffer_.reserve(std::max<std::size_t>(buffer_.capacity(), 1));
    }
  }
  buffer_heap_bytes_ += heap_bytes(record);
  buffer_.push_back(std::move(record));
  stats_.peak_buffered_bytes = std::max(stats_.peak_buffered_bytes, buffered_bytes());
}

void TimelineSorter::spill() {
  if (work_dir_.empty()) work_dir_ = make_work_dir(options_.tmp_dir);
  std::sort(buffer_.begin(), buffer_.end(), sort_order_less);
  auto path = work_dir_ / ("run-" + std::to_string(next_run_id_++) + ".tsv");
  write_run(path, buffer_);
  runs_.push_back(std::move(path));
  ++stats_.runs_spilled;
  buffer_.clear();
  buffer_heap_bytes_ = 0;
}

std::filesystem::path TimelineSorter::merge_runs(const std::vector<std::filesystem::path>& runs) {
  auto path = work_dir_ / ("merge-" + std::to_string(next_run_id_++) + ".tsv");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write merged run " + path.string());
  RunMerger merger(runs);
  TweetRecord r;
  std::string line;
  while (merger.next(r)) {
    line.clear();
    append_record(line, r);
    line.push_back('\n');
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
  }
  if (!out) throw std::runtime_error("short write on merged run " + path.string());
  for (const auto& p : runs) std::filesystem::remove(p);
  return path;
}

void TimelineSorter::emit_sorted_stream(const std::function<bool(TweetRecord&)>& next,
                                        const std::function<void(UserTimeline&&)>& emit) {
  UserTimeline group;
  std::unordered_set<TweetId> seen;
  bool open = false;

  auto close = [&] {
    if (!open) return;
    stats_.records_out += group.records.size();
    ++stats_.users;
    emit(std::move(group));
    group = UserTimeline{};
    seen.clear();
    open = false;
  };

  TweetRecord r;
  while (next(r)) {
    if (open && r.user_id != group.user_id) close();
    if (!open) {
      group.user_id = r.user_id;
      open = true;
    }
    ++group.raw_record_count;
    if (!seen.insert(r.tweet_id).second) {
      ++stats_.duplicates_dropped;
      continue;
    }
    group.records.push_back(std::move(r));
  }
  close();
}

void TimelineSorter::finish(const std::function<void(UserTimeline&&)>& emit) {
  if (finished_) throw std::logic_error("TimelineSorter::finish called twice");
  finished_ = true;

  if (runs_.empty()) {
    std::sort(buffer_.begin(), buffer_.end(), sort_order_less);
    std::size_t i = 0;
    emit_sorted_stream(
        [&](TweetRecord& out) {
          if (i == buffer_.size()) return false;
          out = std::move(buffer_[i++]);
          return true;
        },
        emit);
    std::vector<TweetRecord>().swap(buffer_);
    buffer_heap_bytes_ = 0;
    return;
  }

  if (!buffer_.empty()) spill();
  std::vector<TweetRecord>().swap(buffer_);
  buffer_heap_bytes_ = 0;

  while (runs_.size() > options_.max_merge_fanin) {
    std::vector<std::filesystem::path> group(runs_.begin(),
                                             runs_.begin() + static_cast<std::ptrdiff_t>(options_.max_merge_fanin));
    runs_.erase(runs_.begin(), runs_.begin() + static_cast<std::ptrdiff_t>(options_.max_merge_fanin));
    runs_.push_back(merge_runs(group));
  }

  RunMerger merger(runs_);
  emit_sorted_stream([&](TweetRecord& out) { return merger.next(out); }, emit);
}

}  // namespace mobnet
