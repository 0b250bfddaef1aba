#include "mobnet/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "text_util.hpp"

namespace mobnet {

namespace {

constexpr std::size_t kRecordFieldCount = 13;
constexpr std::size_t kParseBatchLines = 1 << 15;

ParseError malformed(std::string detail) { return {RejectReason::kMalformed, std::move(detail)}; }

bool valid_country_code(std::string_view cc) {
  if (cc.empty()) return true;
  return cc.size() == 2 && std::isupper(static_cast<unsigned char>(cc[0])) &&
         std::isupper(static_cast<unsigned char>(cc[1]));
}

std::optional<int> digits(std::string_view s, std::size_t pos, std::size_t n) {
  if (pos + n > s.size()) return std::nullopt;
  int v = 0;
  for (std::size_t i = pos; i < pos + n; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    v = v * 10 + (s[i] - '0');
  }
  return v;
}

}  // namespace

std::string_view to_string(PlaceType t) noexcept {
  switch (t) {
    case PlaceType::kCountry: return "country";
    case PlaceType::kAdmin: return "admin";
    case PlaceType::kCity: return "city";
    case PlaceType::kNeighborhood: return "neighborhood";
    case PlaceType::kPoi: return "poi";
  }
  return "poi";
}

std::optional<PlaceType> parse_place_type(std::string_view s) noexcept {
  if (s == "country") return PlaceType::kCountry;
  if (s == "admin") return PlaceType::kAdmin;
  if (s == "city") return PlaceType::kCity;
  if (s == "neighborhood") return PlaceType::kNeighborhood;
  if (s == "poi") return PlaceType::kPoi;
  return std::nullopt;
}

std::optional<Timestamp> parse_rfc3339(std::string_view s) noexcept {
  using namespace std::chrono;
  // YYYY-MM-DDTHH:MM:SS
  if (s.size() < 20) return std::nullopt;
  const auto year = digits(s, 0, 4);
  const auto month = digits(s, 5, 2);
  const auto day = digits(s, 8, 2);
  const auto hour = digits(s, 11, 2);
  const auto minute = digits(s, 14, 2);
  const auto second = digits(s, 17, 2);
  if (!year || !month || !day || !hour || !minute || !second) return std::nullopt;
  if (s[4] != '-' || s[7] != '-' || s[13] != ':' || s[16] != ':') return std::nullopt;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
  if (*hour > 23 || *minute > 59 || *second > 60) return std::nullopt;

  const year_month_day ymd{std::chrono::year{*year}, std::chrono::month{static_cast<unsigned>(*month)},
                           std::chrono::day{static_cast<unsigned>(*day)}};
  if (!ymd.ok()) return std::nullopt;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t frac_start = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == frac_start) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;

  std::int64_t offset_s = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    if (pos + 1 != s.size()) return std::nullopt;
  } else if (s[pos] == '+' || s[pos] == '-') {
    const auto oh = digits(s, pos + 1, 2);
    const auto om = digits(s, pos + 4, 2);
    if (!oh || !om || pos + 6 != s.size() || s[pos + 3] != ':' || *oh > 23 || *om > 59) {
      return std::nullopt;
    }
    offset_s = (*oh * 3600 + *om * 60) * (s[pos] == '+' ? 1 : -1);
  } else {
    return std::nullopt;
  }

  const std::int64_t days = sys_days{ymd}.time_since_epoch().count();
  return days * 86400 + *hour * 3600 + *minute * 60 + *second - offset_s;
}

ParseOutcome parse_record(std::string_view line, TimestampFormat format) {
  thread_local std::vector<std::string_view> f;
  detail::split(detail::strip_cr(line), '\t', f);
  if (f.size() != kRecordFieldCount) {
    return malformed("expected 13 fields, got " + std::to_string(f.size()));
  }

  TweetRecord r;
  const auto tweet_id = detail::parse_number<TweetId>(f[0]);
  const auto user_id = detail::parse_number<UserId>(f[1]);
  if (!tweet_id || !user_id) return malformed("bad tweet or user id");
  r.tweet_id = *tweet_id;
  r.user_id = *user_id;

  const auto ts = format == TimestampFormat::kEpochSeconds ? detail::parse_number<Timestamp>(f[2])
                                                           : parse_rfc3339(f[2]);
  if (!ts) return malformed("bad timestamp");
  r.timestamp = *ts;

  if (!f[3].empty() || !f[4].empty()) {
    const auto lat = detail::parse_number<double>(f[3]);
    const auto lon = detail::parse_number<double>(f[4]);
    if (!lat || !lon || !GeoPoint::valid(*lat, *lon)) return malformed("bad coordinates");
    r.point = GeoPoint(*lat, *lon);
  }

  if (!f[5].empty()) {
    const auto type = parse_place_type(f[7]);
    if (!type) return malformed("bad place type");
    const auto s = detail::parse_number<double>(f[8]);
    const auto w = detail::parse_number<double>(f[9]);
    const auto n = detail::parse_number<double>(f[10]);
    const auto e = detail::parse_number<double>(f[11]);
    if (!s || !w || !n || !e || !BoundingBox::valid(*s, *w, *n, *e)) {
      return malformed("bad place bbox");
    }
    if (!valid_country_code(f[12])) return malformed("bad country code");
    r.place = Place{std::string(f[5]), std::string(f[6]), *type, BoundingBox(*s, *w, *n, *e),
                    std::string(f[12])};
  } else if (std::any_of(f.begin() + 6, f.end(), [](std::string_view v) { return !v.empty(); })) {
    return malformed("place columns without place id");
  }

  if (!r.point && !r.place) return ParseError{RejectReason::kNoLocation, "no coordinates or place"};
  return r;
}

void append_record(std::string& out, const TweetRecord& r) {
  detail::append_integer(out, r.tweet_id);
  out.push_back('\t');
  detail::append_integer(out, r.user_id);
  out.push_back('\t');
  detail::append_integer(out, r.timestamp);
  out.push_back('\t');
  if (r.point) {
    detail::append_double(out, r.point->lat());
    out.push_back('\t');
    detail::append_double(out, r.point->lon());
  } else {
    out.push_back('\t');
  }
  out.push_back('\t');
  if (r.place) {
    const Place& p = *r.place;
    out += p.place_id;
    out.push_back('\t');
    out += p.name;
    out.push_back('\t');
    out += to_string(p.type);
    for (double v : {p.bbox.south(), p.bbox.west(), p.bbox.north(), p.bbox.east()}) {
      out.push_back('\t');
      detail::append_double(out, v);
    }
    out.push_back('\t');
    out += p.country_code;
  } else {
    out.append(7, '\t');
  }
}

std::string format_record(const TweetRecord& r) {
  std::string s;
  append_record(s, r);
  return s;
}

IngestStats& IngestStats::operator+=(const IngestStats& o) {
  lines += o.lines;
  accepted += o.accepted;
  rejected_no_location += o.rejected_no_location;
  rejected_malformed += o.rejected_malformed;
  duplicates_dropped += o.duplicates_dropped;
  return *this;
}

IngestStats read_records(const std::vector<std::filesystem::path>& inputs, TimestampFormat format,
                         unsigned threads, const std::function<void(TweetRecord&&)>& sink) {
  IngestStats stats;
  threads = std::max(1u, threads);
  std::vector<std::string> batch;
  std::vector<ParseOutcome> outcomes;

  auto flush = [&] {
    outcomes.resize(batch.size());
    const std::size_t n = batch.size();
    auto parse_range = [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) outcomes[i] = parse_record(batch[i], format);
    };
    if (threads == 1 || n < 1024) {
      parse_range(0, n);
    } else {
      std::vector<std::jthread> workers;
      const std::size_t chunk = (n + threads - 1) / threads;
      for (std::size_t lo = 0; lo < n; lo += chunk) {
        workers.emplace_back(parse_range, lo, std::min(n, lo + chunk));
      }
    }
    for (auto& o : outcomes) {
      if (auto* rec = std::get_if<TweetRecord>(&o)) {
        ++stats.accepted;
        sink(std::move(*rec));
      } else if (std::get<ParseError>(o).reason == RejectReason::kNoLocation) {
        ++stats.rejected_no_location;
      } else {
        ++stats.rejected_malformed;
      }
    }
    batch.clear();
  };

  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open input: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
      if (detail::strip_cr(line).empty()) continue;
      ++stats.lines;
      batch.push_back(std::move(line));
      if (batch.size() >= kParseBatchLines) flush();
    }
  }
  flush();
  return stats;
}

}  // namespace mobnet
