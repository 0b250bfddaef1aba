#include "mobnet/synthetic.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <stdexcept>

#include "text_util.hpp"

namespace mobnet {

namespace {

struct CountrySeed {
  const char* code;
  const char* name;
  const char* continent;
  double lat;
  double lon;
  double spread_deg;
  std::uint64_t population;
};

// Anchors are rough geographic centres; spreads keep cities inside a plausible extent.
constexpr std::array<CountrySeed, 26> kCountries = {{
    {"US", "United States", "NA", 39.8, -98.6, 9.0, 327167434},
    {"CA", "Canada", "NA", 50.0, -100.0, 6.0, 37058856},
    {"MX", "Mexico", "NA", 22.0, -101.0, 5.0, 126190788},
    {"BR", "Brazil", "SA", -12.0, -49.0, 7.0, 209469333},
    {"AR", "Argentina", "SA", -35.0, -63.0, 5.0, 44494502},
    {"CL", "Chile", "SA", -33.0, -70.8, 2.0, 18729160},
    {"GB", "United Kingdom", "EU", 53.0, -1.8, 1.8, 66488991},
    {"ES", "Spain", "EU", 40.2, -3.7, 2.5, 46723749},
    {"FR", "France", "EU", 46.5, 2.4, 2.5, 66987244},
    {"DE", "Germany", "EU", 51.0, 10.3, 2.2, 82927922},
    {"IT", "Italy", "EU", 42.5, 12.6, 2.2, 60431283},
    {"PL", "Poland", "EU", 52.0, 19.3, 2.0, 37978548},
    {"SE", "Sweden", "EU", 60.5, 16.0, 3.0, 10183175},
    {"ZA", "South Africa", "AF", -29.0, 25.0, 4.0, 57779622},
    {"BW", "Botswana", "AF", -22.3, 24.7, 2.5, 2254126},
    {"NG", "Nigeria", "AF", 9.0, 8.5, 3.5, 195874740},
    {"KE", "Kenya", "AF", 0.2, 37.9, 2.5, 51393010},
    {"EG", "Egypt", "AF", 27.0, 30.5, 3.0, 98423595},
    {"IN", "India", "AS", 22.0, 79.0, 7.0, 1352617328},
    {"ID", "Indonesia", "AS", -3.0, 112.0, 6.0, 267663435},
    {"MY", "Malaysia", "AS", 3.5, 102.0, 2.0, 31528585},
    {"JP", "Japan", "AS", 36.0, 138.0, 3.0, 126529100},
    {"QA", "Qatar", "AS", 25.35, 51.2, 0.4, 2781677},
    {"AU", "Australia", "OC", -27.0, 135.0, 8.0, 24992369},
    {"NZ", "New Zealand", "OC", -41.0, 174.0, 2.5, 4885500},
    {"FJ", "Fiji", "OC", -17.5, 179.4, 1.2, 883483},
}};

constexpr int kCitiesPerCountry = 40;
constexpr int kVillagesPerCountry = 15;
constexpr int kFeaturesPerCountry = 25;
constexpr int kNeighborhoodCities = 10;
constexpr GeonameId kFirstGeonameId = 1000;
constexpr Timestamp kCorpusStart = 1325376000;  // 2012-01-01
constexpr Timestamp kCorpusSpan = 3 * 365 * 86400;

double wrap_lon(double lon) {
  while (lon > 180.0) lon -= 360.0;
  while (lon < -180.0) lon += 360.0;
  return lon;
}

std::string fixed6(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed, 6);
  return std::string(buf, ptr);
}

struct City {
  GeonameId id;
  std::size_t country;
  GeoPoint point;
  std::uint64_t population;
};

struct SynthPlace {
  Place place;
  std::size_t country;
};

struct World {
  std::vector<GazetteerEntry> entries;
  std::vector<City> cities;                    // pop >= 1000, class P
  std::vector<std::vector<std::size_t>> cities_of;  // per country
  std::vector<std::size_t> city_place;          // city index -> places index
  std::vector<std::vector<std::size_t>> neighborhoods_of;  // city index -> places
  std::vector<std::size_t> country_place;       // country index -> places index
  std::vector<SynthPlace> places;
  std::vector<std::size_t> sea_places;
};

BoundingBox box_around(double lat, double lon, double half_lat, double half_lon) {
  const double s = std::max(-90.0, lat - half_lat);
  const double n = std::min(90.0, lat + half_lat);
  if (half_lon >= 180.0) return BoundingBox(s, -180.0, n, 180.0);
  return BoundingBox(s, wrap_lon(lon - half_lon), n, wrap_lon(lon + half_lon));
}

World build_world(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  World w;
  w.cities_of.resize(kCountries.size());
  w.country_place.resize(kCountries.size());
  GeonameId next_id = kFirstGeonameId;

  auto scatter = [&](const CountrySeed& c) {
    const double lat = std::clamp(c.lat + (unit(rng) * 2.0 - 1.0) * c.spread_deg, -85.0, 85.0);
    const double lon = wrap_lon(c.lon + (unit(rng) * 2.0 - 1.0) * c.spread_deg);
    return GeoPoint(lat, lon);
  };

  static constexpr std::array<std::pair<char, const char*>, 8> kOtherClasses = {{
      {'H', "LK"}, {'L', "PRK"}, {'T', "MT"}, {'S', "HTL"},
      {'A', "ADM2"}, {'R', "RD"}, {'U', "SMU"}, {'V', "FRST"},
  }};

  for (std::size_t ci = 0; ci < kCountries.size(); ++ci) {
    const CountrySeed& c = kCountries[ci];
    w.entries.push_back({next_id++, std::string(c.name), GeoPoint(c.lat, c.lon), 'A', "PCLI",
                         c.code, c.population});
    for (int k = 0; k < kCitiesPerCountry; ++k) {
      const GeoPoint p = scatter(c);
      const auto pop = std::max<std::uint64_t>(
          1000, static_cast<std::uint64_t>(std::llround(1000.0 * std::exp(unit(rng) * std::log(5000.0)))));
      const GeonameId id = next_id++;
      w.entries.push_back({id, std::string(c.code) + " City " + std::to_string(k), p, 'P',
                           k == 0 ? "PPLC" : "PPL", c.code, pop});
      w.cities_of[ci].push_back(w.cities.size());
      w.cities.push_back({id, ci, p, pop});
    }
    for (int k = 0; k < kVillagesPerCountry; ++k) {
      const auto pop = static_cast<std::uint64_t>(50 + unit(rng) * 949);
      w.entries.push_back({next_id++, std::string(c.code) + " Village " + std::to_string(k),
                           scatter(c), 'P', "PPL", c.code, pop});
    }
    for (int k = 0; k < kFeaturesPerCountry; ++k) {
      const auto& [cls, code] = kOtherClasses[static_cast<std::size_t>(k) % kOtherClasses.size()];
      w.entries.push_back({next_id++, std::string(c.code) + " Feature " + std::to_string(k),
                           scatter(c), cls, code, c.code, 0});
    }
  }

  auto add_place = [&](std::string id, std::string name, PlaceType type, BoundingBox bbox,
                       std::string cc, std::size_t country) {
    w.places.push_back({Place{std::move(id), std::move(name), type, bbox, std::move(cc)}, country});
    return w.places.size() - 1;
  };

  for (std::size_t ci = 0; ci < kCountries.size(); ++ci) {
    const CountrySeed& c = kCountries[ci];
    w.country_place[ci] =
        add_place(std::string("C") + c.code, c.name, PlaceType::kCountry,
                  box_around(c.lat, c.lon, c.spread_deg + 0.5, c.spread_deg + 0.5), c.code, ci);
  }
  w.city_place.resize(w.cities.size());
  w.neighborhoods_of.resize(w.cities.size());
  for (std::size_t k = 0; k < w.cities.size(); ++k) {
    const City& city = w.cities[k];
    const double half = 0.08 + unit(rng) * 0.2;
    const double lat = city.point.lat() + (unit(rng) - 0.5) * 0.04;
    const double lon = wrap_lon(city.point.lon() + (unit(rng) - 0.5) * 0.04);
    const std::string cc = kCountries[city.country].code;
    w.city_place[k] = add_place("c" + std::to_string(city.id), cc + " City", PlaceType::kCity,
                                box_around(lat, lon, half, half), cc, city.country);
    if (static_cast<int>(k % kCitiesPerCountry) < kNeighborhoodCities) {
      for (int n = 0; n < 2; ++n) {
        const double nlat = lat + (unit(rng) - 0.5) * half;
        const double nlon = wrap_lon(lon + (unit(rng) - 0.5) * half);
        w.neighborhoods_of[k].push_back(add_place(
            "n" + std::to_string(city.id) + "-" + std::to_string(n), "Neighborhood, " + cc,
            PlaceType::kNeighborhood, box_around(nlat, nlon, 0.02, 0.02), cc, city.country));
      }
    }
  }
  // Open-ocean points of interest: no gazetteer entry within reach.
  for (const auto& [lat, lon] : std::array<std::pair<double, double>, 4>{
           {{0.0, -30.0}, {-45.0, -120.0}, {30.0, -45.0}, {-30.0, 80.0}}}) {
    w.sea_places.push_back(add_place("sea" + std::to_string(w.sea_places.size()), "Open sea",
                                     PlaceType::kPoi, box_around(lat, lon, 0.01, 0.01), "",
                                     kCountries.size()));
  }
  return w;
}

std::string gazetteer_line(const GazetteerEntry& e) {
  std::string s;
  detail::append_integer(s, e.geoname_id);
  s += '\t' + e.name + '\t' + e.name + "\t\t" + fixed6(e.point.lat()) + '\t' + fixed6(e.point.lon());
  s += '\t';
  if (e.feature_class != '\0') s += e.feature_class;
  s += '\t' + e.feature_code + '\t' + e.country_code + "\t\t\t\t\t\t";
  detail::append_integer(s, e.population);
  s += "\t\t0\tUTC\t2016-04-25";
  return s;
}

void write_lines(const std::filesystem::path& path, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  for (const auto& l : lines) out << l << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

std::vector<std::string> synthetic_gazetteer_lines(std::uint64_t seed) {
  const World w = build_world(seed);
  std::vector<std::string> lines;
  lines.reserve(w.entries.size());
  for (const auto& e : w.entries) lines.push_back(gazetteer_line(e));
  return lines;
}

std::vector<std::string> synthetic_country_info_lines() {
  std::vector<std::string> lines;
  lines.emplace_back(
      "#ISO\tISO3\tISO-Numeric\tfips\tCountry\tCapital\tArea(in sq km)\tPopulation\tContinent");
  for (const auto& c : kCountries) {
    std::string l = std::string(c.code) + "\t\t\t\t" + c.name + "\t\t\t";
    detail::append_integer(l, c.population);
    l += '\t';
    l += c.continent;
    lines.push_back(std::move(l));
  }
  return lines;
}

SyntheticCorpus write_synthetic_corpus(const SyntheticParams& params,
                                       const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const World w = build_world(params.seed);
  std::mt19937_64 rng(params.seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  SyntheticCorpus corpus{dir / "gazetteer.txt", dir / "countryInfo.txt", dir / "records.tsv", 0};
  write_lines(corpus.gazetteer, synthetic_gazetteer_lines(params.seed));
  write_lines(corpus.country_info, synthetic_country_info_lines());

  // Per-user record counts: a heavy-tailed body plus a few bursty spam accounts.
  const std::uint64_t users = std::max<std::uint64_t>(1, params.users);
  std::vector<std::uint64_t> counts(users);
  std::vector<bool> spam(users, false);
  std::normal_distribution<double> log_count(3.6, 1.1);
  std::uint64_t spam_total = 0;
  double body_raw = 0.0;
  std::vector<double> raw(users, 0.0);
  for (std::uint64_t u = 0; u < users; ++u) {
    if (unit(rng) < params.spam_user_fraction) {
      spam[u] = true;
      counts[u] = 1100 + static_cast<std::uint64_t>(unit(rng) * 900);
      spam_total += counts[u];
    } else {
      raw[u] = std::clamp(std::exp(log_count(rng)), 1.0, 900.0);
      body_raw += raw[u];
    }
  }
  const double body_target =
      params.records > spam_total ? static_cast<double>(params.records - spam_total) : 0.0;
  std::uint64_t assigned = spam_total;
  std::uint64_t largest = 0;
  for (std::uint64_t u = 0; u < users; ++u) {
    if (spam[u]) continue;
    counts[u] = std::max<std::uint64_t>(
        1, static_cast<std::uint64_t>(std::llround(raw[u] * body_target / std::max(body_raw, 1.0))));
    assigned += counts[u];
    if (spam[largest] || counts[u] > counts[largest]) largest = u;
  }
  if (!spam[largest] && assigned != params.records) {
    const auto diff = static_cast<std::int64_t>(params.records) - static_cast<std::int64_t>(assigned);
    counts[largest] = static_cast<std::uint64_t>(
        std::max<std::int64_t>(1, static_cast<std::int64_t>(counts[largest]) + diff));
  }

  std::vector<double> country_weight;
  for (const auto& c : kCountries) country_weight.push_back(std::sqrt(static_cast<double>(c.population)));
  std::discrete_distribution<std::size_t> pick_country(country_weight.begin(), country_weight.end());
  std::exponential_distribution<double> normal_gap(1.0 / (8.0 * 3600.0));
  std::exponential_distribution<double> spam_gap(1.0 / 1200.0);

  auto random_city_in = [&](std::size_t country) {
    const auto& list = w.cities_of[country];
    return list[static_cast<std::size_t>(unit(rng) * static_cast<double>(list.size())) % list.size()];
  };

  std::vector<std::string> lines;
  lines.reserve(params.records + params.records / 100);
  TweetId next_tweet = 100'000'000'000'000ULL;

  for (std::uint64_t u = 0; u < users; ++u) {
    const UserId user_id = 1'000'000 + u * 7919;
    const std::size_t home = random_city_in(pick_country(rng));
    std::size_t here = home;
    Timestamp t = kCorpusStart + static_cast<Timestamp>(unit(rng) * kCorpusSpan);

    for (std::uint64_t k = 0; k < counts[u]; ++k) {
      if (spam[u]) {
        t += 1 + static_cast<Timestamp>(spam_gap(rng));
        here = random_city_in(pick_country(rng));
      } else {
        t += 1 + static_cast<Timestamp>(normal_gap(rng));
        const double move = unit(rng);
        if (here != home && move < 0.3) {
          here = home;
        } else if (move < 0.06) {
          here = random_city_in(w.cities[home].country);
        } else if (move < 0.09) {
          here = random_city_in(pick_country(rng));
        }
      }

      TweetRecord r;
      r.tweet_id = next_tweet++;
      r.user_id = user_id;
      r.timestamp = t;
      const City& city = w.cities[here];
      const double form = unit(rng);
      const bool with_point = form < 0.5 || form >= 0.8;
      const bool with_place = form >= 0.5;
      if (with_point) {
        r.point = GeoPoint(std::clamp(city.point.lat() + (unit(rng) - 0.5) * 0.08, -90.0, 90.0),
                           wrap_lon(city.point.lon() + (unit(rng) - 0.5) * 0.08));
      }
      if (with_place) {
        const double which = unit(rng);
        std::size_t place = w.city_place[here];
        if (which < 0.003) {
          place = w.sea_places[static_cast<std::size_t>(unit(rng) * 4) % w.sea_places.size()];
        } else if (which < 0.05) {
          place = w.country_place[city.country];
        } else if (which < 0.35 && !w.neighborhoods_of[here].empty()) {
          place = w.neighborhoods_of[here][static_cast<std::size_t>(unit(rng) * 2) % w.neighborhoods_of[here].size()];
        }
        r.place = w.places[place].place;
      }

      std::string line;
      line += std::to_string(r.tweet_id) + '\t' + std::to_string(r.user_id) + '\t' +
              std::to_string(r.timestamp) + '\t';
      if (r.point) line += fixed6(r.point->lat()) + '\t' + fixed6(r.point->lon());
      else line += '\t';
      line += '\t';
      if (r.place) {
        const Place& p = *r.place;
        line += p.place_id + '\t' + p.name + '\t' + std::string(to_string(p.type)) + '\t' +
                fixed6(p.bbox.south()) + '\t' + fixed6(p.bbox.west()) + '\t' +
                fixed6(p.bbox.north()) + '\t' + fixed6(p.bbox.east()) + '\t' + p.country_code;
      } else {
        line += "\t\t\t\t\t\t\t";
      }

      const double fate = unit(rng);
      if (fate < params.duplicate_fraction) lines.push_back(line);
      lines.push_back(std::move(line));
      if (unit(rng) < params.bad_line_fraction) {
        lines.push_back(unit(rng) < 0.5
                            ? std::to_string(next_tweet++) + '\t' + std::to_string(user_id) + '\t' +
                                  std::to_string(t) + std::string(10, '\t')
                            : std::string("not\ta\trecord"));
      }
    }
  }

  std::shuffle(lines.begin(), lines.end(), rng);
  write_lines(corpus.records, lines);
  corpus.lines_written = lines.size();
  return corpus;
}

}  // namespace mobnet
