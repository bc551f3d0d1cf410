#include "epidelay/linelist.hpp"

#include "epidelay/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace epidelay {

namespace {

using json = nlohmann::json;

std::string row_error(const std::string& what, std::size_t row) {
  return what + " at row " + std::to_string(row);
}

// Splits one CSV record; supports double-quoted fields with "" escapes.
std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field.push_back('"');
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool valid_utf8(const std::string& s) {
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    int extra = 0;
    if (c < 0x80) {
      extra = 0;
    } else if ((c >> 5) == 0x6) {
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      extra = 3;
    } else {
      return false;
    }
    if (i + extra >= s.size() && extra > 0) return false;
    for (int k = 1; k <= extra; ++k) {
      if ((static_cast<unsigned char>(s[i + k]) >> 6) != 0x2) return false;
    }
    i += extra + 1;
  }
  return true;
}

std::optional<std::chrono::sys_days> parse_iso_date(const std::string& text) {
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

double parse_bound(const std::string& raw, const std::optional<std::chrono::sys_days>& epoch,
                   std::size_t row) {
  const std::string text = trim(raw);
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (!text.empty() && ec == std::errc() && ptr == last && std::isfinite(value)) return value;
  if (epoch) {
    if (auto date = parse_iso_date(text)) {
      return static_cast<double>((*date - *epoch).count());
    }
  }
  throw ValidationError(row_error("non-numeric window bound '" + text + "'", row));
}

EventWindow parse_window(const std::string& raw, const std::optional<std::chrono::sys_days>& epoch,
                         std::size_t row) {
  const std::string text = trim(raw);
  if (text.empty()) throw ValidationError(row_error("empty window", row));
  std::vector<Segment> segments;
  std::stringstream parts(text);
  std::string part;
  while (std::getline(parts, part, '|')) {
    const auto colon = part.find(':');
    if (colon == std::string::npos) {
      const double d = parse_bound(part, epoch, row);
      segments.push_back({d, d + 1.0});
      continue;
    }
    const double lo = parse_bound(part.substr(0, colon), epoch, row);
    const double hi = parse_bound(part.substr(colon + 1), epoch, row);
    if (!(hi > lo)) throw ValidationError(row_error("window upper <= lower", row));
    segments.push_back({lo, hi});
  }
  std::sort(segments.begin(), segments.end());
  for (std::size_t i = 1; i < segments.size(); ++i) {
    if (segments[i].lo < segments[i - 1].hi) {
      throw ValidationError(row_error("overlapping window segments", row));
    }
  }
  return EventWindow(std::move(segments));
}

std::string format_window(const EventWindow& w) {
  std::string out;
  for (const auto& s : w.segments()) {
    if (!out.empty()) out.push_back('|');
    out += format_number(s.lo) + ":" + format_number(s.hi);
  }
  return out;
}

EventWindow widen(const EventWindow& w, double grid, std::optional<double> cap) {
  std::vector<Segment> merged;
  for (const auto& s : w.segments()) {
    double lo = std::floor(s.lo / grid) * grid;
    double hi = std::ceil(s.hi / grid) * grid;
    if (cap && hi > *cap) hi = std::max(*cap, s.hi);
    if (!merged.empty() && lo <= merged.back().hi) {
      merged.back().hi = std::max(merged.back().hi, hi);
    } else {
      merged.push_back({lo, hi});
    }
  }
  return EventWindow(std::move(merged));
}

} // namespace

std::string format_number(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  if (std::string_view(buf) == "-0") return "0";
  return buf;
}

Linelist ingest_csv(std::istream& in, const IngestOptions& options) {
  Linelist out;
  out.meta = options.metadata;
  std::optional<std::chrono::sys_days> epoch;
  if (out.meta.epoch_date) {
    epoch = parse_iso_date(*out.meta.epoch_date);
    if (!epoch) throw ValidationError("invalid epoch date '" + *out.meta.epoch_date + "'");
  }

  std::string line;
  if (!std::getline(in, line)) throw ValidationError("linelist CSV is empty (missing header)");
  if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
  if (!valid_utf8(line)) throw ValidationError("linelist header is not valid UTF-8");
  const auto header = split_csv(line);
  auto column = [&](const std::string& name) -> std::size_t {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    throw ValidationError("missing column '" + name + "'");
  };
  const std::size_t id_col = column("id");
  const std::size_t primary_col = column("primary_window");
  const std::size_t secondary_col = column("secondary_window");
  std::vector<std::pair<std::size_t, std::string>> strata_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const std::string name = trim(header[i]);
    if (name.rfind("strata_", 0) == 0) strata_cols.emplace_back(i, name.substr(7));
  }

  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    if (!valid_utf8(line)) throw ValidationError(row_error("invalid UTF-8", row));
    const auto fields = split_csv(line);
    if (fields.size() != header.size()) {
      throw ValidationError(row_error("expected " + std::to_string(header.size()) + " fields, got " +
                                          std::to_string(fields.size()),
                                      row));
    }
    CaseRecord c{trim(fields[id_col]), parse_window(fields[primary_col], epoch, row),
                 parse_window(fields[secondary_col], epoch, row), {}, true};
    for (const auto& [idx, key] : strata_cols) c.strata[key] = trim(fields[idx]);
    if (!out.meta.allow_negative && c.secondary.upper() < c.primary.lower()) {
      throw ValidationError(row_error("secondary window ends before primary window starts", row));
    }
    if (out.meta.observation_time && c.secondary.upper() > *out.meta.observation_time) {
      throw ValidationError(row_error("secondary window extends past the observation time", row));
    }
    out.cases.push_back(std::move(c));
  }
  return out;
}

Linelist ingest_csv_string(const std::string& text, const IngestOptions& options) {
  std::istringstream in(text);
  return ingest_csv(in, options);
}

void export_csv(const Linelist& linelist, std::ostream& out, const ExportOptions& options) {
  std::vector<std::string> strata_keys;
  for (const auto& c : linelist.cases) {
    for (const auto& [key, value] : c.strata) {
      if (std::find(strata_keys.begin(), strata_keys.end(), key) == strata_keys.end()) {
        strata_keys.push_back(key);
      }
    }
  }
  std::sort(strata_keys.begin(), strata_keys.end());

  out << "id,primary_window,secondary_window";
  for (const auto& key : strata_keys) out << ",strata_" << quote_csv(key);
  out << '\n';
  for (const auto& c : linelist.cases) {
    EventWindow primary = c.primary;
    EventWindow secondary = c.secondary;
    if (options.widen_to_grid) {
      if (!(*options.widen_to_grid > 0.0)) throw ValidationError("widening grid must be positive");
      primary = widen(primary, *options.widen_to_grid, std::nullopt);
      secondary = widen(secondary, *options.widen_to_grid, linelist.meta.observation_time);
    }
    out << quote_csv(c.id) << ',' << format_window(primary) << ',' << format_window(secondary);
    for (const auto& key : strata_keys) {
      const auto it = c.strata.find(key);
      out << ',' << (it == c.strata.end() ? std::string() : quote_csv(it->second));
    }
    out << '\n';
  }
}

std::string export_csv_string(const Linelist& linelist, const ExportOptions& options) {
  std::ostringstream out;
  export_csv(linelist, out, options);
  return out.str();
}

std::string metadata_to_json(const LinelistMetadata& meta) {
  json j;
  j["observation_time"] = meta.observation_time ? json(*meta.observation_time) : json("none");
  j["allow_negative"] = meta.allow_negative;
  j["delay_name"] = meta.delay_name;
  j["epoch_date"] = meta.epoch_date ? json(*meta.epoch_date) : json(nullptr);
  return j.dump(2);
}

LinelistMetadata metadata_from_json(const std::string& text) {
  LinelistMetadata meta;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("metadata sidecar: ") + e.what());
  }
  if (j.contains("observation_time")) {
    const auto& t = j["observation_time"];
    if (t.is_number()) {
      meta.observation_time = t.get<double>();
    } else if (!(t.is_null() || (t.is_string() && t.get<std::string>() == "none"))) {
      throw ValidationError("metadata sidecar: observation_time must be a number or \"none\"");
    }
  }
  if (j.contains("allow_negative")) meta.allow_negative = j["allow_negative"].get<bool>();
  if (j.contains("delay_name")) meta.delay_name = j["delay_name"].get<std::string>();
  if (j.contains("epoch_date") && j["epoch_date"].is_string()) {
    meta.epoch_date = j["epoch_date"].get<std::string>();
  }
  return meta;
}

Linelist read_linelist(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open linelist '" + path + "'");
  IngestOptions options;
  const std::string sidecar = path + ".meta.json";
  if (std::filesystem::exists(sidecar)) {
    std::ifstream meta_in(sidecar);
    std::stringstream buffer;
    buffer << meta_in.rdbuf();
    options.metadata = metadata_from_json(buffer.str());
  }
  return ingest_csv(in, options);
}

void write_linelist(const Linelist& linelist, const std::string& path,
                    const ExportOptions& options) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write linelist '" + path + "'");
  export_csv(linelist, out, options);
  std::ofstream meta_out(path + ".meta.json");
  meta_out << metadata_to_json(linelist.meta) << '\n';
}

std::string data_hash(const Linelist& linelist) {
  const std::string canonical = export_csv_string(linelist) + metadata_to_json(linelist.meta);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

} // namespace epidelay
