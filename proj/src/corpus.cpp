#include "moodscope/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "moodscope/csv.hpp"

namespace moodscope {

namespace {

using json = nlohmann::ordered_json;

bool parse_int(std::string_view text, int& value) {
  while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc{} && ptr == text.data() + text.size();
}

bool fixed_digits(std::string_view text, std::size_t pos, std::size_t count, int& value) {
  if (pos + count > text.size()) return false;
  value = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    if (text[i] < '0' || text[i] > '9') return false;
    value = value * 10 + (text[i] - '0');
  }
  return true;
}

std::string join_ids(const std::vector<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out;
}

struct UserRow {
  std::string user_id;
  Date survey_date;
  int cesd = 0;
};

std::vector<UserRow> read_users(std::istream& in, std::vector<std::string>& problems) {
  std::vector<UserRow> rows;
  std::size_t line = 0;
  auto header = csv::read_record(in, line);
  if (!header) {
    problems.push_back("users: empty user table");
    return rows;
  }
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header->size(); ++i) column[(*header)[i]] = i;
  for (const char* required : {"user_id", "survey_date", "cesd_score"}) {
    if (!column.count(required)) problems.push_back(std::string("users: missing column ") + required);
  }
  if (!problems.empty()) return rows;

  std::unordered_map<std::string, std::size_t> seen;
  while (auto record = csv::read_record(in, line)) {
    if (record->size() == 1 && (*record)[0].empty()) continue;
    const auto where = "users line " + std::to_string(line) + ": ";
    if (record->size() != header->size()) {
      problems.push_back(where + "expected " + std::to_string(header->size()) + " fields, got " +
                         std::to_string(record->size()));
      continue;
    }
    UserRow row;
    row.user_id = (*record)[column["user_id"]];
    if (row.user_id.empty()) {
      problems.push_back(where + "empty user_id");
      continue;
    }
    auto date = parse_date((*record)[column["survey_date"]]);
    if (!date) {
      problems.push_back(where + "unparseable survey_date '" + (*record)[column["survey_date"]] + "'");
      continue;
    }
    row.survey_date = *date;
    if (!parse_int((*record)[column["cesd_score"]], row.cesd)) {
      problems.push_back(where + "unparseable cesd_score '" + (*record)[column["cesd_score"]] + "'");
      continue;
    }
    if (row.cesd < 0 || row.cesd > kMaxCesd) {
      problems.push_back(where + "cesd_score " + std::to_string(row.cesd) + " out of range 0..60 for user " +
                         row.user_id);
      continue;
    }
    if (seen.count(row.user_id)) {
      problems.push_back(where + "duplicate user " + row.user_id);
      continue;
    }
    seen[row.user_id] = rows.size();
    rows.push_back(std::move(row));
  }
  return rows;
}

struct RawPost {
  PostRecord post;
  std::size_t line = 0;
};

std::optional<PostSentiment> make_override(std::optional<int> pos, std::optional<int> neg, const std::string& where,
                                           std::vector<std::string>& problems, bool& ok) {
  ok = true;
  if (!pos && !neg) return std::nullopt;
  if (!pos || !neg) {
    problems.push_back(where + "pos and neg must be given together");
    ok = false;
    return std::nullopt;
  }
  PostSentiment s{*pos, *neg};
  if (!s.valid()) {
    problems.push_back(where + "sentiment override out of range (pos 1..5, neg -5..-1)");
    ok = false;
    return std::nullopt;
  }
  return s;
}

void read_posts_jsonl(std::istream& in, std::vector<RawPost>& out, std::vector<std::string>& problems) {
  std::string text;
  std::size_t line = 0;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = "posts line " + std::to_string(line) + ": ";
    json record;
    try {
      record = json::parse(text);
    } catch (const json::parse_error& e) {
      problems.push_back(where + "malformed JSON");
      continue;
    }
    if (!record.is_object()) {
      problems.push_back(where + "record is not an object");
      continue;
    }
    bool bad = false;
    for (const char* key : {"user_id", "ts", "text"}) {
      if (!record.contains(key) || !record[key].is_string()) {
        problems.push_back(where + "missing or non-string field '" + key + "'");
        bad = true;
      }
    }
    if (bad) continue;
    auto ts = parse_timestamp(record["ts"].get<std::string>());
    if (!ts) {
      problems.push_back(where + "unparseable timestamp '" + record["ts"].get<std::string>() + "'");
      continue;
    }
    auto optional_int = [&](const char* key) -> std::optional<int> {
      if (!record.contains(key) || record[key].is_null()) return std::nullopt;
      if (!record[key].is_number_integer()) {
        problems.push_back(where + "field '" + key + "' is not an integer");
        bad = true;
        return std::nullopt;
      }
      return record[key].get<int>();
    };
    auto pos = optional_int("pos");
    auto neg = optional_int("neg");
    if (bad) continue;
    bool ok = true;
    auto sentiment = make_override(pos, neg, where, problems, ok);
    if (!ok) continue;
    out.push_back({PostRecord{record["user_id"].get<std::string>(), *ts, record["text"].get<std::string>(), sentiment},
                   line});
  }
}

void read_posts_csv(std::istream& in, std::vector<RawPost>& out, std::vector<std::string>& problems) {
  std::size_t line = 0;
  auto header = csv::read_record(in, line);
  if (!header) return;
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header->size(); ++i) column[(*header)[i]] = i;
  for (const char* required : {"user_id", "ts", "text"}) {
    if (!column.count(required)) {
      problems.push_back(std::string("posts: missing column ") + required);
      return;
    }
  }
  while (true) {
    const std::size_t start_line = line + 1;
    auto record = csv::read_record(in, line);
    if (!record) break;
    if (record->size() == 1 && (*record)[0].empty()) continue;
    const auto where = "posts line " + std::to_string(start_line) + ": ";
    if (record->size() != header->size()) {
      problems.push_back(where + "expected " + std::to_string(header->size()) + " fields, got " +
                         std::to_string(record->size()));
      continue;
    }
    auto ts = parse_timestamp((*record)[column["ts"]]);
    if (!ts) {
      problems.push_back(where + "unparseable timestamp '" + (*record)[column["ts"]] + "'");
      continue;
    }
    bool bad = false;
    auto optional_int = [&](const char* key) -> std::optional<int> {
      auto it = column.find(key);
      if (it == column.end() || (*record)[it->second].empty()) return std::nullopt;
      int v = 0;
      if (!parse_int((*record)[it->second], v)) {
        problems.push_back(where + "field '" + key + "' is not an integer");
        bad = true;
        return std::nullopt;
      }
      return v;
    };
    auto pos = optional_int("pos");
    auto neg = optional_int("neg");
    if (bad) continue;
    bool ok = true;
    auto sentiment = make_override(pos, neg, where, problems, ok);
    if (!ok) continue;
    if ((*record)[column["user_id"]].empty()) {
      problems.push_back(where + "empty user_id");
      continue;
    }
    out.push_back({PostRecord{(*record)[column["user_id"]], *ts, (*record)[column["text"]], sentiment}, start_line});
  }
}

}  // namespace

IngestError::IngestError(std::vector<std::string> problems)
    : std::runtime_error(problems.empty() ? std::string("ingest failed") : problems.front()),
      problems_(std::move(problems)) {}

SymptomLabel label(int cesd_score, int binary_cutoff) {
  if (cesd_score < 0 || cesd_score > kMaxCesd)
    throw std::out_of_range("CES-D score " + std::to_string(cesd_score) + " outside 0..60");
  Ternary ternary = cesd_score <= 15 ? Ternary::Low : (cesd_score <= 22 ? Ternary::Moderate : Ternary::High);
  BinaryLabel binary = cesd_score > binary_cutoff ? BinaryLabel::High : BinaryLabel::Low;
  return {ternary, binary};
}

std::optional<Date> parse_date(std::string_view text) {
  while (!text.empty() && (text.back() == ' ' || text.back() == '\r')) text.remove_suffix(1);
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  if (!fixed_digits(text, 0, 4, y) || !fixed_digits(text, 5, 2, m) || !fixed_digits(text, 8, 2, d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
  // YYYY-MM-DD[T ]HH:MM[:SS[.fff]][Z|+HH:MM|-HH:MM|+HHMM]; no suffix means UTC.
  if (text.size() < 16) return std::nullopt;
  auto date = parse_date(text.substr(0, 10));
  if (!date || (text[10] != 'T' && text[10] != 't' && text[10] != ' ')) return std::nullopt;
  int hh = 0, mm = 0, ss = 0;
  if (!fixed_digits(text, 11, 2, hh) || text[13] != ':' || !fixed_digits(text, 14, 2, mm)) return std::nullopt;
  std::size_t pos = 16;
  if (pos < text.size() && text[pos] == ':') {
    if (!fixed_digits(text, pos + 1, 2, ss)) return std::nullopt;
    pos += 3;
    if (pos < text.size() && (text[pos] == '.' || text[pos] == ',')) {
      ++pos;
      const std::size_t start = pos;
      while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') ++pos;
      if (pos == start) return std::nullopt;
    }
  }
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  int offset_minutes = 0;
  if (pos < text.size()) {
    const char sign = text[pos];
    if ((sign == 'Z' || sign == 'z') && pos + 1 == text.size()) {
      pos += 1;
    } else if (sign == '+' || sign == '-') {
      int oh = 0, om = 0;
      if (!fixed_digits(text, pos + 1, 2, oh)) return std::nullopt;
      std::size_t next = pos + 3;
      if (next < text.size() && text[next] == ':') ++next;
      if (next < text.size()) {
        if (!fixed_digits(text, next, 2, om)) return std::nullopt;
        next += 2;
      }
      if (next != text.size() || oh > 23 || om > 59) return std::nullopt;
      offset_minutes = (sign == '+' ? 1 : -1) * (oh * 60 + om);
      pos = next;
    } else {
      return std::nullopt;
    }
  }
  using namespace std::chrono;
  return Timestamp{*date} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day = floor<days>(ts);
  const auto rem = ts - day;
  const auto h = duration_cast<hours>(rem).count();
  const auto m = duration_cast<minutes>(rem).count() % 60;
  const auto s = rem.count() % 60;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%sT%02lld:%02lld:%02lldZ", format_date(day).c_str(), static_cast<long long>(h),
                static_cast<long long>(m), static_cast<long long>(s));
  return buf;
}

IngestResult ingest(std::istream& posts, std::istream& users, const IngestOptions& options) {
  std::vector<std::string> problems;
  auto user_rows = read_users(users, problems);
  std::vector<RawPost> raw;
  if (options.format == PostFormat::Jsonl)
    read_posts_jsonl(posts, raw, problems);
  else
    read_posts_csv(posts, raw, problems);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < user_rows.size(); ++i) index[user_rows[i].user_id] = i;

  std::vector<std::string> unknown;
  for (const auto& r : raw) {
    if (!index.count(r.post.user_id) &&
        std::find(unknown.begin(), unknown.end(), r.post.user_id) == unknown.end())
      unknown.push_back(r.post.user_id);
  }
  if (!unknown.empty()) problems.push_back("posts reference users without a survey record: " + join_ids(unknown));
  if (!problems.empty()) throw IngestError(std::move(problems));

  IngestResult result;
  result.timelines.reserve(user_rows.size());
  for (const auto& row : user_rows) result.timelines.push_back({row.user_id, row.survey_date, row.cesd, {}});

  std::vector<Timestamp> last_seen(user_rows.size(), Timestamp::min());
  std::vector<bool> unsorted(user_rows.size(), false);
  std::size_t dropped = 0;
  for (auto& r : raw) {
    const auto u = index[r.post.user_id];
    auto& timeline = result.timelines[u];
    if (r.post.timestamp < last_seen[u]) unsorted[u] = true;
    last_seen[u] = std::max(last_seen[u], r.post.timestamp);
    const Timestamp end{timeline.survey_date};
    const Timestamp begin = end - std::chrono::days{options.lookback_days};
    if (r.post.timestamp < begin || r.post.timestamp >= end) {
      ++dropped;
      continue;
    }
    timeline.posts.push_back(std::move(r.post));
  }
  for (std::size_t u = 0; u < result.timelines.size(); ++u) {
    auto& posts_of_user = result.timelines[u].posts;
    std::stable_sort(posts_of_user.begin(), posts_of_user.end(),
                     [](const PostRecord& a, const PostRecord& b) { return a.timestamp < b.timestamp; });
    if (unsorted[u]) result.warnings.push_back("posts for user " + result.timelines[u].user_id + " were not sorted; sorted by timestamp");
  }
  if (dropped > 0)
    result.warnings.push_back(std::to_string(dropped) + " post(s) outside the " + std::to_string(options.lookback_days) +
                              "-day lookback were dropped");
  return result;
}

IngestResult ingest(const std::filesystem::path& posts, const std::filesystem::path& users,
                    const IngestOptions& options) {
  std::ifstream posts_in(posts, std::ios::binary);
  if (!posts_in) throw IngestError({"cannot open posts file " + posts.string()});
  std::ifstream users_in(users, std::ios::binary);
  if (!users_in) throw IngestError({"cannot open users file " + users.string()});
  return ingest(posts_in, users_in, options);
}

void write_posts_jsonl(std::ostream& out, const std::vector<UserTimeline>& timelines) {
  for (const auto& t : timelines) {
    for (const auto& p : t.posts) {
      json record;
      record["user_id"] = p.user_id;
      record["ts"] = format_timestamp(p.timestamp);
      record["text"] = p.text;
      if (p.sentiment_override) {
        record["pos"] = p.sentiment_override->pos;
        record["neg"] = p.sentiment_override->neg;
      }
      out << record.dump() << '\n';
    }
  }
}

void write_users_csv(std::ostream& out, const std::vector<UserTimeline>& timelines) {
  out << "user_id,survey_date,cesd_score\n";
  for (const auto& t : timelines)
    csv::write_row(out, {t.user_id, format_date(t.survey_date), std::to_string(t.cesd_score)});
}

CohortSummary cohort_stats(const std::vector<UserTimeline>& timelines) {
  CohortSummary s;
  s.n_users = timelines.size();
  if (timelines.empty()) return s;
  const double n = static_cast<double>(timelines.size());
  std::vector<double> counts;
  counts.reserve(timelines.size());
  double cesd_sum = 0.0;
  for (const auto& t : timelines) {
    counts.push_back(static_cast<double>(t.posts.size()));
    cesd_sum += t.cesd_score;
    const auto l = label(t.cesd_score);
    (l.ternary == Ternary::Low ? s.frac_low : l.ternary == Ternary::Moderate ? s.frac_moderate : s.frac_high) += 1.0;
    if (l.binary == BinaryLabel::High) s.frac_binary_high += 1.0;
  }
  s.mean_posts = std::accumulate(counts.begin(), counts.end(), 0.0) / n;
  std::sort(counts.begin(), counts.end());
  const auto mid = counts.size() / 2;
  s.median_posts = counts.size() % 2 ? counts[mid] : 0.5 * (counts[mid - 1] + counts[mid]);
  s.cesd_mean = cesd_sum / n;
  double ss = 0.0;
  for (const auto& t : timelines) ss += (t.cesd_score - s.cesd_mean) * (t.cesd_score - s.cesd_mean);
  s.cesd_sd = std::sqrt(ss / n);
  s.frac_low /= n;
  s.frac_moderate /= n;
  s.frac_high /= n;
  s.frac_binary_high /= n;
  return s;
}

std::optional<MoodSymbol> parse_symbol(std::string_view text) {
  for (auto s : kAllSymbols)
    if (text == symbol_tag(s) || text == symbol_name(s)) return s;
  return std::nullopt;
}

}  // namespace moodscope
