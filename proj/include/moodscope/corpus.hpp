#pragma once

#include <chrono>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "moodscope/types.hpp"

namespace moodscope {

using Timestamp = std::chrono::sys_seconds;
using Date = std::chrono::sys_days;

inline constexpr int kLookbackDays = 365;
inline constexpr int kMaxCesd = 60;

struct PostRecord {
  std::string user_id;
  Timestamp timestamp;
  std::string text;
  std::optional<PostSentiment> sentiment_override;

  friend bool operator==(const PostRecord&, const PostRecord&) = default;
};

/// One participant's posts in [survey_date - 365 days, survey_date), ascending.
struct UserTimeline {
  std::string user_id;
  Date survey_date;
  int cesd_score = 0;
  std::vector<PostRecord> posts;

  friend bool operator==(const UserTimeline&, const UserTimeline&) = default;
};

struct SymptomLabel {
  Ternary ternary;
  BinaryLabel binary;

  friend constexpr bool operator==(const SymptomLabel&, const SymptomLabel&) = default;
};

/// Default binary split: scores strictly above this value are High.
inline constexpr int kBinaryCutoff = 22;

/// Maps a CES-D score (0..60) onto the ternary bands 0-15 / 16-22 / 23-60
/// and the binary split `score > binary_cutoff`.
SymptomLabel label(int cesd_score, int binary_cutoff = kBinaryCutoff);

/// Thrown by ingestion with every problem found, one message per entry.
class IngestError : public std::runtime_error {
 public:
  explicit IngestError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

enum class PostFormat { Jsonl, Csv };

struct IngestOptions {
  PostFormat format = PostFormat::Jsonl;
  int lookback_days = kLookbackDays;
};

struct IngestResult {
  std::vector<UserTimeline> timelines;
  std::vector<std::string> warnings;
};

/// Reads posts (JSONL or CSV) and the user table (user_id,survey_date,cesd_score).
/// Timelines come back in user-table order; users without posts are kept.
IngestResult ingest(const std::filesystem::path& posts, const std::filesystem::path& users,
                    const IngestOptions& options = {});
IngestResult ingest(std::istream& posts, std::istream& users, const IngestOptions& options = {});

/// Canonical JSONL export (one post per line, timelines in order).
void write_posts_jsonl(std::ostream& out, const std::vector<UserTimeline>& timelines);
void write_users_csv(std::ostream& out, const std::vector<UserTimeline>& timelines);

std::string format_timestamp(Timestamp ts);
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_date(Date d);
std::optional<Date> parse_date(std::string_view text);

struct CohortSummary {
  std::size_t n_users = 0;
  double mean_posts = 0.0;
  double median_posts = 0.0;
  double cesd_mean = 0.0;
  double cesd_sd = 0.0;  // population sd
  double frac_low = 0.0;
  double frac_moderate = 0.0;
  double frac_high = 0.0;
  double frac_binary_high = 0.0;
};

CohortSummary cohort_stats(const std::vector<UserTimeline>& timelines);

}  // namespace moodscope
