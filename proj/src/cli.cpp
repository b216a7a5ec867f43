#include "moodscope/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "moodscope/classify.hpp"
#include "moodscope/corpus.hpp"
#include "moodscope/csv.hpp"
#include "moodscope/gp.hpp"
#include "moodscope/hmm.hpp"
#include "moodscope/moodprofile.hpp"
#include "moodscope/parallel.hpp"
#include "moodscope/sentiment.hpp"
#include "moodscope/synth.hpp"
#include "moodscope/textfeat.hpp"

namespace moodscope {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

namespace {

struct MissingArtifact : std::runtime_error {
  explicit MissingArtifact(const fs::path& p) : std::runtime_error("missing required file: " + p.string()) {}
};

std::string hex(std::uint64_t h) {
  std::ostringstream s;
  s << std::hex;
  s.width(16);
  s.fill('0');
  s << h;
  return s.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw MissingArtifact(p);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& require(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw MissingArtifact(p);
  return p;
}

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    const int v = std::stoi(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad integer '" + item + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> parse_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

struct Common {
  std::string posts;
  std::string users;
  std::string format;
  std::string lexicon;
  std::string negations;
  std::string boosters;
  std::string category_lexicon;
  int d = 14;
  int s = 3;
  std::string mode = "truncate";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
  std::string out_dir = ".";

  fs::path out() const { return fs::path(out_dir); }
  fs::path posts_path() const { return posts.empty() ? out() / "posts.jsonl" : fs::path(posts); }
  fs::path users_path() const { return users.empty() ? out() / "users.csv" : fs::path(users); }

  std::uint64_t resolved_seed() const {
    if (seed) return *seed;
    if (const char* env = std::getenv("MOODSCOPE_SEED"); env && *env) {
      try {
        return std::stoull(env);
      } catch (const std::exception&) {
        throw std::invalid_argument(std::string("MOODSCOPE_SEED is not an unsigned integer: ") + env);
      }
    }
    return 0;
  }

  WindowConfig window() const {
    WindowConfig c{d, s, WindowMode::TruncateTail};
    if (mode == "full") c.mode = WindowMode::FullOnly;
    else if (mode != "truncate") throw std::invalid_argument("--mode must be 'truncate' or 'full'");
    if (d < 1 || s < 1) throw std::invalid_argument("--d and --s must be >= 1");
    return c;
  }

  PostFormat post_format() const {
    if (format == "csv") return PostFormat::Csv;
    if (format == "jsonl") return PostFormat::Jsonl;
    if (!format.empty()) throw std::invalid_argument("--format must be 'jsonl' or 'csv'");
    return posts_path().extension() == ".csv" ? PostFormat::Csv : PostFormat::Jsonl;
  }

  json config() const {
    return {{"d", d},
            {"s", s},
            {"mode", mode},
            {"format", format},
            {"lexicon", lexicon},
            {"negations", negations},
            {"boosters", boosters},
            {"category_lexicon", category_lexicon}};
  }
};

/// Collects what a run read and wrote, then records it next to the outputs.
class Run {
 public:
  Run(std::string command, const Common& common, json config)
      : command_(std::move(command)), common_(common), config_(std::move(config)) {
    config_["common"] = common.config();
    config_["seed"] = common.resolved_seed();
  }

  void input(const fs::path& p) { inputs_.push_back(p); }

  void write(const std::string& name, const std::string& content) {
    fs::create_directories(common_.out());
    const fs::path p = common_.out() / name;
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + p.string());
    f << content;
    if (!f) throw std::runtime_error("failed writing " + p.string());
    outputs_.push_back(p);
  }

  void finish() {
    json m;
    m["command"] = command_;
    m["config_hash"] = hex(fnv1a(config_.dump()));
    m["config"] = config_;
    auto inputs = json::array();
    for (const auto& p : inputs_) inputs.push_back({{"path", p.string()}, {"fnv1a64", hex(fnv1a(read_file(p)))}});
    m["inputs"] = inputs;
    m["seed"] = common_.resolved_seed();
    m["version"] = std::string(kToolVersion);
    auto outputs = json::array();
    for (const auto& p : outputs_) outputs.push_back(p.string());
    m["outputs"] = outputs;
    std::string name = command_;
    std::replace(name.begin(), name.end(), ' ', '_');
    const fs::path p = common_.out() / ("manifest_" + name + ".json");
    std::ofstream f(p, std::ios::binary);
    f << m.dump(2) << '\n';
  }

 private:
  std::string command_;
  const Common& common_;
  json config_;
  std::vector<fs::path> inputs_;
  std::vector<fs::path> outputs_;
};

SentimentLexicon load_lexicon(const Common& c, Run& run) {
  if (c.lexicon.empty()) return synthetic_lexicon();
  std::optional<fs::path> neg, boost;
  run.input(require(c.lexicon));
  if (!c.negations.empty()) neg = require(c.negations), run.input(*neg);
  if (!c.boosters.empty()) boost = require(c.boosters), run.input(*boost);
  return SentimentLexicon::load(c.lexicon, neg, boost);
}

struct Corpus {
  std::vector<UserTimeline> timelines;
  std::vector<std::string> warnings;
};

Corpus load_corpus(const Common& c, Run& run, std::ostream& err) {
  const auto posts = c.posts_path();
  const auto users = c.users_path();
  require(users);
  require(posts);
  run.input(posts);
  run.input(users);
  IngestOptions opts;
  opts.format = c.post_format();
  auto result = ingest(posts, users, opts);
  for (const auto& w : result.warnings) err << "warning: " << w << '\n';
  return {std::move(result.timelines), std::move(result.warnings)};
}

std::vector<DailySeries> daily_series(const std::vector<UserTimeline>& timelines, const SentimentLexicon& lexicon,
                                      int jobs) {
  std::vector<DailySeries> out(timelines.size());
  parallel_for(timelines.size(), jobs, [&](std::size_t i) { out[i] = build_daily_series(timelines[i], lexicon); });
  return out;
}

std::vector<BinaryLabel> binary_labels(const std::vector<UserTimeline>& timelines) {
  std::vector<BinaryLabel> out;
  for (const auto& t : timelines) out.push_back(label(t.cesd_score).binary);
  return out;
}

std::string to_csv(const std::vector<std::vector<std::string>>& rows) {
  std::ostringstream s;
  for (const auto& r : rows) csv::write_row(s, r);
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::istringstream in(read_file(require(p)));
  std::vector<std::vector<std::string>> rows;
  std::size_t line = 0;
  while (auto rec = csv::read_record(in, line)) {
    if (rec->size() == 1 && rec->front().empty()) continue;
    rows.push_back(std::move(*rec));
  }
  if (rows.empty()) throw std::runtime_error(p.string() + " is empty");
  return rows;
}

std::size_t column(const std::vector<std::string>& header, std::string_view name, const fs::path& p) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error(p.string() + " lacks column '" + std::string(name) + "'");
  return static_cast<std::size_t>(it - header.begin());
}

// ---- commands -------------------------------------------------------------

int cmd_validate(const Common& c, std::ostream& out, std::ostream& err) {
  require(c.users_path());
  require(c.posts_path());
  IngestOptions opts;
  opts.format = c.post_format();
  try {
    const auto result = ingest(c.posts_path(), c.users_path(), opts);
    for (const auto& w : result.warnings) err << "warning: " << w << '\n';
    std::size_t posts = 0;
    for (const auto& t : result.timelines) posts += t.posts.size();
    out << "ok: " << result.timelines.size() << " users, " << posts << " posts in range\n";
    return kExitOk;
  } catch (const IngestError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << '\n';
    return kExitInvalidInput;
  }
}

struct SimulateArgs {
  std::string spec;
  std::string preset = "hidden";
  int n_per_group = 100;
};

int cmd_simulate(const Common& c, const SimulateArgs& a, std::ostream& out) {
  Run run("simulate", c, {{"spec", a.spec}, {"preset", a.preset}, {"n_per_group", a.n_per_group}});
  CohortSpec spec;
  if (!a.spec.empty()) {
    run.input(require(a.spec));
    spec = cohort_spec_from_json(json::parse(read_file(a.spec)));
    if (c.seed || std::getenv("MOODSCOPE_SEED")) spec.rng_seed = c.resolved_seed();
  } else if (a.preset == "hidden") {
    spec = published_hidden_cohort(a.n_per_group, c.resolved_seed());
  } else if (a.preset == "markov") {
    spec = published_markov_cohort(a.n_per_group, c.resolved_seed());
  } else {
    throw std::invalid_argument("--preset must be 'hidden' or 'markov'");
  }
  const auto cohort = synthesize(spec);
  std::ostringstream posts, users;
  write_posts_jsonl(posts, cohort.timelines);
  write_users_csv(users, cohort.timelines);
  run.write("posts.jsonl", posts.str());
  run.write("users.csv", users.str());

  std::vector<std::vector<std::string>> trace{{"user_id", "group", "symbols", "hidden_states"}};
  for (const auto& t : cohort.traces) {
    std::string symbols, hidden;
    for (auto s : t.symbols) symbols.push_back("PNUS"[index_of(s)]);
    for (int h : t.hidden_states) hidden.push_back(static_cast<char>('0' + h));
    trace.push_back({t.user_id, t.group, symbols, hidden});
  }
  run.write("trace.csv", to_csv(trace));
  run.write("cohort_spec.json", to_json(spec).dump(2) + "\n");
  run.finish();
  out << "simulated " << cohort.timelines.size() << " users\n";
  return kExitOk;
}

int cmd_profile(const Common& c, std::ostream& out, std::ostream& err) {
  Run run("profile", c, json::object());
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);
  const auto config = c.window();
  const auto series = daily_series(corpus.timelines, lexicon, c.jobs);
  std::vector<MoodProfile> profiles(series.size());
  parallel_for(series.size(), c.jobs, [&](std::size_t i) { profiles[i] = build_profile(series[i], config); });

  std::ostringstream csv_out;
  if (!series.empty()) write_profiles_csv(csv_out, profiles, series.front().length());
  run.write("profile_d" + std::to_string(c.d) + "_s" + std::to_string(c.s) + ".csv", csv_out.str());

  std::vector<std::vector<std::string>> symbols{{"user_id", "symbols"}};
  for (const auto& s : series) {
    std::string row;
    for (auto m : s.symbols()) row.push_back("PNUS"[index_of(m)]);
    symbols.push_back({s.user_id, row});
  }
  run.write("daily_symbols.csv", to_csv(symbols));
  run.finish();
  out << "profiled " << profiles.size() << " users\n";
  return kExitOk;
}

std::vector<std::vector<std::string>> transition_rows(const std::string& group, const Eigen::Matrix4d& m) {
  std::vector<std::vector<std::string>> rows;
  for (int r = 0; r < 4; ++r)
    for (int k = 0; k < 4; ++k)
      rows.push_back({group, std::string(symbol_name(symbol_from_index(r))), std::string(symbol_name(symbol_from_index(k))),
                      csv::num(m(r, k))});
  return rows;
}

int cmd_hmm_fit(const Common& c, int iters, std::ostream& out, std::ostream& err) {
  Run run("hmm fit", c, {{"iters", iters}});
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);
  const auto series = daily_series(corpus.timelines, lexicon, c.jobs);
  std::vector<Observations> sequences;
  for (const auto& s : series) sequences.push_back(s.symbol_indices());
  FitOptions opts;
  opts.n_iter = iters;
  opts.jobs = c.jobs;
  const auto model = fit(sequences, default_initial_model(), opts);
  const auto semantics = assign_semantics(model);
  run.write("hmm_model.json", to_json(model, semantics).dump(2) + "\n");

  const auto labels = binary_labels(corpus.timelines);
  std::vector<std::vector<std::string>> rows{{"group", "from", "to", "probability"}};
  for (auto group : {BinaryLabel::High, BinaryLabel::Low}) {
    std::vector<DailySeries> members;
    for (std::size_t i = 0; i < series.size(); ++i)
      if (labels[i] == group) members.push_back(series[i]);
    if (members.empty()) continue;
    for (auto& r : transition_rows(std::string(label_name(group)), observation_transition_table(members)))
      rows.push_back(std::move(r));
  }
  run.write("observation_transitions.csv", to_csv(rows));
  run.finish();
  out << "fitted HMM on " << sequences.size() << " sequences; high state = " << semantics.high_state << '\n';
  return kExitOk;
}

std::vector<DecodedSequence> decode_all(const Common& c, Run& run, const Corpus& corpus, const SentimentLexicon& lexicon) {
  const fs::path model_path = c.out() / "hmm_model.json";
  run.input(require(model_path));
  StateSemantics semantics;
  const auto model = hmm_from_json(json::parse(read_file(model_path)), &semantics);
  const auto series = daily_series(corpus.timelines, lexicon, c.jobs);
  std::vector<DecodedSequence> out(series.size());
  parallel_for(series.size(), c.jobs,
               [&](std::size_t i) { out[i] = decode(model, semantics, series[i].user_id, series[i].symbol_indices()); });
  return out;
}

int cmd_hmm_decode(const Common& c, std::ostream& out, std::ostream& err) {
  Run run("hmm decode", c, json::object());
  require(c.out() / "hmm_model.json");
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);
  const auto decodes = decode_all(c, run, corpus, lexicon);
  std::vector<std::vector<std::string>> rows{{"user_id", "high_days_last_7", "high_days_last_14", "states"}};
  for (const auto& d : decodes) {
    std::string states;
    for (auto s : d.states) states.push_back(s == SymptomState::High ? 'H' : 'L');
    auto tail = [&](std::size_t y) {
      const auto from = states.size() > y ? states.size() - y : 0;
      return std::to_string(std::count(states.begin() + static_cast<std::ptrdiff_t>(from), states.end(), 'H'));
    };
    rows.push_back({d.user_id, tail(7), tail(14), states});
  }
  run.write("decoded_states.csv", to_csv(rows));
  run.finish();
  out << "decoded " << decodes.size() << " users\n";
  return kExitOk;
}

int cmd_hmm_sweep(const Common& c, const std::string& ys_text, const std::string& xs_text, std::ostream& out,
                  std::ostream& err) {
  Run run("hmm sweep", c, {{"y", ys_text}, {"x", xs_text}});
  require(c.out() / "hmm_model.json");
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);
  const auto decodes = decode_all(c, run, corpus, lexicon);
  const auto labels = binary_labels(corpus.timelines);
  const auto ys = parse_int_list(ys_text);
  const auto xs = parse_int_list(xs_text);
  const auto sweep = sweep_criteria(decodes, labels, xs, ys);
  std::vector<std::vector<std::string>> rows{{"x", "y", "precision_high", "recall_high", "f1_high", "macro_f1"}};
  for (const auto& r : sweep)
    rows.push_back({std::to_string(r.criterion.x), std::to_string(r.criterion.y), csv::num(r.metrics.precision_high()),
                    csv::num(r.metrics.recall_high()), csv::num(r.metrics.f1_high()), csv::num(r.metrics.macro_f1)});
  run.write("sweep.csv", to_csv(rows));
  run.write("sweep_notes.txt",
            "Reference result from the original study cohort (not reproducible without it): "
            "criterion (x=1, y=14) gave precision 60.3 and recall 58.1 for the high symptom class.\n");
  run.finish();
  out << "swept " << sweep.size() << " criteria\n";
  return kExitOk;
}

int cmd_gp_fit(const Common& c, std::ostream& out, std::ostream& err) {
  Run run("gp fit", c, json::object());
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);
  const auto config = c.window();
  const auto series = daily_series(corpus.timelines, lexicon, c.jobs);
  std::vector<GpFit> fits(series.size());
  parallel_for(series.size(), c.jobs, [&](std::size_t i) {
    const auto in = gp_inputs(corpus.timelines[i], series[i], config);
    if (in) {
      fits[i] = fit_lengthscale(in->inputs, in->targets);
    } else {
      fits[i].excluded = true;
    }
    fits[i].user_id = corpus.timelines[i].user_id;
  });
  std::vector<std::vector<std::string>> rows{{"user_id", "lengthscale", "sigma_f2", "sigma_n2", "lml", "excluded_flag"}};
  std::size_t kept = 0;
  for (const auto& f : fits) {
    if (f.excluded) {
      rows.push_back({f.user_id, "", "", "", "", "1"});
    } else {
      ++kept;
      rows.push_back({f.user_id, csv::num(f.hyper.lengthscale), csv::num(f.hyper.signal_variance),
                      csv::num(f.hyper.noise_variance), csv::num(f.log_marginal_likelihood), "0"});
    }
  }
  run.write("gp_fits.csv", to_csv(rows));
  run.finish();
  out << "fitted " << kept << " users (" << fits.size() - kept << " excluded with fewer than " << kMinGpPosts
      << " posts)\n";
  return kExitOk;
}

int cmd_gp_compare(const Common& c, std::ostream& out, std::ostream& err) {
  Run run("gp compare", c, json::object());
  const fs::path fits_path = c.out() / "gp_fits.csv";
  const auto table = read_csv(fits_path);
  run.input(fits_path);
  const auto corpus = load_corpus(c, run, err);
  std::map<std::string, Ternary> labels;
  for (const auto& t : corpus.timelines) labels[t.user_id] = label(t.cesd_score).ternary;

  const auto& header = table.front();
  const auto c_user = column(header, "user_id", fits_path);
  const auto c_len = column(header, "lengthscale", fits_path);
  const auto c_ex = column(header, "excluded_flag", fits_path);
  std::vector<GpFit> fits;
  std::vector<Ternary> groups;
  for (std::size_t r = 1; r < table.size(); ++r) {
    const auto& row = table[r];
    if (row.size() != header.size()) throw std::runtime_error(fits_path.string() + ": ragged row " + std::to_string(r + 1));
    auto it = labels.find(row[c_user]);
    if (it == labels.end()) throw std::runtime_error("user '" + row[c_user] + "' in gp_fits.csv is not in the user table");
    GpFit f;
    f.user_id = row[c_user];
    f.excluded = row[c_ex] == "1";
    if (!f.excluded) f.hyper.lengthscale = std::stod(row[c_len]);
    fits.push_back(std::move(f));
    groups.push_back(it->second);
  }
  const auto cmp = compare_groups(fits, groups);
  std::vector<std::vector<std::string>> rows{
      {"group_a", "group_b", "median_a", "median_b", "n_a", "n_b", "u", "p_two_sided", "exact"}};
  for (const auto& p : cmp.pairs)
    rows.push_back({std::string(label_name(p.first)), std::string(label_name(p.second)), csv::num(cmp.median_lengthscale.at(p.first)),
                    csv::num(cmp.median_lengthscale.at(p.second)), std::to_string(cmp.group_size.at(p.first)),
                    std::to_string(cmp.group_size.at(p.second)), csv::num(p.test.u), csv::num(p.test.p_two_sided),
                    p.test.exact ? "1" : "0"});
  run.write("gp_compare.csv", to_csv(rows));
  run.write("gp_compare_notes.txt",
            "Reference medians from the original study cohort (not reproducible without it): "
            "high-symptom group 2.77, low-symptom group 2.98 (d=14, s=3).\n");
  run.finish();
  for (const auto& [g, m] : cmp.median_lengthscale)
    out << label_name(g) << ": median lengthscale " << m << " over " << cmp.group_size.at(g) << " users\n";
  return kExitOk;
}

int cmd_stats(const Common& c, std::ostream& out, std::ostream& err) {
  Run run("stats", c, json::object());
  const auto corpus = load_corpus(c, run, err);
  const auto s = cohort_stats(corpus.timelines);
  json j{{"n_users", s.n_users},           {"mean_posts", s.mean_posts},   {"median_posts", s.median_posts},
         {"cesd_mean", s.cesd_mean},       {"cesd_sd", s.cesd_sd},         {"frac_low", s.frac_low},
         {"frac_moderate", s.frac_moderate}, {"frac_high", s.frac_high}, {"frac_binary_high", s.frac_binary_high}};
  run.write("cohort_stats.json", j.dump(2) + "\n");
  run.finish();
  out << j.dump(2) << '\n';
  return kExitOk;
}

struct FeatureArgs {
  std::size_t ngrams = 1500;
  int max_n = 3;
  int topics = 30;
  int lda_iterations = 1000;
};

int cmd_features(const Common& c, const FeatureArgs& a, std::ostream& out, std::ostream& err) {
  Run run("features", c,
          {{"ngrams", a.ngrams}, {"max_n", a.max_n}, {"topics", a.topics}, {"lda_iterations", a.lda_iterations}});
  std::optional<CategoryLexicon> categories;
  if (!c.category_lexicon.empty()) {
    run.input(require(c.category_lexicon));
    categories = CategoryLexicon::load(c.category_lexicon);
  }
  const auto corpus = load_corpus(c, run, err);
  BasicFeatureOptions opts;
  opts.ngrams = a.ngrams;
  opts.max_n = a.max_n;
  opts.topics = a.topics;
  opts.lda_iterations = a.lda_iterations;
  opts.seed = c.resolved_seed();
  const auto docs = user_documents(corpus.timelines);
  const auto block = build_basic_block(docs, opts, categories ? &*categories : nullptr);

  std::ostringstream s;
  std::vector<std::string> header{"user_id"};
  header.insert(header.end(), block.columns.begin(), block.columns.end());
  csv::write_row(s, header);
  for (std::size_t i = 0; i < corpus.timelines.size(); ++i) {
    std::vector<std::string> row{corpus.timelines[i].user_id};
    for (Eigen::Index k = 0; k < block.values.cols(); ++k) row.push_back(csv::num(block.values(static_cast<Eigen::Index>(i), k)));
    csv::write_row(s, row);
  }
  run.write("features_basic.csv", s.str());
  run.finish();
  out << "built " << block.columns.size() << " basic features for " << docs.size() << " users\n";
  return kExitOk;
}

struct TrainArgs {
  std::string configs = "1,2,3,4,5";
  std::string block_sets = "B,B+M_mu,B+dM,B+Tr,B+dTr,All";
  int folds = 5;
  double test_fraction = 0.2;
  bool no_balance = false;
};

int cmd_train(const Common& c, const TrainArgs& a, std::ostream& out, std::ostream& err) {
  Run run("train", c,
          {{"configs", a.configs},
           {"block_sets", a.block_sets},
           {"folds", a.folds},
           {"test_fraction", a.test_fraction},
           {"balance", !a.no_balance}});
  const fs::path features_path = c.out() / "features_basic.csv";
  const auto table = read_csv(features_path);
  run.input(features_path);
  const auto lexicon = load_lexicon(c, run);
  const auto corpus = load_corpus(c, run, err);

  const auto& header = table.front();
  if (header.empty() || header.front() != "user_id") throw std::runtime_error(features_path.string() + " must start with user_id");
  std::map<std::string, std::size_t> row_of;
  for (std::size_t r = 1; r < table.size(); ++r) row_of[table[r].front()] = r;

  AblationInput input;
  input.basic.name = std::string(kBasicBlock);
  input.basic.columns.assign(header.begin() + 1, header.end());
  input.basic.values.resize(static_cast<Eigen::Index>(corpus.timelines.size()), static_cast<Eigen::Index>(header.size() - 1));
  for (std::size_t i = 0; i < corpus.timelines.size(); ++i) {
    auto it = row_of.find(corpus.timelines[i].user_id);
    if (it == row_of.end())
      throw std::runtime_error("user '" + corpus.timelines[i].user_id + "' has no row in " + features_path.string());
    const auto& row = table[it->second];
    if (row.size() != header.size()) throw std::runtime_error(features_path.string() + ": ragged row for " + row.front());
    for (std::size_t k = 1; k < row.size(); ++k)
      input.basic.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1)) = std::stod(row[k]);
  }
  input.series = daily_series(corpus.timelines, lexicon, c.jobs);
  input.labels = binary_labels(corpus.timelines);

  AblationOptions opts;
  opts.config_ids = parse_int_list(a.configs);
  opts.block_sets = parse_list(a.block_sets);
  opts.folds = a.folds;
  opts.test_fraction = a.test_fraction;
  opts.balance = !a.no_balance;
  opts.seed = c.resolved_seed();
  opts.jobs = c.jobs;
  const auto report = ablation_report(input, opts);

  std::ostringstream csv_out;
  write_report_csv(csv_out, report);
  run.write("report.csv", csv_out.str());
  std::string notes;
  for (const auto& n : report.notes) notes += n + "\n";
  notes += "train rows: " + std::to_string(report.n_train) + ", test rows: " + std::to_string(report.n_test) + "\n";
  run.write("report_notes.txt", notes);

  const auto best = std::max_element(report.rows.begin(), report.rows.end(), [](const auto& x, const auto& y) {
    return x.mean_cv_macro_f1() < y.mean_cv_macro_f1();
  });
  if (best != report.rows.end()) {
    auto j = model_to_json(best->model, best->columns, best->scaler);
    j["config"] = best->config_id;
    j["blocks"] = best->blocks;
    j["penalty"] = std::string(penalty_name(best->chosen.penalty));
    j["C"] = best->chosen.c;
    j["mean_cv_macro_f1"] = best->mean_cv_macro_f1();
    run.write("model.json", j.dump(2) + "\n");
  }
  run.finish();
  out << "trained " << report.rows.size() << " models (" << report.n_train << " train / " << report.n_test << " test)\n";
  return kExitOk;
}

int cmd_report(const Common& c, const std::string& figure, int bin_width, std::ostream& out, std::ostream& err) {
  Run run("report " + figure, c, {{"figure", figure}, {"bin_width", bin_width}});
  if (figure == "post-hist") {
    if (bin_width < 1) throw std::invalid_argument("--bin-width must be >= 1");
    const auto corpus = load_corpus(c, run, err);
    std::map<std::size_t, std::size_t> bins;
    std::size_t top = 0;
    for (const auto& t : corpus.timelines) {
      const auto b = t.posts.size() / static_cast<std::size_t>(bin_width);
      ++bins[b];
      top = std::max(top, b);
    }
    std::vector<std::vector<std::string>> rows{{"bin_start", "bin_end", "users"}};
    for (std::size_t b = 0; b <= top && !corpus.timelines.empty(); ++b)
      rows.push_back({std::to_string(b * static_cast<std::size_t>(bin_width)),
                      std::to_string((b + 1) * static_cast<std::size_t>(bin_width)), std::to_string(bins[b])});
    run.write("fig_post_hist.csv", to_csv(rows));
  } else if (figure == "sweep") {
    const fs::path p = c.out() / "sweep.csv";
    const auto table = read_csv(p);
    run.input(p);
    const auto& h = table.front();
    const auto cx = column(h, "x", p), cy = column(h, "y", p), cp = column(h, "precision_high", p),
               cr = column(h, "recall_high", p);
    std::vector<std::vector<std::string>> rows{{"y", "x", "precision_high", "recall_high"}};
    for (std::size_t r = 1; r < table.size(); ++r)
      rows.push_back({table[r][cy], table[r][cx], table[r][cp], table[r][cr]});
    run.write("fig_sweep.csv", to_csv(rows));
  } else if (figure == "ablation") {
    const fs::path p = c.out() / "report.csv";
    const auto table = read_csv(p);
    run.input(p);
    const auto& h = table.front();
    const auto cc = column(h, "config", p), cb = column(h, "blocks", p), cf = column(h, "f1_high", p);
    std::vector<std::string> sets;
    std::map<std::string, std::map<std::string, std::string>> grid;
    for (std::size_t r = 1; r < table.size(); ++r) {
      const auto& row = table[r];
      if (row[cc] == "baseline") continue;
      if (std::find(sets.begin(), sets.end(), row[cb]) == sets.end()) sets.push_back(row[cb]);
      grid[row[cc]][row[cb]] = row[cf];
    }
    std::vector<std::string> header{"config", "d", "s"};
    header.insert(header.end(), sets.begin(), sets.end());
    std::vector<std::vector<std::string>> rows{header};
    for (const auto& [config, cells] : grid) {
      const auto w = study_config(std::stoi(config));
      std::vector<std::string> row{config, std::to_string(w.d), std::to_string(w.s)};
      for (const auto& s : sets) row.push_back(cells.count(s) ? cells.at(s) : "");
      rows.push_back(std::move(row));
    }
    run.write("fig_ablation.csv", to_csv(rows));
  } else {
    throw std::invalid_argument("--figure must be post-hist, sweep or ablation");
  }
  run.finish();
  out << "wrote figure data for " << figure << '\n';
  return kExitOk;
}

void add_common(CLI::App* app, Common& c, bool corpus = true) {
  if (corpus) {
    app->add_option("--posts", c.posts, "Posts file (JSONL or CSV); defaults to <out-dir>/posts.jsonl");
    app->add_option("--users", c.users, "User table CSV; defaults to <out-dir>/users.csv");
    app->add_option("--format", c.format, "Post format: jsonl or csv (default: by extension)");
    app->add_option("--lexicon", c.lexicon, "Sentiment lexicon TSV (term<TAB>strength)");
    app->add_option("--negations", c.negations, "Negation word list");
    app->add_option("--boosters", c.boosters, "Booster TSV (word<TAB>offset)");
    app->add_option("--category-lexicon", c.category_lexicon, "Category lexicon (category<TAB>w1,w2,stem*)");
    app->add_option("--d", c.d, "Window length in days");
    app->add_option("--s", c.s, "Window stride in days");
    app->add_option("--mode", c.mode, "Window mode: truncate or full");
  }
  app->add_option("--seed", c.seed, "Random seed (fallback: MOODSCOPE_SEED, then 0)");
  app->add_option("--jobs", c.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app->add_option("--out-dir", c.out_dir, "Directory for outputs and upstream artifacts");
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal mood profiles from timestamped posts", "moodscope"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Common common;
  std::function<int()> action;

  auto* validate = app.add_subcommand("validate", "Check input files");
  add_common(validate, common);
  validate->callback([&] { action = [&] { return cmd_validate(common, out, err); }; });

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic cohort");
  add_common(simulate, common, false);
  simulate->add_option("--spec", sim.spec, "Cohort spec JSON");
  simulate->add_option("--preset", sim.preset, "hidden (two-state generator) or markov (symbol chain)");
  simulate->add_option("--n", sim.n_per_group, "Users per group for presets")->check(CLI::PositiveNumber);
  simulate->callback([&] { action = [&] { return cmd_simulate(common, sim, out); }; });

  auto* profile = app.add_subcommand("profile", "Windowed mood profiles");
  add_common(profile, common);
  profile->callback([&] { action = [&] { return cmd_profile(common, out, err); }; });

  auto* hmm = app.add_subcommand("hmm", "Hidden Markov model over daily mood symbols");
  hmm->require_subcommand(1);
  int iters = 10;
  auto* hmm_fit = hmm->add_subcommand("fit", "Fit the two-state model");
  add_common(hmm_fit, common);
  hmm_fit->add_option("--iters", iters, "EM iterations")->check(CLI::NonNegativeNumber);
  hmm_fit->callback([&] { action = [&] { return cmd_hmm_fit(common, iters, out, err); }; });
  auto* hmm_decode = hmm->add_subcommand("decode", "Viterbi-decode every user");
  add_common(hmm_decode, common);
  hmm_decode->callback([&] { action = [&] { return cmd_hmm_decode(common, out, err); }; });
  std::string ys = "7,14", xs = "1,2,3,4,5,6,7";
  auto* hmm_sweep = hmm->add_subcommand("sweep", "Score (x, y) criteria against labels");
  add_common(hmm_sweep, common);
  hmm_sweep->add_option("--y", ys, "Comma-separated y values");
  hmm_sweep->add_option("--x", xs, "Comma-separated x values");
  hmm_sweep->callback([&] { action = [&] { return cmd_hmm_sweep(common, ys, xs, out, err); }; });

  auto* gp = app.add_subcommand("gp", "Per-user Gaussian process lengthscales");
  gp->require_subcommand(1);
  auto* gp_fit = gp->add_subcommand("fit", "Fit lengthscales");
  add_common(gp_fit, common);
  gp_fit->callback([&] { action = [&] { return cmd_gp_fit(common, out, err); }; });
  auto* gp_compare = gp->add_subcommand("compare", "Compare lengthscales across symptom groups");
  add_common(gp_compare, common);
  gp_compare->callback([&] { action = [&] { return cmd_gp_compare(common, out, err); }; });

  auto* stats = app.add_subcommand("stats", "Cohort summary");
  add_common(stats, common);
  stats->callback([&] { action = [&] { return cmd_stats(common, out, err); }; });

  FeatureArgs feat;
  auto* features = app.add_subcommand("features", "Basic text features");
  add_common(features, common);
  features->add_option("--ngrams", feat.ngrams, "Vocabulary size");
  features->add_option("--max-n", feat.max_n, "Longest n-gram");
  features->add_option("--topics", feat.topics, "LDA topics (0 disables)");
  features->add_option("--lda-iters", feat.lda_iterations, "Gibbs sweeps");
  features->callback([&] { action = [&] { return cmd_features(common, feat, out, err); }; });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Logistic-regression ablation");
  add_common(train_cmd, common);
  train_cmd->add_option("--configs", train.configs, "Window configuration ids (1..5)");
  train_cmd->add_option("--block-sets", train.block_sets, "Comma-separated block sets");
  train_cmd->add_option("--folds", train.folds, "Cross-validation folds");
  train_cmd->add_option("--test-fraction", train.test_fraction, "Held-out fraction per class");
  train_cmd->add_flag("--no-balance", train.no_balance, "Keep the class imbalance");
  train_cmd->callback([&] { action = [&] { return cmd_train(common, train, out, err); }; });

  std::string figure;
  int bin_width = 10;
  auto* report = app.add_subcommand("report", "Figure-ready CSVs");
  add_common(report, common);
  report->add_option("--figure", figure, "post-hist, sweep or ablation")->required();
  report->add_option("--bin-width", bin_width, "Histogram bin width (posts)");
  report->callback([&] { action = [&] { return cmd_report(common, figure, bin_width, out, err); }; });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInvalidInput;
  }
  try {
    return action ? action() : kExitFailure;
  } catch (const MissingArtifact& e) {
    err << "error: " << e.what() << '\n';
    return kExitMissingArtifact;
  } catch (const IngestError& e) {
    for (const auto& p : e.problems()) err << "error: " << p << '\n';
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace moodscope
