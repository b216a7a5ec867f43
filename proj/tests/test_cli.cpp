#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "moodscope/cli.hpp"

using namespace moodscope;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

fs::path fresh_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("moodscope_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

/// Runs the whole pipeline into `dir` and returns the commands' exit codes.
std::vector<int> pipeline(const fs::path& dir) {
  const std::string d = dir.string();
  std::vector<int> codes;
  for (const auto& args : std::vector<std::vector<std::string>>{
           {"simulate", "--preset", "hidden", "--n", "12", "--seed", "5", "--out-dir", d},
           {"validate", "--out-dir", d},
           {"profile", "--out-dir", d},
           {"hmm", "fit", "--out-dir", d},
           {"hmm", "decode", "--out-dir", d},
           {"hmm", "sweep", "--out-dir", d},
           {"gp", "fit", "--out-dir", d},
           {"gp", "compare", "--out-dir", d},
           {"stats", "--out-dir", d},
           {"features", "--ngrams", "40", "--topics", "3", "--lda-iters", "10", "--seed", "1", "--out-dir", d},
           {"train", "--configs", "2", "--block-sets", "B,All", "--folds", "3", "--seed", "2", "--out-dir", d},
           {"report", "--figure", "post-hist", "--out-dir", d},
           {"report", "--figure", "sweep", "--out-dir", d},
           {"report", "--figure", "ablation", "--out-dir", d},
       }) {
    const auto r = run(args);
    INFO(args[0], " stderr: ", r.err);
    codes.push_back(r.code);
  }
  return codes;
}

}  // namespace

TEST_CASE("full pipeline succeeds and writes every artifact") {
  const auto dir = fresh_dir("pipeline");
  for (int code : pipeline(dir)) CHECK(code == kExitOk);
  for (const char* f : {"posts.jsonl", "users.csv", "trace.csv", "cohort_spec.json", "profile_d14_s3.csv",
                        "daily_symbols.csv", "hmm_model.json", "observation_transitions.csv", "decoded_states.csv",
                        "sweep.csv", "sweep_notes.txt", "gp_fits.csv", "gp_compare.csv", "gp_compare_notes.txt", "cohort_stats.json",
                        "features_basic.csv", "report.csv", "report_notes.txt", "model.json", "fig_post_hist.csv",
                        "fig_sweep.csv", "fig_ablation.csv", "manifest_simulate.json", "manifest_hmm_fit.json",
                        "manifest_train.json"})
    CHECK_MESSAGE(fs::exists(dir / f), f);

  CHECK(line_count(dir / "users.csv") == 25);
  CHECK(line_count(dir / "profile_d14_s3.csv") == 25);
  CHECK(line_count(dir / "sweep.csv") == 1 + 14);
  CHECK(line_count(dir / "report.csv") == 1 + 2 + 2);

  const auto model = nlohmann::json::parse(slurp(dir / "hmm_model.json"));
  CHECK(model.at("A").size() == 2);
  CHECK(model.at("B")[0].size() == 4);

  const auto manifest = nlohmann::json::parse(slurp(dir / "manifest_hmm_fit.json"));
  CHECK(manifest.at("command") == "hmm fit");
  CHECK(manifest.at("version") == kToolVersion);
  CHECK(manifest.at("inputs").size() >= 2);
  CHECK(manifest.at("outputs").size() >= 1);
  CHECK_FALSE(manifest.contains("timestamp"));
}

TEST_CASE("same seed gives byte-identical outputs") {
  const auto a = fresh_dir("repro_a");
  const auto b = fresh_dir("repro_b");
  pipeline(a);
  pipeline(b);
  for (const auto& entry : fs::directory_iterator(a)) {
    const auto name = entry.path().filename();
    const auto left = slurp(entry.path());
    auto right = slurp(b / name);
    if (name.string().rfind("manifest_", 0) == 0) {
      // Manifests record paths, which differ between the two directories.
      auto strip = [](nlohmann::json j) {
        for (auto& i : j["inputs"]) i.erase("path");
        j.erase("outputs");
        j.erase("config");
        j.erase("config_hash");
        return j.dump();
      };
      CHECK_MESSAGE(strip(nlohmann::json::parse(left)) == strip(nlohmann::json::parse(right)), name.string());
    } else {
      CHECK_MESSAGE(left == right, name.string());
    }
  }
}

TEST_CASE("rerunning a command in place reproduces its manifest") {
  const auto dir = fresh_dir("rerun");
  const std::vector<std::string> args{"simulate", "--preset", "markov", "--n", "4", "--seed", "9", "--out-dir", dir.string()};
  CHECK(run(args).code == kExitOk);
  const auto first = slurp(dir / "manifest_simulate.json");
  CHECK(run(args).code == kExitOk);
  CHECK(slurp(dir / "manifest_simulate.json") == first);
}

TEST_CASE("missing upstream artifacts exit with code 3") {
  const auto dir = fresh_dir("missing");
  CHECK(run({"simulate", "--preset", "markov", "--n", "3", "--out-dir", dir.string()}).code == kExitOk);
  const auto decode = run({"hmm", "decode", "--out-dir", dir.string()});
  CHECK(decode.code == kExitMissingArtifact);
  CHECK(decode.err.find("hmm_model.json") != std::string::npos);
  CHECK(run({"gp", "compare", "--out-dir", dir.string()}).code == kExitMissingArtifact);
  CHECK(run({"train", "--out-dir", dir.string()}).code == kExitMissingArtifact);
}

TEST_CASE("invalid input exits with code 2 and names the problem") {
  const auto dir = fresh_dir("invalid");
  {
    std::ofstream(dir / "users.csv") << "user_id,survey_date,cesd_score\nbob,2012-06-01,61\n";
    std::ofstream(dir / "posts.jsonl") << "";
  }
  const auto r = run({"validate", "--out-dir", dir.string()});
  CHECK(r.code == kExitInvalidInput);
  CHECK(r.err.find("bob") != std::string::npos);
  CHECK(run({"profile", "--d", "0", "--out-dir", dir.string()}).code != kExitOk);
  CHECK(run({"nonsense"}).code == kExitInvalidInput);
}

TEST_CASE("validate reports counts on fixture data") {
  const std::string fx = MOODSCOPE_FIXTURES;
  const auto r = run({"validate", "--posts", fx + "/posts_clean.jsonl", "--users", fx + "/users_clean.csv", "--out-dir",
                      fresh_dir("validate").string()});
  CHECK(r.code == kExitOk);
  CHECK(r.out.find("ok: 2 users, 6 posts") != std::string::npos);
}

TEST_CASE("version and help") {
  const auto v = run({"--version"});
  CHECK(v.code == kExitOk);
  CHECK(v.out.find(kToolVersion) != std::string::npos);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a("foobar") == 0x85944171f73967e8ULL);
}
