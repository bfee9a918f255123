// Exercises the library strictly through its C interface.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgfnoma/sgfnoma.h"

namespace fs = std::filesystem;

namespace {

fs::path tmp(const std::string& name) {
  const char* root = std::getenv("SGF_TEST_TMP");
  const fs::path dir = fs::path(root ? root : fs::temp_directory_path().string()) / "capi";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::size_t count_lines(const fs::path& p) {
  const std::string s = slurp(p);
  std::size_t n = 0;
  for (char c : s) n += c == '\n';
  return n;
}

// Small network, short runs.
sgf_config* tiny() {
  sgf_config* c = nullptr;
  REQUIRE(sgf_config_new(&c) == SGF_OK);
  const char* sets[][2] = {{"hidden_layers", "[16, 8]"}, {"stream_hidden", "8"},
                           {"episodes", "3"},           {"steps_per_episode", "20"},
                           {"batch_size", "8"},         {"replay_capacity", "60"},
                           {"target_sync_period", "25"}, {"eval_episodes", "2"},
                           {"open_loop_slots", "40"}};
  for (const auto& kv : sets) REQUIRE(sgf_config_set(c, kv[0], kv[1]) == SGF_OK);
  return c;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(sgf_version()).size() > 0);
  CHECK(std::string(sgf_status_name(SGF_OK)) == "ok");
  CHECK(std::string(sgf_status_name(SGF_ERR_DIMENSION)) == "dimension mismatch");
  CHECK(std::string(sgf_status_name(static_cast<sgf_status>(99))) == "unknown status");
}

TEST_CASE("null handles are rejected") {
  CHECK(sgf_config_new(nullptr) == SGF_ERR_ARGUMENT);
  CHECK(std::string(sgf_last_error()).size() > 0);
  CHECK(sgf_config_set(nullptr, "episodes", "3") == SGF_ERR_ARGUMENT);
  CHECK(sgf_config_validate(nullptr) == SGF_ERR_ARGUMENT);
  CHECK(sgf_trainer_run(nullptr, 1) == SGF_ERR_ARGUMENT);
  CHECK(sgf_trainer_progress(nullptr, nullptr, nullptr) == SGF_ERR_ARGUMENT);
  sgf_trainer* t = nullptr;
  CHECK(sgf_trainer_new(nullptr, &t) == SGF_ERR_ARGUMENT);
  CHECK(t == nullptr);
  int n = 0;
  CHECK(sgf_pools_channels(nullptr, &n) == SGF_ERR_ARGUMENT);
  // Freeing null is a no-op.
  sgf_config_free(nullptr);
  sgf_trainer_free(nullptr);
  sgf_pools_free(nullptr);
}

TEST_CASE("config errors carry the key") {
  sgf_config* c = nullptr;
  REQUIRE(sgf_config_new(&c) == SGF_OK);
  CHECK(sgf_config_set(c, "no_such_key", "1") == SGF_ERR_CONFIG);
  CHECK(std::string(sgf_last_error()).find("no_such_key") != std::string::npos);
  CHECK(sgf_config_set(c, "episodes", "\"x\"") == SGF_ERR_CONFIG);
  CHECK(std::string(sgf_last_error()).find("episodes") != std::string::npos);
  CHECK(sgf_config_set(c, "gf_target_rate", "50") == SGF_OK);
  CHECK(sgf_config_validate(c) == SGF_ERR_CONFIG);
  sgf_config_free(c);

  sgf_config* missing = nullptr;
  CHECK(sgf_config_load(tmp("absent.json").c_str(), &missing) != SGF_OK);
  CHECK(missing == nullptr);
}

TEST_CASE("config JSON through a caller buffer") {
  sgf_config* c = tiny();
  std::size_t need = 0;
  REQUIRE(sgf_config_to_json(c, nullptr, 0, &need) == SGF_OK);
  REQUIRE(need > 1);
  std::vector<char> buf(need);
  REQUIRE(sgf_config_to_json(c, buf.data(), buf.size(), nullptr) == SGF_OK);
  const std::string text(buf.data());
  CHECK(text.size() + 1 == need);
  CHECK(text.find("\"episodes\": 3") != std::string::npos);

  // Truncation keeps the terminator.
  char small[8];
  REQUIRE(sgf_config_to_json(c, small, sizeof small, nullptr) == SGF_OK);
  CHECK(std::string(small) == text.substr(0, 7));

  // Loading the dump reproduces it.
  const fs::path path = tmp("config.json");
  std::ofstream(path) << text;
  sgf_config* back = nullptr;
  REQUIRE(sgf_config_load(path.c_str(), &back) == SGF_OK);
  std::vector<char> buf2(need);
  REQUIRE(sgf_config_to_json(back, buf2.data(), buf2.size(), nullptr) == SGF_OK);
  CHECK(std::string(buf2.data()) == text);

  sgf_config* copy = nullptr;
  REQUIRE(sgf_config_clone(c, &copy) == SGF_OK);
  REQUIRE(sgf_config_set(copy, "episodes", "9") == SGF_OK);
  REQUIRE(sgf_config_to_json(c, buf2.data(), buf2.size(), nullptr) == SGF_OK);
  CHECK(std::string(buf2.data()) == text);
  sgf_config_free(copy);
  sgf_config_free(back);
  sgf_config_free(c);
}

TEST_CASE("train, checkpoint, resume and evaluate") {
  sgf_config* c = tiny();
  sgf_trainer* t = nullptr;
  REQUIRE(sgf_trainer_new(c, &t) == SGF_OK);
  const fs::path metrics = tmp("metrics.csv");
  REQUIRE(sgf_trainer_open_metrics(t, metrics.c_str()) == SGF_OK);
  REQUIRE(sgf_trainer_run(t, 1) == SGF_OK);

  int done = 0;
  long long step = 0;
  REQUIRE(sgf_trainer_progress(t, &done, &step) == SGF_OK);
  CHECK(done == 1);
  CHECK(step == 20);

  const fs::path ck = tmp("ck.cbor");
  REQUIRE(sgf_trainer_save(t, ck.c_str(), 1) == SGF_OK);
  REQUIRE(sgf_trainer_run(t, -1) == SGF_OK);
  sgf_trainer_free(t);  // flushes the metrics file
  CHECK(count_lines(metrics) == 3 * 20 + 1);

  sgf_trainer* resumed = nullptr;
  REQUIRE(sgf_trainer_load(ck.c_str(), c, &resumed) == SGF_OK);
  REQUIRE(sgf_trainer_progress(resumed, &done, &step) == SGF_OK);
  CHECK(done == 1);
  REQUIRE(sgf_trainer_run(resumed, -1) == SGF_OK);

  sgf_trainer* straight = nullptr;
  REQUIRE(sgf_trainer_new(c, &straight) == SGF_OK);
  REQUIRE(sgf_trainer_run(straight, -1) == SGF_OK);
  std::size_t n = 0;
  REQUIRE(sgf_trainer_episode_rewards(straight, nullptr, 0, &n) == SGF_OK);
  REQUIRE(n == 3);
  std::vector<double> a(n), b(n);
  sgf_trainer_episode_rewards(straight, a.data(), a.size(), nullptr);
  sgf_trainer_episode_rewards(resumed, b.data(), b.size(), nullptr);
  CHECK(a == b);

  sgf_stats sa{}, sb{};
  const fs::path slots = tmp("eval.csv");
  REQUIRE(sgf_trainer_evaluate(straight, 2, slots.c_str(), &sa) == SGF_OK);
  REQUIRE(sgf_trainer_evaluate(resumed, 2, nullptr, &sb) == SGF_OK);
  CHECK(sa.slots == 40);
  CHECK(sa.mean_capacity == sb.mean_capacity);
  CHECK(sa.mean_reward == sb.mean_reward);
  CHECK(sa.constraint_rate >= 0.0);
  CHECK(sa.constraint_rate <= 1.0);
  CHECK(count_lines(slots) == 41);

  const fs::path summary = tmp("episodes.csv");
  REQUIRE(sgf_trainer_write_summary(straight, summary.c_str()) == SGF_OK);
  CHECK(count_lines(summary) == 4);

  sgf_config* stored = nullptr;
  REQUIRE(sgf_trainer_config(resumed, &stored) == SGF_OK);
  CHECK(sgf_config_validate(stored) == SGF_OK);
  sgf_config_free(stored);

  sgf_trainer_free(resumed);
  sgf_trainer_free(straight);
  sgf_config_free(c);
}

TEST_CASE("checkpoint errors map to status codes") {
  sgf_config* c = tiny();
  sgf_trainer* t = nullptr;
  REQUIRE(sgf_trainer_new(c, &t) == SGF_OK);
  const fs::path ck = tmp("small.cbor");
  REQUIRE(sgf_trainer_save(t, ck.c_str(), 0) == SGF_OK);
  sgf_trainer_free(t);

  sgf_config* other = tiny();
  REQUIRE(sgf_config_set(other, "num_gf", "9") == SGF_OK);
  sgf_trainer* bad = nullptr;
  CHECK(sgf_trainer_load(ck.c_str(), other, &bad) == SGF_ERR_DIMENSION);
  CHECK(std::string(sgf_last_error()).find("9 requested") != std::string::npos);
  CHECK(bad == nullptr);
  CHECK(sgf_trainer_load(tmp("nope.cbor").c_str(), nullptr, &bad) == SGF_ERR_IO);
  std::ofstream(tmp("junk.cbor")) << "junk";
  CHECK(sgf_trainer_load(tmp("junk.cbor").c_str(), nullptr, &bad) == SGF_ERR_FORMAT);
  sgf_config_free(other);
  sgf_config_free(c);
}

TEST_CASE("pools, baselines and manifest") {
  sgf_config* c = tiny();
  sgf_trainer* t = nullptr;
  REQUIRE(sgf_trainer_new(c, &t) == SGF_OK);
  REQUIRE(sgf_trainer_run(t, -1) == SGF_OK);

  // Two evaluation episodes of 20 slots fall short of the 100-slot minimum.
  sgf_pools* pools = nullptr;
  CHECK(sgf_pools_extract(t, &pools) == SGF_ERR_CONFIG);
  sgf_trainer_free(t);

  REQUIRE(sgf_config_set(c, "eval_episodes", "5") == SGF_OK);
  REQUIRE(sgf_trainer_new(c, &t) == SGF_OK);
  REQUIRE(sgf_trainer_run(t, -1) == SGF_OK);
  REQUIRE(sgf_pools_extract(t, &pools) == SGF_OK);
  int channels = 0;
  REQUIRE(sgf_pools_channels(pools, &channels) == SGF_OK);
  CHECK(channels == 3);
  std::size_t count = 0;
  REQUIRE(sgf_pools_levels(pools, 0, nullptr, 0, &count) == SGF_OK);
  CHECK(count >= 1);
  std::vector<double> watts(count);
  REQUIRE(sgf_pools_levels(pools, 0, watts.data(), watts.size(), nullptr) == SGF_OK);
  for (double w : watts) CHECK((w >= 0.1 - 1e-12 && w <= 0.9 + 1e-12));
  CHECK(sgf_pools_levels(pools, 3, nullptr, 0, &count) == SGF_ERR_ARGUMENT);

  const fs::path pj = tmp("pools.json"), pt = tmp("pools.txt");
  REQUIRE(sgf_pools_save(pools, c, pj.c_str(), pt.c_str()) == SGF_OK);
  sgf_pools* back = nullptr;
  REQUIRE(sgf_pools_load(pj.c_str(), &back) == SGF_OK);
  std::vector<double> again(watts.size());
  REQUIRE(sgf_pools_levels(back, 0, again.data(), again.size(), &count) == SGF_OK);
  CHECK(again == watts);
  CHECK(slurp(pt).find("channel") != std::string::npos);

  const fs::path cmp = tmp("comparison.csv");
  REQUIRE(sgf_compare_baselines(t, back, cmp.c_str(), 0) == SGF_OK);
  CHECK(count_lines(cmp) == 1 + 4 + 9);
  REQUIRE(sgf_compare_baselines(t, nullptr, cmp.c_str(), 1) == SGF_OK);
  CHECK(count_lines(cmp) == 1 + 2 * 13);

  const char* outputs[] = {"comparison.csv", "pools.json"};
  const fs::path man = tmp("manifest.json");
  REQUIRE(sgf_write_manifest(c, "compare", outputs, 2, 0.5, man.c_str()) == SGF_OK);
  CHECK(slurp(man).find("\"pools.json\"") != std::string::npos);
  CHECK(sgf_write_manifest(c, "compare", nullptr, 2, 0.5, man.c_str()) == SGF_ERR_ARGUMENT);

  sgf_pools_free(back);
  sgf_pools_free(pools);
  sgf_trainer_free(t);
  sgf_config_free(c);
}

TEST_CASE("sweeps report progress per run") {
  sgf_config* c = tiny();
  REQUIRE(sgf_config_set(c, "seeds", "[1]") == SGF_OK);
  REQUIRE(sgf_config_set(c, "episodes", "2") == SGF_OK);
  REQUIRE(sgf_config_set(c, "sweep_level_counts", "[1, 3]") == SGF_OK);
  std::vector<int> seen;
  auto cb = [](const char*, int value, uint64_t, double, int, double, void* user) {
    static_cast<std::vector<int>*>(user)->push_back(value);
  };
  const fs::path csv = tmp("sweep.csv");
  REQUIRE(sgf_sweep(c, SGF_SWEEP_LEVELS, csv.c_str(), cb, &seen) == SGF_OK);
  CHECK(seen == std::vector<int>{1, 3});
  CHECK(count_lines(csv) == 3);
  CHECK(sgf_sweep(c, static_cast<sgf_sweep_kind>(7), csv.c_str(), nullptr, nullptr) ==
        SGF_ERR_CONFIG);
  sgf_config_free(c);
}
