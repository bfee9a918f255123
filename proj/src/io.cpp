/*
 *  Copyright 2026 The sgfnoma Authors
 *
 *  Licensed under the Apache License, Version 2.0 (the "License");
 *  you may not use this file except in compliance with the License.
 *  You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 *  Unless required by applicable law or agreed to in writing, software
 *  distributed under the License is distributed on an "AS IS" BASIS,
 *  WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 *  See the License for the specific language governing permissions and
 *  limitations under the License.
 */

#include "sgfnoma/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iterator>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "sgfnoma/errors.hpp"

namespace sgf {

using json = nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs assume a little-endian host");

namespace {

// ---- typed readers -------------------------------------------------------

[[noreturn]] void bad(const std::string& key, const std::string& what) {
  throw ConfigError(key + ": " + what);
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

int as_int(const std::string& key, const json& v) {
  if (!v.is_number_integer()) bad(key, "expected an integer");
  const auto x = v.get<long long>();
  if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max())
    bad(key, "integer out of range");
  return static_cast<int>(x);
}

std::uint64_t as_u64(const std::string& key, const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0))
    bad(key, "expected a non-negative integer");
  return v.get<std::uint64_t>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

template <class T, class F>
std::vector<T> as_list(const std::string& key, const json& v, F each) {
  if (!v.is_array()) bad(key, "expected a list");
  std::vector<T> out;
  for (const json& x : v) out.push_back(each(key, x));
  return out;
}

// ---- key table -----------------------------------------------------------

struct KeySpec {
  const char* name;
  std::function<void(ExperimentConfig&, const json&)> set;
  std::function<json(const ExperimentConfig&)> get;  // empty: input-only key
};

#define SGF_NET_DOUBLE(field)                                                     \
  KeySpec{#field, [](ExperimentConfig& c, const json& v) {                        \
            c.network.field = as_double(#field, v); },                            \
          [](const ExperimentConfig& c) { return json(c.network.field); }}
#define SGF_NET_INT(field)                                                        \
  KeySpec{#field, [](ExperimentConfig& c, const json& v) {                        \
            c.network.field = as_int(#field, v); },                               \
          [](const ExperimentConfig& c) { return json(c.network.field); }}
#define SGF_EXP_DOUBLE(field)                                                     \
  KeySpec{#field, [](ExperimentConfig& c, const json& v) {                        \
            c.field = as_double(#field, v); },                                    \
          [](const ExperimentConfig& c) { return json(c.field); }}
#define SGF_EXP_INT(field)                                                        \
  KeySpec{#field, [](ExperimentConfig& c, const json& v) { c.field = as_int(#field, v); }, \
          [](const ExperimentConfig& c) { return json(c.field); }}
#define SGF_EXP_INT_LIST(field)                                                   \
  KeySpec{#field, [](ExperimentConfig& c, const json& v) {                        \
            c.field = as_list<int>(#field, v, as_int); },                         \
          [](const ExperimentConfig& c) { return json(c.field); }}

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      SGF_NET_DOUBLE(cell_radius),
      SGF_NET_DOUBLE(path_loss_exp),
      SGF_NET_DOUBLE(noise_power),
      KeySpec{"noise_power_dbm",
              [](ExperimentConfig& c, const json& v) {
                c.network.noise_power =
                    std::pow(10.0, (as_double("noise_power_dbm", v) - 30.0) / 10.0);
              },
              {}},
      SGF_NET_DOUBLE(subchannel_bandwidth),
      SGF_NET_INT(num_subchannels),
      SGF_NET_DOUBLE(gb_target_rate),
      SGF_NET_DOUBLE(gf_target_rate),
      SGF_NET_DOUBLE(qos_rate_scale),
      KeySpec{"power_levels",
              [](ExperimentConfig& c, const json& v) {
                c.network.power_levels = as_list<double>("power_levels", v, as_double);
              },
              [](const ExperimentConfig& c) { return json(c.network.power_levels); }},
      KeySpec{"num_power_levels",
              [](ExperimentConfig& c, const json& v) {
                const int n = as_int("num_power_levels", v);
                if (n < 1) bad("num_power_levels", "must be >= 1");
                const auto& lv = c.network.power_levels;
                if (lv.empty()) bad("num_power_levels", "no level range to subdivide");
                const auto [lo, hi] = std::minmax_element(lv.begin(), lv.end());
                c.network.power_levels = evenly_spaced_levels(*lo, *hi, n);
              },
              {}},
      SGF_NET_DOUBLE(max_user_power),
      KeySpec{"max_channel_gf_power",
              [](ExperimentConfig& c, const json& v) {
                c.network.max_channel_gf_power =
                    v.is_null() ? std::numeric_limits<double>::infinity()
                                : as_double("max_channel_gf_power", v);
              },
              [](const ExperimentConfig& c) {
                return std::isinf(c.network.max_channel_gf_power)
                           ? json(nullptr)
                           : json(c.network.max_channel_gf_power);
              }},
      SGF_NET_DOUBLE(gb_power),
      KeySpec{"topology",
              [](ExperimentConfig& c, const json& v) {
                const std::string s = as_string("topology", v);
                if (s == "fixed") c.network.topology = TopologyMode::fixed;
                else if (s == "poisson") c.network.topology = TopologyMode::poisson;
                else bad("topology", "expected \"fixed\" or \"poisson\"");
              },
              [](const ExperimentConfig& c) { return json(to_string(c.network.topology)); }},
      SGF_NET_INT(num_gf),
      SGF_NET_INT(num_gb),
      SGF_NET_DOUBLE(gf_density),
      SGF_NET_DOUBLE(gb_density),
      SGF_NET_INT(max_gf_per_channel),
      KeySpec{"allow_idle",
              [](ExperimentConfig& c, const json& v) {
                c.network.allow_idle = as_bool("allow_idle", v);
              },
              [](const ExperimentConfig& c) { return json(c.network.allow_idle); }},
      KeySpec{"rayleigh_fading",
              [](ExperimentConfig& c, const json& v) {
                c.network.rayleigh_fading = as_bool("rayleigh_fading", v);
              },
              [](const ExperimentConfig& c) { return json(c.network.rayleigh_fading); }},

      SGF_EXP_INT(episodes),
      SGF_EXP_INT(steps_per_episode),
      SGF_EXP_DOUBLE(discount),
      KeySpec{"algorithm",
              [](ExperimentConfig& c, const json& v) {
                const std::string s = as_string("algorithm", v);
                if (s == "ddqn") c.algorithm = Algorithm::ddqn;
                else if (s == "dueling" || s == "dueling_ddqn") c.algorithm = Algorithm::dueling_ddqn;
                else bad("algorithm", "expected \"ddqn\" or \"dueling\"");
              },
              [](const ExperimentConfig& c) { return json(to_string(c.algorithm)); }},
      SGF_EXP_INT_LIST(hidden_layers),
      SGF_EXP_INT(stream_hidden),
      SGF_EXP_DOUBLE(learning_rate),
      SGF_EXP_DOUBLE(adam_beta1),
      SGF_EXP_DOUBLE(adam_beta2),
      SGF_EXP_DOUBLE(adam_epsilon),
      SGF_EXP_DOUBLE(grad_clip),
      SGF_EXP_INT(replay_capacity),
      SGF_EXP_INT(batch_size),
      SGF_EXP_INT(target_sync_period),
      SGF_EXP_DOUBLE(epsilon_start),
      SGF_EXP_DOUBLE(epsilon_end),
      SGF_EXP_DOUBLE(epsilon_decay_fraction),
      KeySpec{"permute_observation",
              [](ExperimentConfig& c, const json& v) {
                c.permute_observation = as_bool("permute_observation", v);
              },
              [](const ExperimentConfig& c) { return json(c.permute_observation); }},
      KeySpec{"seed",
              [](ExperimentConfig& c, const json& v) { c.seed = as_u64("seed", v); },
              [](const ExperimentConfig& c) { return json(c.seed); }},
      KeySpec{"seeds",
              [](ExperimentConfig& c, const json& v) {
                c.seeds = as_list<std::uint64_t>("seeds", v, as_u64);
              },
              [](const ExperimentConfig& c) { return json(c.seeds); }},
      SGF_EXP_INT(eval_episodes),
      SGF_EXP_DOUBLE(pool_min_frequency),
      SGF_EXP_INT(moving_average_window),
      SGF_EXP_INT(open_loop_slots),
      SGF_EXP_INT(fresh_users),
      SGF_EXP_DOUBLE(fixed_power_level),
      SGF_EXP_INT_LIST(sweep_level_counts),
      SGF_EXP_INT_LIST(sweep_cluster_sizes),
      SGF_EXP_INT_LIST(sweep_agent_counts),
  };
  return table;
}

#undef SGF_NET_DOUBLE
#undef SGF_NET_INT
#undef SGF_EXP_DOUBLE
#undef SGF_EXP_INT
#undef SGF_EXP_INT_LIST

const KeySpec& find_key(const std::string& key) {
  for (const KeySpec& k : key_table())
    if (key == k.name) return k;
  throw ConfigError(key + ": unknown configuration key");
}

json config_to_json(const ExperimentConfig& config) {
  json j = json::object();
  for (const KeySpec& k : key_table())
    if (k.get) j[k.name] = k.get(config);
  return j;
}

ExperimentConfig config_from_json(const json& doc, ExperimentConfig config) {
  if (!doc.is_object()) throw ConfigError("config: document must be a JSON object");
  if (doc.contains("power_levels") && doc.contains("num_power_levels"))
    throw ConfigError("num_power_levels: conflicts with power_levels");
  // Level counts subdivide whatever range is in force, so apply them last.
  for (const auto& [key, value] : doc.items())
    if (key != "num_power_levels") find_key(key).set(config, value);
  if (doc.contains("num_power_levels"))
    find_key("num_power_levels").set(config, doc["num_power_levels"]);
  return config;
}

// ---- blobs ---------------------------------------------------------------

template <class T>
json blob(const T* data, std::size_t count) {
  std::vector<std::uint8_t> bytes(count * sizeof(T));
  if (count > 0) std::memcpy(bytes.data(), data, bytes.size());
  return json::binary(std::move(bytes));
}

template <class T>
std::vector<T> unblob(const json& j, const char* what) {
  if (!j.is_binary()) throw FormatError(std::string("checkpoint: ") + what + " is not binary");
  const auto& bytes = j.get_binary();
  if (bytes.size() % sizeof(T) != 0)
    throw FormatError(std::string("checkpoint: ") + what + " has a ragged length");
  std::vector<T> out(bytes.size() / sizeof(T));
  if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
  return out;
}

json params_to_json(const nn::ParameterSet<Real>& params) {
  json layers = json::array();
  for (const auto& l : params)
    layers.push_back({{"rows", l.weight.rows()},
                      {"cols", l.weight.cols()},
                      {"w", blob(l.weight.data(), static_cast<std::size_t>(l.weight.size()))},
                      {"b", blob(l.bias.data(), static_cast<std::size_t>(l.bias.size()))}});
  return layers;
}

void params_from_json(const json& j, nn::ParameterSet<Real>& params) {
  if (!j.is_array() || j.size() != params.size())
    throw DimensionError("checkpoint: architecture mismatch (layer count)");
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& l = params[i];
    if (j[i].at("rows").get<long long>() != l.weight.rows() ||
        j[i].at("cols").get<long long>() != l.weight.cols())
      throw DimensionError("checkpoint: architecture mismatch (layer " + std::to_string(i) + ")");
    const auto w = unblob<Real>(j[i].at("w"), "weights");
    const auto b = unblob<Real>(j[i].at("b"), "biases");
    if (w.size() != static_cast<std::size_t>(l.weight.size()) ||
        b.size() != static_cast<std::size_t>(l.bias.size()))
      throw DimensionError("checkpoint: architecture mismatch (layer " + std::to_string(i) + ")");
    std::memcpy(l.weight.data(), w.data(), w.size() * sizeof(Real));
    std::memcpy(l.bias.data(), b.data(), b.size() * sizeof(Real));
  }
}

json summary_to_json(const EpisodeSummary& e) {
  return {{"episode", e.episode},
          {"mean_reward", e.mean_reward},
          {"mean_capacity", e.mean_capacity},
          {"mean_throughput", e.mean_throughput},
          {"constraint_rate", e.constraint_rate},
          {"violations", e.violations},
          {"mean_loss", e.mean_loss},
          {"final_epsilon", e.final_epsilon}};
}

EpisodeSummary summary_from_json(const json& j) {
  EpisodeSummary e;
  e.episode = j.at("episode").get<int>();
  e.mean_reward = j.at("mean_reward").get<double>();
  e.mean_capacity = j.at("mean_capacity").get<double>();
  e.mean_throughput = j.at("mean_throughput").get<double>();
  e.constraint_rate = j.at("constraint_rate").get<double>();
  e.violations = j.at("violations").get<std::array<int, kNumConstraints>>();
  e.mean_loss = j.at("mean_loss").get<double>();
  e.final_epsilon = j.at("final_epsilon").get<double>();
  return e;
}

std::ofstream open_out(const std::string& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

void append_flags(std::string& line, const ConstraintReport& r) {
  for (bool f : constraint_flags(r)) line += f ? ",1" : ",0";
}

}  // namespace

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const KeySpec& k : key_table()) keys.emplace_back(k.name);
  return keys;
}

ExperimentConfig parse_config_text(const std::string& json_text, ExperimentConfig base) {
  json doc;
  try {
    doc = json::parse(json_text.empty() ? std::string("{}") : json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: malformed document: ") + e.what());
  }
  ExperimentConfig c = config_from_json(doc, std::move(base));
  c.validate();
  return c;
}

void apply_override(ExperimentConfig& config, const std::string& key, const std::string& value) {
  json v;
  try {
    v = json::parse(value);
  } catch (const json::parse_error&) {
    v = value;
  }
  find_key(key).set(config, v);
}

ExperimentConfig load_config(const std::string& path, const std::vector<Override>& overrides) {
  ExperimentConfig c;
  if (!path.empty()) {
    json doc;
    try {
      doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("config: malformed document: ") + e.what());
    }
    c = config_from_json(doc, c);
  }
  for (const auto& [key, value] : overrides) apply_override(c, key, value);
  c.validate();
  return c;
}

std::string config_to_json_text(const ExperimentConfig& config, int indent) {
  return config_to_json(config).dump(indent);
}

std::string format_number(double value) {
  if (std::isnan(value)) return {};
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

MetricsWriter::MetricsWriter(const std::string& path, int num_agents)
    : out_(open_out(path)), num_agents_(num_agents) {
  out_ << header(num_agents) << '\n';
}

std::string MetricsWriter::header(int num_agents) {
  std::string h = "episode,step,reward,capacity,throughput";
  for (const char* name : kConstraintNames) (h += ',') += name;
  h += ",epsilon";
  for (int j = 0; j < num_agents; ++j) h += ",loss_" + std::to_string(j);
  return h;
}

void MetricsWriter::write(const StepRecord& r) {
  std::string line = std::to_string(r.episode) + ',' + std::to_string(r.step) + ',' +
                     format_number(r.reward) + ',' + format_number(r.capacity) + ',' +
                     format_number(r.decoded_throughput);
  append_flags(line, r.report);
  line += ',' + format_number(r.epsilon);
  for (int j = 0; j < num_agents_; ++j) {
    line += ',';
    if (static_cast<std::size_t>(j) < r.losses.size())
      line += format_number(r.losses[static_cast<std::size_t>(j)]);
  }
  line += '\n';
  out_ << line;
  if (!out_) throw IoError("metrics write failed");
}

void write_episode_summaries(const std::string& path,
                             const std::vector<EpisodeSummary>& history, int window) {
  std::vector<double> rewards;
  for (const auto& e : history) rewards.push_back(e.mean_reward);
  const std::vector<double> ma = moving_average(rewards, window);
  std::ofstream out = open_out(path);
  out << "episode,mean_reward,moving_average,mean_capacity,mean_throughput,constraint_rate";
  for (const char* name : kConstraintNames) out << ",violations_" << name;
  out << ",mean_loss,epsilon\n";
  for (std::size_t i = 0; i < history.size(); ++i) {
    const EpisodeSummary& e = history[i];
    out << e.episode << ',' << format_number(e.mean_reward) << ',' << format_number(ma[i])
        << ',' << format_number(e.mean_capacity) << ',' << format_number(e.mean_throughput)
        << ',' << format_number(e.constraint_rate);
    for (int v : e.violations) out << ',' << v;
    out << ',' << format_number(e.mean_loss) << ',' << format_number(e.final_epsilon) << '\n';
  }
}

void write_eval_slots(const std::string& path, const std::vector<EvalSlot>& slots) {
  std::ofstream out = open_out(path);
  const std::size_t n = slots.empty() ? 0 : slots.front().actions.size();
  out << "episode,step,reward,capacity,throughput";
  for (const char* name : kConstraintNames) out << ',' << name;
  for (std::size_t j = 0; j < n; ++j) out << ",action_" << j;
  out << '\n';
  for (const EvalSlot& s : slots) {
    std::string line = std::to_string(s.episode) + ',' + std::to_string(s.step) + ',' +
                       format_number(s.reward) + ',' + format_number(s.capacity) + ',' +
                       format_number(s.decoded_throughput);
    append_flags(line, s.report);
    for (int a : s.actions) line += ',' + std::to_string(a);
    out << line << '\n';
  }
}

void write_sweep(const std::string& path, const std::vector<SweepRow>& rows) {
  std::ofstream out = open_out(path);
  out << "axis,value,seed,final_moving_average,plateau_episode,eval_capacity,"
         "eval_throughput,eval_reward,eval_constraint_rate,eval_gb_violation_rate\n";
  for (const SweepRow& r : rows)
    out << r.axis << ',' << r.value << ',' << r.run.seed << ','
        << format_number(r.run.final_average) << ',' << r.run.plateau << ','
        << format_number(r.run.eval.mean_capacity) << ','
        << format_number(r.run.eval.mean_throughput) << ','
        << format_number(r.run.eval.mean_reward) << ','
        << format_number(r.run.eval.constraint_rate) << ','
        << format_number(r.run.eval.gb_violation_rate) << '\n';
}

void write_comparison(const std::string& path, const std::vector<ProtocolResult>& rows,
                      bool append) {
  std::error_code ec;
  const bool fresh = !append || !std::filesystem::exists(path, ec) ||
                     std::filesystem::file_size(path, ec) == 0;
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  if (fresh)
    out << "protocol,seed,slots,mean_capacity,mean_throughput,mean_reward,constraint_rate,"
         "gb_violation_rate,mean_gf_rate\n";
  for (const ProtocolResult& r : rows)
    out << r.protocol << ',' << r.seed << ',' << r.stats.slots << ','
        << format_number(r.stats.mean_capacity) << ','
        << format_number(r.stats.mean_throughput) << ','
        << format_number(r.stats.mean_reward) << ','
        << format_number(r.stats.constraint_rate) << ','
        << format_number(r.stats.gb_violation_rate) << ','
        << format_number(r.stats.mean_gf_rate) << '\n';
}

std::string pools_to_json_text(const PowerPoolSet& pools, const NetworkConfig& config) {
  json channels = json::array();
  for (std::size_t m = 0; m < pools.channels.size(); ++m) {
    const ChannelPool& ch = pools.channels[m];
    json levels = json::array();
    for (const PoolLevel& l : ch.levels)
      levels.push_back({{"level", l.level},
                        {"power_w", l.power},
                        {"frequency", l.frequency},
                        {"raw_frequency", l.raw_frequency},
                        {"exceeds_threshold", l.exceeds_threshold}});
    channels.push_back({{"subchannel", m},
                        {"phi_w", std::isinf(ch.phi) ? json(nullptr) : json(ch.phi)},
                        {"selections", ch.selections},
                        {"defaulted", ch.defaulted},
                        {"levels", std::move(levels)}});
  }
  const json doc = {{"format", "sgfnoma-power-pools"},
                    {"version", 1},
                    {"manifest", "manifest.json"},
                    {"min_frequency", pools.min_frequency},
                    {"gb_target_rate", config.gb_target_rate},
                    {"gf_target_rate", config.gf_target_rate},
                    {"channels", std::move(channels)}};
  return doc.dump(2) + "\n";
}

PowerPoolSet pools_from_json_text(const std::string& text) {
  PowerPoolSet set;
  try {
    const json doc = json::parse(text);
    if (doc.value("format", "") != "sgfnoma-power-pools")
      throw FormatError("pools: not a power-pool document");
    set.min_frequency = doc.at("min_frequency").get<double>();
    for (const json& ch : doc.at("channels")) {
      ChannelPool pool;
      pool.phi = ch.at("phi_w").is_null() ? std::numeric_limits<double>::infinity()
                                          : ch.at("phi_w").get<double>();
      pool.selections = ch.at("selections").get<long long>();
      pool.defaulted = ch.at("defaulted").get<bool>();
      for (const json& l : ch.at("levels"))
        pool.levels.push_back({l.at("level").get<int>(), l.at("power_w").get<double>(),
                               l.at("frequency").get<double>(),
                               l.at("raw_frequency").get<double>(),
                               l.at("exceeds_threshold").get<bool>()});
      set.channels.push_back(std::move(pool));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("pools: ") + e.what());
  }
  return set;
}

std::string pools_table(const PowerPoolSet& pools) {
  std::ostringstream os;
  os << "channel  phi (W)       selections  levels (W, share)\n";
  for (std::size_t m = 0; m < pools.channels.size(); ++m) {
    const ChannelPool& ch = pools.channels[m];
    char head[96];
    std::snprintf(head, sizeof head, "%-8zu %-13.4g %-11lld ", m, ch.phi, ch.selections);
    os << head;
    for (std::size_t i = 0; i < ch.levels.size(); ++i) {
      const PoolLevel& l = ch.levels[i];
      char cell[64];
      std::snprintf(cell, sizeof cell, "%s%.3g (%.2f)%s", i ? ", " : "", l.power, l.frequency,
                    l.exceeds_threshold ? "!" : "");
      os << cell;
    }
    if (ch.defaulted) os << "  [never selected; lowest level]";
    os << '\n';
  }
  os << "min_frequency " << pools.min_frequency
     << "; '!' marks levels whose median-distance interference exceeds phi\n";
  return os.str();
}

void save_checkpoint(const Trainer& trainer, const std::string& path, bool include_buffers) {
  const CellState& cell = trainer.topology();
  json gb = json::array();
  for (const GbUser& u : cell.gb_users) gb.push_back({u.id, u.distance, u.subchannel});

  json history = json::array();
  for (const EpisodeSummary& e : trainer.history()) history.push_back(summary_to_json(e));

  json agents = json::array();
  for (const Agent& a : trainer.agents()) {
    json entry = {{"id", a.id},
                  {"train_steps", a.train_steps},
                  {"explore_rng", a.explore_rng.serialize()},
                  {"replay_rng", a.replay_rng.serialize()},
                  {"primary", params_to_json(a.primary.layers())},
                  {"target", params_to_json(a.target.layers())},
                  {"adam",
                   {{"step", a.optimizer.step},
                    {"m", params_to_json(a.optimizer.first_moment)},
                    {"v", params_to_json(a.optimizer.second_moment)}}}};
    if (include_buffers) {
      const ReplayBuffer& buf = a.buffer;
      const std::size_t dim = static_cast<std::size_t>(cell.num_gf());
      std::vector<Real> states, next;
      std::vector<Real> rewards;
      std::vector<std::int32_t> actions;
      for (std::size_t i = 0; i < buf.size(); ++i) {
        const Transition& t = buf.at(i);
        states.insert(states.end(), t.state.begin(), t.state.end());
        next.insert(next.end(), t.next_state.begin(), t.next_state.end());
        rewards.push_back(t.reward);
        actions.push_back(t.action);
      }
      entry["buffer"] = {{"size", buf.size()},
                         {"cursor", buf.cursor()},
                         {"dim", dim},
                         {"states", blob(states.data(), states.size())},
                         {"next_states", blob(next.data(), next.size())},
                         {"rewards", blob(rewards.data(), rewards.size())},
                         {"actions", blob(actions.data(), actions.size())}};
    }
    agents.push_back(std::move(entry));
  }

  const json doc = {{"format", "sgfnoma-checkpoint"},
                    {"version", 1},
                    {"config", config_to_json(trainer.config())},
                    {"topology",
                     {{"gb", std::move(gb)},
                      {"gf", cell.gf_distances},
                      {"gb_fading", cell.gb_fading},
                      {"gf_fading", cell.gf_fading}}},
                    {"global_step", trainer.global_step()},
                    {"history", std::move(history)},
                    {"agents", std::move(agents)}};
  const std::vector<std::uint8_t> bytes = json::to_cbor(doc);
  std::ofstream out = open_out(path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("cannot write " + path);
}

Trainer load_checkpoint(const std::string& path, const ExperimentConfig* expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  json doc;
  try {
    doc = json::from_cbor(bytes);
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "sgfnoma-checkpoint")
    throw FormatError("checkpoint " + path + ": not a checkpoint");

  try {
    ExperimentConfig config = config_from_json(doc.at("config"), ExperimentConfig{});
    config.validate();

    CellState cell;
    for (const json& g : doc.at("topology").at("gb"))
      cell.gb_users.push_back({g.at(0).get<int>(), g.at(1).get<double>(), g.at(2).get<int>()});
    cell.gf_distances = doc.at("topology").at("gf").get<std::vector<double>>();
    cell.gb_fading = doc.at("topology").at("gb_fading").get<std::vector<double>>();
    cell.gf_fading = doc.at("topology").at("gf_fading").get<std::vector<double>>();
    if (cell.gb_fading.size() != cell.gb_users.size() ||
        cell.gf_fading.size() != cell.gf_distances.size())
      throw FormatError("checkpoint " + path + ": topology gains do not match the users");

    if (expected) {
      const bool same =
          static_cast<int>(cell.gf_distances.size()) == expected->num_agents() &&
          config.network.num_actions() == expected->network.num_actions() &&
          config.algorithm == expected->algorithm &&
          config.hidden_layers == expected->hidden_layers &&
          config.stream_hidden == expected->stream_hidden;
      if (!same)
        throw DimensionError("checkpoint " + path +
                             ": architecture mismatch with the requested configuration (" +
                             std::to_string(cell.gf_distances.size()) + " agents stored, " +
                             std::to_string(expected->num_agents()) + " requested)");
    }

    Trainer trainer(config, cell);
    const json& agents = doc.at("agents");
    if (agents.size() != trainer.agents().size())
      throw DimensionError("checkpoint: agent count does not match topology");
    for (std::size_t j = 0; j < agents.size(); ++j) {
      const json& e = agents[j];
      Agent& a = trainer.agents()[j];
      a.train_steps = e.at("train_steps").get<long long>();
      a.explore_rng.deserialize(e.at("explore_rng").get<std::string>());
      a.replay_rng.deserialize(e.at("replay_rng").get<std::string>());
      params_from_json(e.at("primary"), a.primary.layers());
      params_from_json(e.at("target"), a.target.layers());
      a.optimizer.step = e.at("adam").at("step").get<long long>();
      params_from_json(e.at("adam").at("m"), a.optimizer.first_moment);
      params_from_json(e.at("adam").at("v"), a.optimizer.second_moment);
      if (e.contains("buffer")) {
        const json& b = e.at("buffer");
        const auto size = b.at("size").get<std::size_t>();
        const auto dim = b.at("dim").get<std::size_t>();
        const auto states = unblob<Real>(b.at("states"), "buffer states");
        const auto next = unblob<Real>(b.at("next_states"), "buffer next states");
        const auto rewards = unblob<Real>(b.at("rewards"), "buffer rewards");
        const auto actions = unblob<std::int32_t>(b.at("actions"), "buffer actions");
        if (states.size() != size * dim || next.size() != size * dim ||
            rewards.size() != size || actions.size() != size)
          throw DimensionError("checkpoint: replay buffer shape mismatch");
        std::vector<Transition> ring(size);
        for (std::size_t i = 0; i < size; ++i) {
          const auto off = static_cast<std::ptrdiff_t>(i * dim);
          const auto end = static_cast<std::ptrdiff_t>((i + 1) * dim);
          ring[i].state.assign(states.begin() + off, states.begin() + end);
          ring[i].next_state.assign(next.begin() + off, next.begin() + end);
          ring[i].reward = rewards[i];
          ring[i].action = actions[i];
        }
        a.buffer.restore(std::move(ring), b.at("cursor").get<std::size_t>());
      }
    }
    std::vector<EpisodeSummary> history;
    for (const json& h : doc.at("history")) history.push_back(summary_from_json(h));
    trainer.restore_progress(doc.at("global_step").get<long long>(), std::move(history));
    return trainer;
  } catch (const json::exception& e) {
    throw FormatError("checkpoint " + path + ": " + e.what());
  }
}

void write_manifest(const std::string& path, const RunManifest& m) {
  const json doc = {{"format", "sgfnoma-manifest"},
                    {"version", kVersion},
                    {"command", m.command},
                    {"seeds", m.config.seeds},
                    {"seed", m.config.seed},
                    {"config", config_to_json(m.config)},
                    {"outputs", m.outputs},
                    {"wall_clock_seconds", m.seconds}};
  write_text(path, doc.dump(2) + "\n");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out = open_out(path, std::ios::binary);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

}  // namespace sgf
