#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "edgeflow/bench.hpp"

namespace edgeflow::bench {

using nlohmann::json;

namespace {

void reject_unknown(const json& object, const std::set<std::string>& known, const std::string& where) {
  for (const auto& [key, value] : object.items())
    if (!known.contains(key)) throw ConfigError("unknown field '" + key + "' in " + where);
}

const json* section(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end()) return nullptr;
  if (!it->is_object()) throw ConfigError(std::string("'") + key + "' must be an object");
  return &*it;
}

template <typename T>
void read(const json& object, const char* key, T& out, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) return;
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!it->is_number()) throw ConfigError("");
    } else if constexpr (std::is_integral_v<T>) {
      if (!it->is_number_integer()) throw ConfigError("");
    }
    out = it->get<T>();
  } catch (const std::exception&) {
    throw ConfigError("field '" + std::string(key) + "' in " + where + " has the wrong type");
  }
}

void read_optional(const json& object, const char* key, std::optional<double>& out, const std::string& where) {
  auto it = object.find(key);
  if (it == object.end()) return;
  if (it->is_null()) {
    out.reset();
    return;
  }
  double value = 0.0;
  read(object, key, value, where);
  out = value;
}

}  // namespace

void BenchConfig::validate() const {
  try {
    gateway.validate();
    remote.validate();
    MetricsSourceConfig{SourceKind::Host, host.sample_period_ms, host.smoothing_alpha}.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(sim.dt_s > 0.0)) throw ConfigError("sim.dt_s must be > 0");
  if (!(sim.max_time_s > 0.0)) throw ConfigError("sim.max_time_s must be > 0");
  if (characterize.parallelism <= 0) throw ConfigError("characterize.parallelism must be > 0");
  if (characterize.total_jobs < 0) throw ConfigError("characterize.total_jobs must be >= 0");
  if (compare.total_jobs < 0) throw ConfigError("compare.total_jobs must be >= 0");
  if (!(compare.inter_arrival_s > 0.0)) throw ConfigError("compare.inter_arrival_s must be > 0");
  if (compare.strategies.empty()) throw ConfigError("compare.strategies must not be empty");
  try {
    parse_policy(characterize.policy);
    for (const auto& s : compare.strategies) parse_policy(s);
  } catch (const PolicyError& e) {
    throw ConfigError(std::string("invalid strategy: ") + e.what());
  }
  if (host.connect_timeout_ms <= 0 || host.request_timeout_ms <= 0) throw ConfigError("host timeouts must be > 0");
  if (host.rounds_per_unit == 0) throw ConfigError("host.rounds_per_unit must be > 0");
  if (host.worker_threads <= 0) throw ConfigError("host.worker_threads must be > 0");
  if (!(host.time_scale > 0.0)) throw ConfigError("host.time_scale must be > 0");
  if (checks.pre_band_lo_s > checks.pre_band_hi_s) throw ConfigError("checks: empty pre-throttle band");
}

BenchConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc, {"gateway", "fitted", "remote", "sim", "characterize", "compare", "host", "checks"}, "config");

  BenchConfig c;
  if (const json* g = section(doc, "gateway")) {
    reject_unknown(*g,
                   {"cores", "freq_levels_mhz", "t_ambient_c", "t_limit_c", "hysteresis_c", "heat_rate", "cool_rate",
                    "power_exponent", "base_job_work", "duration_jitter", "initial_temp_c", "mem_base", "mem_per_job"},
                   "gateway");
    read(*g, "cores", c.gateway.cores, "gateway");
    read(*g, "freq_levels_mhz", c.gateway.freq_levels_mhz, "gateway");
    read(*g, "t_ambient_c", c.gateway.t_ambient_c, "gateway");
    read(*g, "t_limit_c", c.gateway.t_limit_c, "gateway");
    read(*g, "hysteresis_c", c.gateway.hysteresis_c, "gateway");
    read(*g, "heat_rate", c.gateway.heat_rate, "gateway");
    read(*g, "cool_rate", c.gateway.cool_rate, "gateway");
    read(*g, "power_exponent", c.gateway.power_exponent, "gateway");
    read(*g, "base_job_work", c.gateway.base_job_work, "gateway");
    read(*g, "duration_jitter", c.gateway.duration_jitter, "gateway");
    read_optional(*g, "initial_temp_c", c.gateway.initial_temp_c, "gateway");
    read(*g, "mem_base", c.gateway.mem_base, "gateway");
    read(*g, "mem_per_job", c.gateway.mem_per_job, "gateway");
  }
  if (auto it = doc.find("fitted"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("'fitted' must be an array of field names");
    c.fitted = it->get<std::vector<std::string>>();
  }
  if (const json* r = section(doc, "remote")) {
    reject_unknown(*r, {"service_time_s", "rtt_s"}, "remote");
    read(*r, "service_time_s", c.remote.service_time_s, "remote");
    read(*r, "rtt_s", c.remote.rtt_s, "remote");
  }
  if (const json* s = section(doc, "sim")) {
    reject_unknown(*s, {"dt_s", "max_time_s"}, "sim");
    read(*s, "dt_s", c.sim.dt_s, "sim");
    read(*s, "max_time_s", c.sim.max_time_s, "sim");
  }
  if (const json* s = section(doc, "characterize")) {
    reject_unknown(*s, {"parallelism", "total_jobs", "seed", "policy"}, "characterize");
    read(*s, "parallelism", c.characterize.parallelism, "characterize");
    read(*s, "total_jobs", c.characterize.total_jobs, "characterize");
    read(*s, "seed", c.characterize.seed, "characterize");
    read(*s, "policy", c.characterize.policy, "characterize");
  }
  if (const json* s = section(doc, "compare")) {
    reject_unknown(*s, {"strategies", "inter_arrival_s", "total_jobs", "seed", "initial_temp_c"}, "compare");
    read(*s, "strategies", c.compare.strategies, "compare");
    read(*s, "inter_arrival_s", c.compare.inter_arrival_s, "compare");
    read(*s, "total_jobs", c.compare.total_jobs, "compare");
    read(*s, "seed", c.compare.seed, "compare");
    read_optional(*s, "initial_temp_c", c.compare.initial_temp_c, "compare");
  }
  if (const json* h = section(doc, "host")) {
    reject_unknown(*h,
                   {"remote_url", "connect_timeout_ms", "request_timeout_ms", "fallback", "sample_period_ms",
                    "smoothing_alpha", "rounds_per_unit", "time_scale", "worker_threads"},
                   "host");
    read(*h, "remote_url", c.host.remote_url, "host");
    read(*h, "connect_timeout_ms", c.host.connect_timeout_ms, "host");
    read(*h, "request_timeout_ms", c.host.request_timeout_ms, "host");
    std::string fallback = c.host.fallback == remote::Fallback::Local ? "local" : "fail";
    read(*h, "fallback", fallback, "host");
    if (fallback != "local" && fallback != "fail") throw ConfigError("host.fallback must be 'local' or 'fail'");
    c.host.fallback = fallback == "local" ? remote::Fallback::Local : remote::Fallback::Fail;
    read(*h, "sample_period_ms", c.host.sample_period_ms, "host");
    read(*h, "smoothing_alpha", c.host.smoothing_alpha, "host");
    read(*h, "rounds_per_unit", c.host.rounds_per_unit, "host");
    read(*h, "time_scale", c.host.time_scale, "host");
    read(*h, "worker_threads", c.host.worker_threads, "host");
  }
  if (const json* k = section(doc, "checks")) {
    reject_unknown(*k,
                   {"pre_band_lo_s", "pre_band_hi_s", "pre_band_min_share", "onset_s", "onset_tol_s", "post_mean_s",
                    "post_mean_tol_s", "local_fraction_tol", "local_fraction", "lowest_max_duration",
                    "highest_max_duration", "lowest_local_fraction"},
                   "checks");
    read(*k, "pre_band_lo_s", c.checks.pre_band_lo_s, "checks");
    read(*k, "pre_band_hi_s", c.checks.pre_band_hi_s, "checks");
    read(*k, "pre_band_min_share", c.checks.pre_band_min_share, "checks");
    read(*k, "onset_s", c.checks.onset_s, "checks");
    read(*k, "onset_tol_s", c.checks.onset_tol_s, "checks");
    read(*k, "post_mean_s", c.checks.post_mean_s, "checks");
    read(*k, "post_mean_tol_s", c.checks.post_mean_tol_s, "checks");
    read(*k, "local_fraction_tol", c.checks.local_fraction_tol, "checks");
    if (auto it = k->find("local_fraction"); it != k->end()) {
      if (!it->is_object()) throw ConfigError("checks.local_fraction must be an object");
      c.checks.local_fraction.clear();
      for (const auto& [name, value] : it->items()) {
        if (!value.is_number()) throw ConfigError("checks.local_fraction values must be numbers");
        c.checks.local_fraction[name] = value.get<double>();
      }
    }
    read(*k, "lowest_max_duration", c.checks.lowest_max_duration, "checks");
    read(*k, "highest_max_duration", c.checks.highest_max_duration, "checks");
    read(*k, "lowest_local_fraction", c.checks.lowest_local_fraction, "checks");
  }
  c.validate();
  return c;
}

BenchConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string dump_config(const BenchConfig& c) {
  json doc;
  json g = {{"cores", c.gateway.cores},
            {"freq_levels_mhz", c.gateway.freq_levels_mhz},
            {"t_ambient_c", c.gateway.t_ambient_c},
            {"t_limit_c", c.gateway.t_limit_c},
            {"hysteresis_c", c.gateway.hysteresis_c},
            {"heat_rate", c.gateway.heat_rate},
            {"cool_rate", c.gateway.cool_rate},
            {"power_exponent", c.gateway.power_exponent},
            {"base_job_work", c.gateway.base_job_work},
            {"duration_jitter", c.gateway.duration_jitter},
            {"mem_base", c.gateway.mem_base},
            {"mem_per_job", c.gateway.mem_per_job}};
  g["initial_temp_c"] = c.gateway.initial_temp_c ? json(*c.gateway.initial_temp_c) : json(nullptr);
  doc["gateway"] = g;
  doc["fitted"] = c.fitted;
  doc["remote"] = {{"service_time_s", c.remote.service_time_s}, {"rtt_s", c.remote.rtt_s}};
  doc["sim"] = {{"dt_s", c.sim.dt_s}, {"max_time_s", c.sim.max_time_s}};
  doc["characterize"] = {{"parallelism", c.characterize.parallelism},
                         {"total_jobs", c.characterize.total_jobs},
                         {"seed", c.characterize.seed},
                         {"policy", c.characterize.policy}};
  doc["compare"] = {{"strategies", c.compare.strategies},
                    {"inter_arrival_s", c.compare.inter_arrival_s},
                    {"total_jobs", c.compare.total_jobs},
                    {"seed", c.compare.seed}};
  doc["compare"]["initial_temp_c"] = c.compare.initial_temp_c ? json(*c.compare.initial_temp_c) : json(nullptr);
  doc["host"] = {{"remote_url", c.host.remote_url},
                 {"connect_timeout_ms", c.host.connect_timeout_ms},
                 {"request_timeout_ms", c.host.request_timeout_ms},
                 {"fallback", c.host.fallback == remote::Fallback::Local ? "local" : "fail"},
                 {"sample_period_ms", c.host.sample_period_ms},
                 {"smoothing_alpha", c.host.smoothing_alpha},
                 {"rounds_per_unit", c.host.rounds_per_unit},
                 {"time_scale", c.host.time_scale},
                 {"worker_threads", c.host.worker_threads}};
  doc["checks"] = {{"pre_band_lo_s", c.checks.pre_band_lo_s},
                   {"pre_band_hi_s", c.checks.pre_band_hi_s},
                   {"pre_band_min_share", c.checks.pre_band_min_share},
                   {"onset_s", c.checks.onset_s},
                   {"onset_tol_s", c.checks.onset_tol_s},
                   {"post_mean_s", c.checks.post_mean_s},
                   {"post_mean_tol_s", c.checks.post_mean_tol_s},
                   {"local_fraction_tol", c.checks.local_fraction_tol},
                   {"local_fraction", c.checks.local_fraction},
                   {"lowest_max_duration", c.checks.lowest_max_duration},
                   {"highest_max_duration", c.checks.highest_max_duration},
                   {"lowest_local_fraction", c.checks.lowest_local_fraction}};
  return doc.dump(2) + "\n";
}

}  // namespace edgeflow::bench
