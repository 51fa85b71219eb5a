#include "random_flow.hpp"

#include <cstdio>

namespace gen {

using namespace edgeflow;

namespace {

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

std::string units(std::mt19937_64& rng) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", std::uniform_real_distribution<double>(0.25, 40.0)(rng));
  return buf;
}

std::string token(std::mt19937_64& rng) {
  static constexpr char kAlphabet[] = "abcdefghijklmnopqrstuvwxyz0123456789-_ %/:\"\\";
  std::string s;
  const int len = uniform(rng, 0, 12);
  for (int i = 0; i < len; ++i) s += kAlphabet[uniform(rng, 0, sizeof kAlphabet - 2)];
  return s;
}

}  // namespace

Payload random_payload(std::mt19937_64& rng) {
  Payload p;
  const int n = uniform(rng, 0, 5);
  for (int i = 0; i < n; ++i) p["k" + token(rng)] = token(rng);
  return p;
}

remote::OffloadRequest random_request(std::mt19937_64& rng) {
  remote::OffloadRequest r;
  r.job_id = std::uniform_int_distribution<JobId>(-1'000'000'000'000LL, 1'000'000'000'000LL)(rng);
  r.flow_id = "tab-" + token(rng);
  r.payload = random_payload(rng);
  r.sent_at = std::uniform_real_distribution<double>(0.0, 1e6)(rng);
  return r;
}

remote::OffloadResponse random_response(std::mt19937_64& rng) {
  const JobId job = std::uniform_int_distribution<JobId>(0, 1'000'000'000'000LL)(rng);
  if (uniform(rng, 0, 3) == 0) return remote::OffloadResponse::error(job, token(rng));
  remote::OffloadResponse r;
  r.job_id = job;
  r.payload = random_payload(rng);
  r.remote_duration_s = std::uniform_real_distribution<double>(0.0, 500.0)(rng);
  return r;
}

FlowShape random_flow(std::mt19937_64& rng) {
  FlowShape s;
  FlowGraph& g = s.flow;
  const std::string id = "t" + std::to_string(uniform(rng, 0, 999));
  s.offload_tab = "tab-" + id;
  g.tabs.push_back({"main", "Main", false});
  g.tabs.push_back({s.offload_tab, "Work", true});

  int counter = 0;
  auto node = [&](const std::string& tab, std::string_view kind, Config config = {}) {
    std::string nid = std::string(kind) + "-" + std::to_string(counter++);
    g.nodes.push_back({nid, tab, std::string(kind), std::move(config)});
    return nid;
  };
  auto wire = [&](const std::string& a, const std::string& b) { g.wires.push_back({a, b}); };
  auto sink_branch = [&](const std::string& from) {
    std::string prev = from;
    for (int i = uniform(rng, 0, 2); i > 0; --i) {
      std::string w = node("main", kinds::work, {{"work_units", units(rng)}});
      wire(prev, w);
      prev = w;
    }
    wire(prev, node("main", kinds::sink));
  };

  // main: feeder path
  std::string prev = node("main", kinds::inject);
  s.inject_id = prev;
  for (int i = uniform(rng, 0, 3); i > 0; --i) {
    std::string w = node("main", kinds::work, {{"work_units", units(rng)}});
    wire(prev, w);
    if (uniform(rng, 0, 4) == 0) sink_branch(prev);
    prev = w;
  }
  const std::string feeder = node("main", kinds::link_out);
  wire(prev, feeder);

  // offloadable tab: linear chain
  const std::string entry = node(s.offload_tab, kinds::link_in);
  prev = entry;
  for (int i = uniform(rng, 1, 4); i > 0; --i) {
    std::string w = node(s.offload_tab, kinds::work, {{"work_units", units(rng)}});
    wire(prev, w);
    prev = w;
  }
  const std::string exit = node(s.offload_tab, kinds::link_out);
  wire(prev, exit);

  // main: resume path with optional fan-out
  const std::string resume = node("main", kinds::link_in);
  prev = resume;
  for (int i = uniform(rng, 0, 2); i > 0; --i) {
    std::string w = node("main", kinds::work, {{"work_units", units(rng)}});
    wire(prev, w);
    prev = w;
  }
  for (int i = uniform(rng, 1, 3); i > 0; --i) sink_branch(prev);

  for (auto& n : g.nodes) {
    if (n.id == feeder) n.config["target"] = entry;
    if (n.id == exit) n.config["target"] = resume;
  }

  // unrelated third tab
  if (uniform(rng, 0, 2) == 0) {
    g.tabs.push_back({"aux", "Aux", false});
    std::string a = node("aux", kinds::inject);
    std::string w = node("aux", kinds::work, {{"work_units", units(rng)}});
    wire(a, w);
    wire(w, node("aux", kinds::sink));
  }

  std::shuffle(g.nodes.begin(), g.nodes.end(), rng);
  std::shuffle(g.wires.begin(), g.wires.end(), rng);
  return s;
}

}  // namespace gen
