// edgeflow: offloading runtime and experiment harness.
//
//   edgeflow characterize [--mode sim|host] [--seed N] [--out DIR] [--check]
//   edgeflow compare      [--policy SPEC]... [--seed N] [--out DIR] [--check]
//   edgeflow serve        [--port P] [--host H] [--flow remote.json]
//   edgeflow rewrite      --flow FLOW --out DIR [--policy SPEC] [--remote-url URL]
//
// Exit codes: 0 ok, 1 usage error, 2 runtime error, 3 checks failed.
#include <CLI11.hpp>

#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "edgeflow/bench.hpp"

namespace {

using namespace edgeflow;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kRuntime = 2;
constexpr int kChecksFailed = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string flow;
  std::vector<std::string> policies;
  std::string mode = "sim";
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string remote_url;
  bool check = false;
  std::string config;
  std::optional<int> jobs;
  std::optional<int> parallelism;
  std::optional<double> inter_arrival;
  std::string host = "127.0.0.1";
  int port = 8780;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot read '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

bench::BenchConfig load(const Options& o) {
  bench::BenchConfig c = o.config.empty() ? bench::BenchConfig{} : bench::load_config(o.config);
  if (!o.remote_url.empty()) c.host.remote_url = o.remote_url;
  return c;
}

FlowGraph flow_or_default(const Options& o) { return o.flow.empty() ? FlowGraph{} : parse_flow(slurp(o.flow)); }

bench::Mode mode_of(const Options& o) {
  if (o.mode == "sim") return bench::Mode::Sim;
  if (o.mode == "host") return bench::Mode::Host;
  throw UsageError("--mode must be 'sim' or 'host'");
}

int finish(const std::vector<bench::CheckResult>& checks, bool check) {
  std::cout << bench::checks_text(checks);
  return check && !bench::all_pass(checks) ? kChecksFailed : kOk;
}

int run_characterize(const Options& o) {
  bench::BenchConfig c = load(o);
  if (o.seed) c.characterize.seed = *o.seed;
  if (o.jobs) c.characterize.total_jobs = *o.jobs;
  if (o.parallelism) c.characterize.parallelism = *o.parallelism;
  if (o.policies.size() > 1) throw UsageError("characterize takes a single --policy");
  if (!o.policies.empty()) c.characterize.policy = o.policies.front();
  c.validate();

  const auto report = mode_of(o) == bench::Mode::Sim ? bench::characterize_sim(c)
                                                     : bench::characterize_host(c, flow_or_default(o));
  bench::write_characterize(report, o.out.empty() ? "results/characterize" : o.out);
  std::cout << bench::summary_text(report);
  return finish(report.checks, o.check);
}

int run_compare(const Options& o) {
  bench::BenchConfig c = load(o);
  if (o.seed) c.compare.seed = *o.seed;
  if (o.jobs) c.compare.total_jobs = *o.jobs;
  if (o.inter_arrival) c.compare.inter_arrival_s = *o.inter_arrival;
  if (!o.policies.empty()) c.compare.strategies = o.policies;
  c.validate();

  const auto report =
      mode_of(o) == bench::Mode::Sim ? bench::compare_sim(c) : bench::compare_host(c, flow_or_default(o));
  bench::write_compare(report, o.out.empty() ? "results/compare" : o.out);
  std::cout << bench::compare_table(report);
  return finish(report.checks, o.check);
}

int run_rewrite(const Options& o) {
  if (o.flow.empty()) throw UsageError("rewrite requires --flow");
  if (o.out.empty()) throw UsageError("rewrite requires --out");
  if (o.policies.size() > 1) throw UsageError("rewrite takes a single --policy");
  const bench::BenchConfig c = load(o);
  const std::string policy = o.policies.empty() ? c.compare.strategies.front() : o.policies.front();
  const FlowGraph flow = parse_flow(slurp(o.flow));
  const RewriteResult r = extract_offloadable(flow, c.host.remote_url, policy);
  const std::filesystem::path out = o.out;
  bench::write_atomic(out / "local.json", serialize_flow(r.local_flow) + "\n");
  bench::write_atomic(out / "remote.json", serialize_flow(r.remote_flow) + "\n");
  std::cout << "offload node " << r.offload_node_id << " -> flow " << r.flow_id << "\n";
  return kOk;
}

int run_serve(const Options& o) {
  const bench::BenchConfig c = load(o);
  remote::RemoteExecutor executor(NodeRegistry::standard(c.host.rounds_per_unit));
  if (!o.flow.empty()) {
    auto outcome = executor.deploy(parse_flow(slurp(o.flow)));
    if (!outcome.ok()) throw UsageError("flow '" + o.flow + "' cannot be served: " + outcome.violations.front().detail);
    std::cerr << "deployed " << outcome.flow_id << "\n";
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  remote::RemoteServer server(executor);
  server.set_logger([](const std::string& line) { std::cerr << line << std::endl; });
  const int port = server.bind(o.host, o.port);
  std::cerr << "listening on " << o.host << ":" << port << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  waiter.join();
  std::cerr << "served " << server.requests_served() << " requests" << std::endl;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"edgeflow: flow offloading runtime and experiment harness"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--flow", o.flow, "Flow document");
  app.add_option("--policy", o.policies, "Offloading policy; repeat for several compare strategies");
  app.add_option("--mode", o.mode, "sim or host")->check(CLI::IsMember({"sim", "host"}));
  app.add_option("--seed", o.seed, "Workload seed");
  app.add_option("--out", o.out, "Output directory");
  app.add_option("--remote-url", o.remote_url, "Remote executor base URL");
  app.add_flag("--check", o.check, "Exit 3 unless every tolerance check passes");
  app.add_option("--config", o.config, "Configuration file");

  auto* characterize = app.add_subcommand("characterize", "Closed-loop run without offloading");
  characterize->add_option("--jobs", o.jobs, "Total jobs");
  characterize->add_option("--parallelism", o.parallelism, "Jobs kept in flight");
  auto* compare = app.add_subcommand("compare", "Open-loop run per offloading strategy");
  compare->add_option("--jobs", o.jobs, "Total jobs per strategy");
  compare->add_option("--inter-arrival", o.inter_arrival, "Seconds between arrivals");
  auto* serve = app.add_subcommand("serve", "Serve the remote executor over HTTP");
  serve->add_option("--port", o.port, "Port, 0 for any")->check(CLI::Range(0, 65535));
  serve->add_option("--host", o.host, "Address to bind");
  auto* rewrite = app.add_subcommand("rewrite", "Split a flow into local and remote parts");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (characterize->parsed()) return run_characterize(o);
    if (compare->parsed()) return run_compare(o);
    if (serve->parsed()) return run_serve(o);
    if (rewrite->parsed()) return run_rewrite(o);
  } catch (const UsageError& e) {
    std::cerr << "edgeflow: " << e.what() << "\n";
    return kUsage;
  } catch (const bench::ConfigError& e) {
    std::cerr << "edgeflow: config: " << e.what() << "\n";
    return kUsage;
  } catch (const PolicyError& e) {
    std::cerr << "edgeflow: policy: " << e.what() << "\n";
    return kUsage;
  } catch (const FlowError& e) {
    std::cerr << "edgeflow: flow: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "edgeflow: " << e.what() << "\n";
    return kRuntime;
  }
  return kUsage;
}
