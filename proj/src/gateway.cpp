#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "edgeflow/sim.hpp"

namespace edgeflow::sim {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

constexpr double kDoneEps = 1e-9;

}  // namespace

void GatewayModel::validate() const {
  require(cores > 0, "cores must be > 0");
  require(!freq_levels_mhz.empty(), "freq_levels_mhz must not be empty");
  for (std::size_t i = 0; i < freq_levels_mhz.size(); ++i) {
    require(freq_levels_mhz[i] > 0.0, "freq_levels_mhz must be positive");
    if (i > 0) require(freq_levels_mhz[i] < freq_levels_mhz[i - 1], "freq_levels_mhz must be strictly descending");
  }
  require(t_limit_c > t_ambient_c, "t_limit_c must exceed t_ambient_c");
  require(hysteresis_c >= 0.0, "hysteresis_c must be >= 0");
  require(heat_rate > 0.0, "heat_rate must be > 0");
  require(cool_rate > 0.0, "cool_rate must be > 0");
  require(power_exponent >= 0.0, "power_exponent must be >= 0");
  require(base_job_work > 0.0, "base_job_work must be > 0");
  require(duration_jitter >= 0.0 && duration_jitter < base_job_work, "duration_jitter must be in [0, base_job_work)");
  if (initial_temp_c)
    require(*initial_temp_c >= t_ambient_c && *initial_temp_c <= 120.0, "initial_temp_c must be in [t_ambient_c, 120]");
  require(mem_base >= 0.0 && mem_per_job >= 0.0, "memory occupancy coefficients must be >= 0");
}

double GatewayModel::mem_util(std::size_t running) const {
  return std::clamp(mem_base + mem_per_job * static_cast<double>(running), 0.0, 1.0);
}

GatewayState initial_state(const GatewayModel& model) {
  GatewayState s;
  s.temp_c = model.start_temp();
  return s;
}

GatewayState step(const GatewayModel& model, const GatewayState& state, double dt_s, std::vector<Completion>* completed) {
  GatewayState next = state;
  const double fr = model.freq_mhz(state.freq_level) / model.f_max();
  const double power = std::pow(fr, model.power_exponent);
  const double cores = static_cast<double>(model.cores);

  // Power is constant within a slice, so Newton cooling integrates exactly.
  auto heat = [&](double busy, double span) {
    const double eq = model.t_ambient_c + model.heat_rate * busy * power / model.cool_rate;
    next.temp_c = eq + (next.temp_c - eq) * std::exp(-model.cool_rate * span);
  };
  double left = dt_s;
  double t = state.clock_s;
  while (left > 1e-12 && !next.running.empty() && fr > 0.0) {
    const double n = static_cast<double>(next.running.size());
    const double rate = fr * std::min(1.0, cores / n);
    double shortest = next.running.front().remaining;
    for (const auto& job : next.running) shortest = std::min(shortest, job.remaining);
    const double slice = std::min(left, shortest / rate);

    heat(std::min(n, cores), slice);
    for (auto& job : next.running) job.remaining -= rate * slice;
    t += slice;
    left -= slice;

    auto done = std::stable_partition(next.running.begin(), next.running.end(),
                                      [](const RunningJob& j) { return j.remaining > kDoneEps; });
    if (completed)
      for (auto it = done; it != next.running.end(); ++it) completed->push_back({it->id, t});
    next.running.erase(done, next.running.end());
  }

  if (left > 1e-12) heat(0.0, left);
  if (next.temp_c >= model.t_limit_c) {
    const std::size_t gated = model.freq_levels_mhz.size();
    if (next.freq_level < gated) next.freq_level = std::min(next.freq_level + 1, gated - 1);
    // Keep stepping down while a fully loaded step would still heat.
    const double cooling = model.cool_rate * (next.temp_c - model.t_ambient_c);
    while (next.freq_level < gated &&
           model.heat_rate * cores * std::pow(model.freq_mhz(next.freq_level) / model.f_max(), model.power_exponent) >
               cooling)
      ++next.freq_level;
  } else if (next.temp_c < model.t_limit_c - model.hysteresis_c && next.freq_level > 0) {
    --next.freq_level;
  }
  next.clock_s = state.clock_s + dt_s;
  return next;
}

Gateway::Gateway(GatewayModel model) : model_(std::move(model)) {
  model_.validate();
  state_ = initial_state(model_);
  max_temp_ = state_.temp_c;
}

void Gateway::admit(JobId id, double work) {
  if (!(work > 0.0)) throw std::invalid_argument("job work must be > 0");
  state_.running.push_back({id, work});
}

std::vector<Completion> Gateway::advance(double dt_s) {
  std::vector<Completion> done;
  state_ = step(model_, state_, dt_s, &done);
  max_temp_ = std::max(max_temp_, state_.temp_c);
  if (!onset_ && state_.temp_c >= model_.t_limit_c) onset_ = state_.clock_s;
  return done;
}

double Gateway::cpu_util() const {
  const auto busy = std::min<std::size_t>(state_.running.size(), static_cast<std::size_t>(model_.cores));
  return static_cast<double>(busy) / static_cast<double>(model_.cores);
}

WorkloadSpec WorkloadSpec::closed_loop(int parallelism, int total_jobs, std::uint64_t seed) {
  WorkloadSpec w;
  w.mode = WorkloadMode::ClosedLoop;
  w.parallelism = parallelism;
  w.total_jobs = total_jobs;
  w.seed = seed;
  return w;
}

WorkloadSpec WorkloadSpec::open_loop(double inter_arrival_s, int total_jobs, std::uint64_t seed) {
  WorkloadSpec w;
  w.mode = WorkloadMode::OpenLoop;
  w.inter_arrival_s = inter_arrival_s;
  w.total_jobs = total_jobs;
  w.seed = seed;
  return w;
}

void WorkloadSpec::validate() const {
  require(total_jobs >= 0, "total_jobs must be >= 0");
  if (mode == WorkloadMode::ClosedLoop) {
    require(parallelism.has_value(), "closed-loop workload requires parallelism");
    require(!inter_arrival_s.has_value(), "closed-loop workload must not set inter_arrival_s");
    require(*parallelism > 0, "parallelism must be > 0");
  } else {
    require(inter_arrival_s.has_value(), "open-loop workload requires inter_arrival_s");
    require(!parallelism.has_value(), "open-loop workload must not set parallelism");
    require(*inter_arrival_s > 0.0, "inter_arrival_s must be > 0");
  }
}

void RemoteModel::validate() const {
  require(service_time_s >= 0.0, "service_time_s must be >= 0");
  require(rtt_s >= 0.0, "rtt_s must be >= 0");
}

}  // namespace edgeflow::sim
