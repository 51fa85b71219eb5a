#include "event_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace oracle {

namespace {

struct Active {
  std::size_t index;
  double remaining;
};

class Machine {
 public:
  explicit Machine(const Model& m) : m_(m), temp_(m.initial_temp_c), max_temp_(m.initial_temp_c) {}

  double ratio_at(std::size_t level) const {
    return level < m_.freq_levels_mhz.size() ? m_.freq_levels_mhz[level] / m_.freq_levels_mhz.front() : 0.0;
  }
  double freq_ratio() const { return ratio_at(level_); }

  double rate() const {
    if (active_.empty() || freq_ratio() == 0.0) return 0.0;
    const double n = static_cast<double>(active_.size());
    return freq_ratio() * std::min(1.0, m_.cores / n);
  }

  double next_completion() const {
    if (active_.empty() || rate() == 0.0) return std::numeric_limits<double>::infinity();
    double least = std::numeric_limits<double>::infinity();
    for (const auto& a : active_) least = std::min(least, a.remaining);
    return now_ + least / rate();
  }

  double next_poll() const { return (polls_ + 1) * m_.poll_s; }

  /// Moves time forward to `t` with no state change in between.
  void advance_to(double t) {
    const double span = t - now_;
    if (span <= 0.0) return;
    const double busy = std::min<double>(static_cast<double>(active_.size()), m_.cores);
    const double power = m_.heat_rate * busy * std::pow(freq_ratio(), m_.power_exponent);
    const double eq = m_.ambient_c + power / m_.cool_rate;
    temp_ = eq + (temp_ - eq) * std::exp(-m_.cool_rate * span);
    max_temp_ = std::max(max_temp_, temp_);
    const double r = rate();
    for (auto& a : active_) a.remaining -= r * span;
    now_ = t;
  }

  void poll() {
    ++polls_;
    if (temp_ >= m_.limit_c) {
      if (!onset_) onset_ = now_;
      const std::size_t lowest = m_.freq_levels_mhz.size() - 1;
      if (level_ < lowest) ++level_;
      // gate the clock rather than sit at a level that still heats under full load
      for (;;) {
        const double full = m_.heat_rate * m_.cores * std::pow(ratio_at(level_), m_.power_exponent);
        if (level_ > lowest || full <= m_.cool_rate * (temp_ - m_.ambient_c)) break;
        ++level_;
      }
    } else if (temp_ < m_.limit_c - m_.hysteresis_c && level_ > 0) {
      --level_;
    }
  }

  std::vector<std::size_t> collect_done() {
    std::vector<std::size_t> done;
    for (auto it = active_.begin(); it != active_.end();) {
      if (it->remaining <= 1e-9) {
        done.push_back(it->index);
        it = active_.erase(it);
      } else {
        ++it;
      }
    }
    return done;
  }

  void admit(std::size_t index, double work) { active_.push_back({index, work}); }

  double now() const { return now_; }
  bool idle() const { return active_.empty(); }
  std::optional<double> onset() const { return onset_; }
  double max_temp() const { return max_temp_; }

 private:
  const Model& m_;
  double now_ = 0.0;
  double temp_;
  double max_temp_;
  std::size_t level_ = 0;
  long long polls_ = 0;
  std::optional<double> onset_;
  std::vector<Active> active_;
};

}  // namespace

Result run(const Model& model, const std::vector<Job>& jobs, double horizon_s) {
  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return jobs[a].arrival_s < jobs[b].arrival_s; });

  Machine m(model);
  Result r;
  r.completion_s.assign(jobs.size(), std::numeric_limits<double>::quiet_NaN());
  std::size_t next = 0, finished = 0;
  while (finished < jobs.size()) {
    const double arrival = next < order.size() ? jobs[order[next]].arrival_s : std::numeric_limits<double>::infinity();
    const double t = std::min({arrival, m.next_completion(), m.next_poll()});
    if (t > horizon_s) break;
    m.advance_to(t);
    for (std::size_t i : m.collect_done()) {
      r.completion_s[i] = m.now();
      ++finished;
    }
    while (next < order.size() && jobs[order[next]].arrival_s <= m.now()) {
      m.admit(order[next], jobs[order[next]].work);
      ++next;
    }
    if (t == m.next_poll()) m.poll();
  }
  r.onset_s = m.onset();
  r.max_temp_c = m.max_temp();
  return r;
}

Result run_closed(const Model& model, int parallelism, int total_jobs, double work, double horizon_s) {
  Machine m(model);
  Result r;
  int admitted = 0;
  for (; admitted < std::min(parallelism, total_jobs); ++admitted) m.admit(static_cast<std::size_t>(admitted), work);
  r.completion_s.assign(static_cast<std::size_t>(total_jobs), std::numeric_limits<double>::quiet_NaN());
  while (!m.idle()) {
    const double t = std::min(m.next_completion(), m.next_poll());
    if (t > horizon_s) {
      m.advance_to(horizon_s);
      break;
    }
    m.advance_to(t);
    for (std::size_t i : m.collect_done()) {
      r.completion_s[i] = m.now();
      if (admitted < total_jobs) m.admit(static_cast<std::size_t>(admitted++), work);
    }
    if (t == m.next_poll()) m.poll();
  }
  r.onset_s = m.onset();
  r.max_temp_c = m.max_temp();
  return r;
}

}  // namespace oracle
