#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <deque>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace edgeflow {

/// Source of timestamps, in seconds since the clock's own origin.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() const = 0;
};

/// Wall time measured from construction.
class SteadyClock final : public Clock {
 public:
  SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
  double now() const override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
  }

 private:
  std::chrono::steady_clock::time_point origin_;
};

/// Virtual time, moved explicitly by its owner (simulation and tests).
class ManualClock final : public Clock {
 public:
  explicit ManualClock(double start = 0.0) : now_(start) {}
  double now() const override { return now_.load(); }
  void set(double t) { now_.store(t); }
  void advance(double dt) { now_.store(now_.load() + dt); }

 private:
  std::atomic<double> now_;
};

/// Runs units of work for the engine.
class Scheduler {
 public:
  virtual ~Scheduler() = default;
  virtual void post(std::function<void()> task) = 0;
};

/// Runs each task immediately on the posting thread.
class InlineScheduler final : public Scheduler {
 public:
  void post(std::function<void()> task) override { task(); }
};

/// Fixed-size pool of worker threads draining a FIFO queue.
class ThreadPool final : public Scheduler {
 public:
  explicit ThreadPool(std::size_t threads);
  ~ThreadPool() override;

  ThreadPool(const ThreadPool&) = delete;
  ThreadPool& operator=(const ThreadPool&) = delete;

  void post(std::function<void()> task) override;

 private:
  void run(std::stop_token stop);

  std::mutex mutex_;
  std::condition_variable_any ready_;
  std::deque<std::function<void()>> queue_;
  std::vector<std::jthread> workers_;
};

}  // namespace edgeflow
