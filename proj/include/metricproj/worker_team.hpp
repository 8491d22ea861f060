#pragma once

#include <barrier>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace metricproj {

// Fixed team of p workers. The calling thread acts as worker 0. run() hands
// the same job to every worker and returns once all have finished; inside a
// job, sync() is a full barrier across the team.
class WorkerTeam {
 public:
  explicit WorkerTeam(int workers)
      : size_(workers < 1 ? 1 : workers), start_(size_), done_(size_), round_(size_) {
    threads_.reserve(static_cast<std::size_t>(size_ - 1));
    for (int w = 1; w < size_; ++w) threads_.emplace_back([this, w] { loop(w); });
  }

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  ~WorkerTeam() {
    stop_ = true;
    if (size_ > 1) start_.arrive_and_wait();
    for (auto& t : threads_) t.join();
  }

  int size() const { return size_; }

  // Jobs must reach every sync() even when they fail; exceptions are
  // collected and the first one is rethrown here.
  void run(const std::function<void(int)>& job) {
    job_ = &job;
    error_ = nullptr;
    if (size_ > 1) start_.arrive_and_wait();
    invoke(0);
    if (size_ > 1) done_.arrive_and_wait();
    job_ = nullptr;
    if (error_) std::rethrow_exception(error_);
  }

  void sync() {
    if (size_ > 1) round_.arrive_and_wait();
  }

 private:
  void loop(int w) {
    for (;;) {
      start_.arrive_and_wait();
      if (stop_) return;
      invoke(w);
      done_.arrive_and_wait();
    }
  }

  void invoke(int w) {
    try {
      (*job_)(w);
    } catch (...) {
      std::lock_guard lock(error_mutex_);
      if (!error_) error_ = std::current_exception();
    }
  }

  int size_;
  std::barrier<> start_;
  std::barrier<> done_;
  std::barrier<> round_;
  std::vector<std::thread> threads_;
  const std::function<void(int)>* job_ = nullptr;
  bool stop_ = false;
  std::mutex error_mutex_;
  std::exception_ptr error_;
};

}  // namespace metricproj
