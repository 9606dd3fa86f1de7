#include "lffuse/parallel.hpp"
#include "lffuse/error.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace lffuse {

namespace {
std::atomic<int> g_threads{1};
}

void set_thread_count(int n) { g_threads = std::max(1, n); }
int thread_count() { return g_threads; }

void parallel_for(std::ptrdiff_t n, const std::function<void(std::ptrdiff_t)>& fn) {
  const auto workers = static_cast<std::ptrdiff_t>(std::min<std::ptrdiff_t>(g_threads, n));
  if (workers <= 1) {
    for (std::ptrdiff_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  const std::ptrdiff_t chunk = (n + workers - 1) / workers;
  for (std::ptrdiff_t w = 0; w < workers; ++w) {
    const std::ptrdiff_t begin = w * chunk;
    const std::ptrdiff_t end = std::min(n, begin + chunk);
    pool.emplace_back([&, begin, end] {
      try {
        for (std::ptrdiff_t i = begin; i < end; ++i) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Parse: return "parse";
    case ErrorCode::UnsupportedModel: return "unsupported-model";
    case ErrorCode::UnsupportedGrid: return "unsupported-grid";
    case ErrorCode::InvalidVolume: return "invalid-volume";
    case ErrorCode::Precondition: return "precondition";
    case ErrorCode::Parameter: return "parameter";
    case ErrorCode::BehindCamera: return "behind-camera";
    case ErrorCode::Camera: return "camera";
    case ErrorCode::EmptyAnchors: return "empty-anchor";
    case ErrorCode::InsufficientAnchors: return "insufficient-anchor";
    case ErrorCode::Singular: return "singular-system";
    case ErrorCode::InvalidMapping: return "invalid-mapping";
    case ErrorCode::ExcessiveTrim: return "excessive-trim";
    case ErrorCode::Resample: return "resample";
    case ErrorCode::Frame: return "frame";
    case ErrorCode::Fusion: return "fusion";
    case ErrorCode::Guide: return "guide";
    case ErrorCode::Scene: return "scene";
    case ErrorCode::Metric: return "metric";
    case ErrorCode::Rescale: return "rescale";
  }
  return "unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::Io:
    case ErrorCode::Parse:
    case ErrorCode::UnsupportedModel:
    case ErrorCode::UnsupportedGrid:
    case ErrorCode::Frame:
    case ErrorCode::Fusion:
    case ErrorCode::Guide:
    case ErrorCode::Camera:
    case ErrorCode::Parameter:
      return 2;
    default:
      return 3;
  }
}

}  // namespace lffuse
