#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <exception>
#include <future>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "sptomo/core.hpp"
#include "sptomo/geometry.hpp"
#include "sptomo/operators.hpp"
#include "sptomo/solvers.hpp"

namespace sptomo {

struct SliceRange {
  std::size_t start = 0;
  std::size_t len = 0;
  friend bool operator==(const SliceRange&, const SliceRange&) = default;
};

/// passes[k][w] is the range worker w handles in pass k. Every pass but the
/// last gives each worker max_per_pass slices; the last splits the
/// remainder as evenly as possible, leading workers taking the extra one.
struct ChunkPlan {
  std::size_t n_z = 0;
  std::size_t worker_count = 1;
  std::size_t max_per_pass = 1;
  std::size_t halo = 0;  // reserved; cross-slice halos are not implemented
  std::vector<std::vector<SliceRange>> passes;

  std::vector<SliceRange> worker_ranges(std::size_t w) const {
    std::vector<SliceRange> out;
    for (const auto& pass : passes)
      if (pass[w].len > 0) out.push_back(pass[w]);
    return out;
  }
};

inline ChunkPlan plan_chunks(std::size_t n_z, std::size_t workers,
                             std::size_t max_per_pass) {
  if (n_z < 1) throw InvalidArgument("plan_chunks: n_z must be >= 1");
  if (workers < 1) throw InvalidArgument("plan_chunks: workers must be >= 1");
  if (max_per_pass < 1)
    throw InvalidArgument("plan_chunks: max_per_pass must be >= 1");
  ChunkPlan plan;
  plan.n_z = n_z;
  plan.worker_count = workers;
  plan.max_per_pass = max_per_pass;
  const std::size_t capacity = workers * max_per_pass;
  const std::size_t n_passes = (n_z + capacity - 1) / capacity;
  std::size_t next = 0;
  for (std::size_t k = 0; k < n_passes; ++k) {
    const std::size_t remaining = n_z - next;
    std::vector<SliceRange> pass(workers);
    if (remaining >= capacity && k + 1 < n_passes) {
      for (auto& r : pass) {
        r = {next, max_per_pass};
        next += max_per_pass;
      }
    } else {
      const std::size_t base = remaining / workers, extra = remaining % workers;
      for (std::size_t w = 0; w < workers; ++w) {
        const std::size_t len = base + (w < extra ? 1 : 0);
        pass[w] = {next, len};
        next += len;
      }
    }
    plan.passes.push_back(std::move(pass));
  }
  return plan;
}

inline ComplexImage pair_complex(const RealImage& a, const RealImage& b) {
  if (!a.same_shape(b.rows(), b.cols()))
    throw ShapeMismatch("pair_complex: slices differ in shape");
  ComplexImage out(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = {a[i], b[i]};
  return out;
}

inline std::pair<RealImage, RealImage> unpair(const ComplexImage& c) {
  return {real_part(c), imag_part(c)};
}

/// (n_z x d1 x d2) real stack, C order.
struct Stack3 {
  std::size_t n_z = 0, rows = 0, cols = 0;
  std::vector<double> data;

  Stack3() = default;
  Stack3(std::size_t z, std::size_t r, std::size_t c)
      : n_z(z), rows(r), cols(c), data(z * r * c, 0.0) {}

  std::size_t slice_size() const { return rows * cols; }
  std::span<double> slice(std::size_t z) {
    return std::span<double>(data).subspan(z * slice_size(), slice_size());
  }
  std::span<const double> slice(std::size_t z) const {
    return std::span<const double>(data).subspan(z * slice_size(), slice_size());
  }
  RealImage image(std::size_t z) const {
    auto s = slice(z);
    return RealImage(rows, cols, std::vector<double>(s.begin(), s.end()));
  }
  void set(std::size_t z, const RealImage& img) {
    if (!img.same_shape(rows, cols))
      throw ShapeMismatch("stack slice shape mismatch");
    std::copy(img.values().begin(), img.values().end(), slice(z).begin());
  }
  friend bool operator==(const Stack3&, const Stack3&) = default;
};

struct SinogramStack {
  ScanGeometry geom;
  Stack3 data;  // n_z x n_theta x n_p
};

using TomogramStack = Stack3;  // n_z x n_y x n_x

class WorkerFailure : public Error {
 public:
  WorkerFailure(SliceRange r, const std::string& cause)
      : Error("WorkerFailure: slices [" + std::to_string(r.start) + ", " +
              std::to_string(r.start + r.len) + "): " + cause),
        range(r) {}
  SliceRange range;
};

struct PipelineResult {
  TomogramStack tomograms;
  SolverReport report;                    // aggregate over all slices
  std::vector<SolverReport> unit_reports;  // one per (paired) solve
  ChunkPlan plan;                          // over pair units
  std::size_t peak_buffered_units = 0;     // max per worker at any time
};

/// Pairs slices (2k, 2k+1) into one complex solve; an odd last slice is
/// solved alone. Units are distributed with plan_chunks; each worker
/// prefetches its next chunk while solving the current one. Every unit is
/// solved by exactly one worker with identical code, so the output does not
/// depend on the worker count.
inline PipelineResult run_pipeline(const SinogramStack& stack,
                                   const TomoOperators& ops,
                                   const SolverConfig& cfg,
                                   std::size_t workers,
                                   std::size_t max_per_pass = 8) {
  const ScanGeometry& g = ops.geom;
  if (stack.data.rows != g.n_theta || stack.data.cols != g.n_p)
    throw ShapeMismatch("sinogram stack is " + std::to_string(stack.data.rows) +
                        "x" + std::to_string(stack.data.cols) +
                        " per slice, operators expect " +
                        std::to_string(g.n_theta) + "x" + std::to_string(g.n_p));
  if (stack.data.n_z < 1) throw InvalidArgument("empty sinogram stack");
  if (cfg.algorithm != Algorithm::FBP) cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();

  const std::size_t n_z = stack.data.n_z;
  const std::size_t n_units = (n_z + 1) / 2;
  PipelineResult out;
  out.plan = plan_chunks(n_units, workers, std::max<std::size_t>(1, max_per_pass / 2));
  out.tomograms = TomogramStack(n_z, g.n_y, g.n_x);
  out.unit_reports.resize(n_units);

  auto load = [&](SliceRange r) {
    std::vector<CVec> buf(r.len);
    for (std::size_t k = 0; k < r.len; ++k) {
      const std::size_t z = 2 * (r.start + k);
      auto a = stack.data.slice(z);
      CVec& c = buf[k];
      c.resize(a.size());
      for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i];
      if (z + 1 < n_z) {
        auto b = stack.data.slice(z + 1);
        for (std::size_t i = 0; i < b.size(); ++i) c[i].imag(b[i]);
      }
    }
    return buf;
  };

  std::atomic<bool> stop{false};
  std::mutex fail_mutex;
  std::optional<WorkerFailure> failure;
  std::atomic<std::size_t> peak{0};

  auto worker = [&](std::size_t w) {
    const auto ranges = out.plan.worker_ranges(w);
    std::size_t idx = 0;
    try {
      if (ranges.empty()) return;
      std::future<std::vector<CVec>> next =
          std::async(std::launch::async, load, ranges[0]);
      while (idx < ranges.size() && !stop.load()) {
        std::vector<CVec> cur = next.get();
        if (idx + 1 < ranges.size())
          next = std::async(std::launch::async, load, ranges[idx + 1]);
        const std::size_t buffered =
            cur.size() + (idx + 1 < ranges.size() ? ranges[idx + 1].len : 0);
        for (std::size_t seen = peak.load();
             buffered > seen && !peak.compare_exchange_weak(seen, buffered);) {
        }
        const SliceRange r = ranges[idx];
        for (std::size_t k = 0; k < r.len && !stop.load(); ++k) {
          SolveResult res = solve(cur[k], ops, cfg);
          const std::size_t z = 2 * (r.start + k);
          auto re = out.tomograms.slice(z);
          for (std::size_t i = 0; i < re.size(); ++i) re[i] = res.u[i].real();
          if (z + 1 < n_z) {
            auto im = out.tomograms.slice(z + 1);
            for (std::size_t i = 0; i < im.size(); ++i) im[i] = res.u[i].imag();
          }
          out.unit_reports[r.start + k] = std::move(res.report);
        }
        ++idx;
      }
      if (next.valid()) next.wait();
    } catch (const std::exception& e) {
      stop = true;
      std::lock_guard lock(fail_mutex);
      if (!failure) {
        const SliceRange units = idx < ranges.size() ? ranges[idx] : SliceRange{};
        const std::size_t first = 2 * units.start;
        const std::size_t last = std::min(n_z, 2 * (units.start + units.len));
        failure.emplace(SliceRange{first, last - first}, e.what());
      }
    }
  };

  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker, w);
  }  // joins: in-flight work drains before anything is reported
  if (failure) throw *failure;

  out.peak_buffered_units = peak.load();
  SolverReport& agg = out.report;
  agg.algorithm = cfg.algorithm;
  agg.converged = true;
  for (const auto& r : out.unit_reports) {
    agg.iterations_run = std::max(agg.iterations_run, r.iterations_run);
    agg.converged = agg.converged && r.converged;
    agg.breakdown = agg.breakdown || r.breakdown;
    if (agg.residual_history.size() < r.residual_history.size())
      agg.residual_history.resize(r.residual_history.size(), 0.0);
    for (std::size_t k = 0; k < r.residual_history.size(); ++k)
      agg.residual_history[k] += r.residual_history[k] * r.residual_history[k];
  }
  for (double& v : agg.residual_history) v = std::sqrt(v);
  agg.residual_history.resize(static_cast<std::size_t>(agg.iterations_run));
  agg.wall_time = std::chrono::duration<double>(
                      std::chrono::steady_clock::now() - t0)
                      .count();
  return out;
}

}  // namespace sptomo
