#pragma once

// Tiled parallel integer matrix squaring and the benchmark that turns it
// into a runtime dataset. Each worker count plays the role of one hardware
// configuration ("w1", "w2", ...).

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <latch>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "banditware/core.hpp"
#include "banditware/dataset.hpp"
#include "banditware/rng.hpp"

namespace banditware {

struct IntMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::int64_t> cells;  // row-major

  IntMatrix() = default;
  IntMatrix(std::size_t r, std::size_t c, std::int64_t fill = 0) : rows(r), cols(c), cells(r * c, fill) {}

  static IntMatrix identity(std::size_t n) {
    IntMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1;
    return m;
  }

  std::int64_t& operator()(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
  std::int64_t operator()(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }

  friend bool operator==(const IntMatrix&, const IntMatrix&) = default;
};

struct MatrixSpec {
  std::size_t size = 1;
  double sparsity = 0.0;  // fraction of zero cells
  std::int64_t min_value = 0;
  std::int64_t max_value = 10;

  void validate() const {
    if (size < 1) throw Error(Errc::invalid_config, "matrix size must be >= 1");
    if (!(sparsity >= 0.0 && sparsity <= 1.0)) throw Error(Errc::invalid_config, "sparsity must be in [0, 1]");
    if (min_value > max_value) throw Error(Errc::invalid_config, "min_value > max_value");
  }
};

/// Each cell is 0 with probability `sparsity`, otherwise uniform in
/// [min_value, max_value].
inline IntMatrix generate_matrix(const MatrixSpec& spec, Rng& rng) {
  spec.validate();
  IntMatrix m(spec.size, spec.size);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<std::int64_t> value(spec.min_value, spec.max_value);
  for (auto& c : m.cells) {
    // Drawing both keeps the stream layout independent of sparsity.
    const bool zero = coin(rng) < spec.sparsity;
    const auto v = value(rng);
    c = zero ? 0 : v;
  }
  return m;
}

/// Wrapping sum of all cells.
inline std::int64_t checksum(const IntMatrix& m) {
  std::uint64_t s = 0;
  for (auto c : m.cells) s += static_cast<std::uint64_t>(c);
  return static_cast<std::int64_t>(s);
}

struct SquareResult {
  IntMatrix product;
  double runtime_seconds = 0.0;
  std::int64_t checksum = 0;
};

/// M * M with output tiles handed out to `workers` threads. Only the
/// multiplication is timed; threads are started before the clock and released
/// together.
inline SquareResult time_square(const IntMatrix& m, std::size_t workers, std::size_t tile_size = 64) {
  if (m.rows != m.cols) {
    throw Error(Errc::non_square_matrix, std::to_string(m.rows) + "x" + std::to_string(m.cols));
  }
  if (workers < 1) throw Error(Errc::invalid_config, "workers must be >= 1");
  if (tile_size < 1) throw Error(Errc::invalid_config, "tile_size must be >= 1");

  const std::size_t n = m.rows;
  SquareResult res;
  res.product = IntMatrix(n, n);
  const std::size_t tiles_per_side = (n + tile_size - 1) / tile_size;
  const std::size_t n_tiles = tiles_per_side * tiles_per_side;

  const std::int64_t* a = m.cells.data();
  std::int64_t* c = res.product.cells.data();
  std::atomic<std::size_t> next{0};

  auto run_tiles = [&] {
    for (std::size_t t = next.fetch_add(1); t < n_tiles; t = next.fetch_add(1)) {
      const std::size_t i0 = (t / tiles_per_side) * tile_size;
      const std::size_t j0 = (t % tiles_per_side) * tile_size;
      const std::size_t i1 = std::min(n, i0 + tile_size);
      const std::size_t j1 = std::min(n, j0 + tile_size);
      for (std::size_t k0 = 0; k0 < n; k0 += tile_size) {
        const std::size_t k1 = std::min(n, k0 + tile_size);
        for (std::size_t i = i0; i < i1; ++i) {
          std::int64_t* crow = c + i * n;
          for (std::size_t k = k0; k < k1; ++k) {
            const std::int64_t aik = a[i * n + k];
            if (aik == 0) continue;
            const std::int64_t* brow = a + k * n;
            for (std::size_t j = j0; j < j1; ++j) crow[j] += aik * brow[j];
          }
        }
      }
    }
  };

  std::latch start(1);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      start.wait();
      run_tiles();
    });
  }
  const auto t0 = std::chrono::steady_clock::now();
  start.count_down();
  for (auto& th : pool) th.join();
  const auto t1 = std::chrono::steady_clock::now();

  res.runtime_seconds = std::chrono::duration<double>(t1 - t0).count();
  res.checksum = checksum(res.product);
  return res;
}

struct BenchGrid {
  std::vector<std::size_t> sizes;
  std::vector<double> sparsities{0.0};
  std::vector<std::int64_t> min_values{0};
  std::vector<std::int64_t> max_values{10};
  std::vector<std::size_t> workers{1, 2, 4};
  std::size_t repetitions = 1;
  std::size_t tile_size = 64;
  double memory_gb = 1.0;  // identical for every worker count
};

struct BenchProgress {
  MatrixSpec spec;
  std::size_t repetition = 0;
  std::size_t workers = 0;
  double runtime_seconds = 0.0;
};

inline const std::vector<std::string>& matmul_feature_names() {
  static const std::vector<std::string> names{"size", "sparsity", "min_value", "max_value"};
  return names;
}

inline std::string worker_hardware_id(std::size_t workers) { return "w" + std::to_string(workers); }

struct BenchResult {
  Dataset dataset;
  std::vector<HardwareConfig> hardware;
};

using SquareFn = std::function<SquareResult(const IntMatrix&, std::size_t workers, std::size_t tile_size)>;

/// Runs every (size, sparsity, min, max) combination `repetitions` times.
/// Each repetition squares one freshly generated matrix once per worker
/// count; checksums must agree across worker counts.
inline BenchResult bench_matmul(const BenchGrid& grid, Rng& rng,
                                const std::function<void(const BenchProgress&)>& progress = {},
                                const SquareFn& square = time_square) {
  if (grid.sizes.empty() || grid.sparsities.empty() || grid.min_values.empty() || grid.max_values.empty() ||
      grid.workers.empty()) {
    throw Error(Errc::invalid_config, "benchmark grid has an empty axis");
  }
  if (grid.repetitions < 1) throw Error(Errc::invalid_config, "repetitions must be >= 1");

  BenchResult out;
  for (auto w : grid.workers) {
    if (w < 1) throw Error(Errc::invalid_config, "worker counts must be >= 1");
    out.hardware.push_back(HardwareConfig{worker_hardware_id(w), static_cast<int>(w), grid.memory_gb, std::nullopt});
  }
  validate_hardware_set(out.hardware);

  const auto& names = matmul_feature_names();
  std::vector<RunRecord> records;
  for (auto size : grid.sizes) {
    for (auto sparsity : grid.sparsities) {
      for (auto lo : grid.min_values) {
        for (auto hi : grid.max_values) {
          if (lo > hi) continue;
          const MatrixSpec spec{size, sparsity, lo, hi};
          spec.validate();
          FeatureVector x{names, {static_cast<double>(size), sparsity, static_cast<double>(lo), static_cast<double>(hi)}};
          const auto instance = instance_key(x);
          for (std::size_t rep = 0; rep < grid.repetitions; ++rep) {
            const auto m = generate_matrix(spec, rng);
            std::optional<std::int64_t> reference;
            for (auto w : grid.workers) {
              const auto r = square(m, w, grid.tile_size);
              if (reference && *reference != r.checksum) {
                throw Error(Errc::checksum_mismatch, "size " + std::to_string(size) + " with " + std::to_string(w) +
                                                         " workers: " + std::to_string(r.checksum) + " != " +
                                                         std::to_string(*reference));
              }
              reference = r.checksum;
              records.push_back(RunRecord{instance, Observation{x, worker_hardware_id(w), r.runtime_seconds}});
              if (progress) progress(BenchProgress{spec, rep, w, r.runtime_seconds});
            }
          }
        }
      }
    }
  }
  if (records.empty()) throw Error(Errc::invalid_config, "no valid (min_value <= max_value) combinations");
  out.dataset = Dataset::from_records(names, std::move(records));
  return out;
}

}  // namespace banditware
