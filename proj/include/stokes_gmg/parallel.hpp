#pragma once

#include <algorithm>
#include <cstddef>
#include <thread>
#include <vector>

namespace stokes_gmg {

/// Runs fn(cell) over all cells of a level grouped into 2^dim colors by lattice parity.
/// Cells of one color share no support points, so scatter-adds inside a color never
/// collide. Colors run in a fixed order; the result does not depend on n_threads.
template <int dim, class Fn>
void for_each_cell_colored(int cells_per_axis, unsigned n_threads, Fn&& fn) {
  const int n = cells_per_axis;
  constexpr int n_colors = 1 << dim;
  for (int color = 0; color < n_colors; ++color) {
    std::array<int, 3> start{0, 0, 0}, count{1, 1, 1};
    for (int d = 0; d < dim; ++d) {
      start[static_cast<std::size_t>(d)] = (color >> d) & 1;
      count[static_cast<std::size_t>(d)] = (n - start[static_cast<std::size_t>(d)] + 1) / 2;
    }
    const std::size_t total = static_cast<std::size_t>(count[0]) * static_cast<std::size_t>(count[1]) *
                              static_cast<std::size_t>(count[2]);
    if (total == 0) continue;
    auto run_range = [&](std::size_t begin, std::size_t end) {
      for (std::size_t k = begin; k < end; ++k) {
        std::size_t rem = k, cell = 0, stride = 1;
        for (int d = 0; d < dim; ++d) {
          const auto cd = static_cast<std::size_t>(count[static_cast<std::size_t>(d)]);
          const std::size_t i = rem % cd;
          rem /= cd;
          cell += (static_cast<std::size_t>(start[static_cast<std::size_t>(d)]) + 2 * i) * stride;
          stride *= static_cast<std::size_t>(n);
        }
        fn(cell);
      }
    };
    const std::size_t workers = std::min<std::size_t>(std::max(1u, n_threads), total / 64 + 1);
    if (workers <= 1) {
      run_range(0, total);
      continue;
    }
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (total + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back([&run_range, b, e] { run_range(b, e); });
    }
  }
}

}  // namespace stokes_gmg
