#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <thread>
#include <vector>

namespace gems {

// Global worker count for tile loops. 0 means hardware_concurrency.
void set_thread_count(int n);
int thread_count();

// Runs fn(tile_index) for tile_index in [0, n_tiles). Tiles are claimed from an
// atomic counter; the tile decomposition itself never depends on the worker
// count, so any per-tile outputs reduced in tile order are thread-count
// independent.
void parallel_tiles(std::size_t n_tiles, const std::function<void(std::size_t)>& fn);

}  // namespace gems
