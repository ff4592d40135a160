#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <vector>

#include "cimtpu/hwconfig.hpp"
#include "cimtpu/memmodel.hpp"

using namespace cimtpu;

TEST_CASE("transfer_cycles") {
  CHECK(transfer_cycles({MemLevel::HBM_CMEM, 0, 614.0}) == 0);
  CHECK(transfer_cycles({MemLevel::HBM_CMEM, 614, 614.0}) == 1);
  CHECK(transfer_cycles({MemLevel::HBM_CMEM, 615, 614.0}) == 2);
  CHECK(transfer_cycles({MemLevel::CMEM_VMEM, 100, 10.0, 5}) == 15);
  CHECK_THROWS_AS(transfer_cycles({MemLevel::HBM_CMEM, 1, 0.0}), std::invalid_argument);

  // GPT-3 QKV weight matrix over the baseline HBM link
  TpuConfig cfg = builtin_preset("tpuv4i-baseline");
  const Bytes w = 7168ull * 21504;
  const Cycles got = transfer_cycles({MemLevel::HBM_CMEM, w, cfg.hbm_bytes_per_cycle()});
  CHECK(got == ceil_cycles(double(w), 614e9 / 1.05e9));
  CHECK(got == 263596);
}

TEST_CASE("pipeline_overlap: pinned cases") {
  const std::vector<Cycles> c1{10}, l1{4};
  CHECK(pipeline_overlap(c1, l1, true) == 14);
  CHECK(pipeline_overlap(c1, l1, false) == 14);

  const std::vector<Cycles> c2{10, 10}, l2{4, 4};
  CHECK(pipeline_overlap(c2, l2, true) == 24);   // 4 + max(10,4) + 10
  CHECK(pipeline_overlap(c2, l2, false) == 28);  // serial

  CHECK_THROWS_AS(pipeline_overlap(c2, l1, true), std::invalid_argument);
}

TEST_CASE("pipeline_overlap: bounds and uniform shortcut") {
  std::mt19937 rng(11);
  std::uniform_int_distribution<Cycles> dist(0, 50);
  std::uniform_int_distribution<size_t> len(1, 12);
  for (int iter = 0; iter < 300; ++iter) {
    const size_t n = len(rng);
    std::vector<Cycles> compute(n), load(n);
    Cycles sum_c = 0, sum_l = 0;
    for (size_t i = 0; i < n; ++i) {
      compute[i] = dist(rng);
      load[i] = dist(rng);
      sum_c += compute[i];
      sum_l += load[i];
    }
    const Cycles over = pipeline_overlap(compute, load, true);
    const Cycles serial = pipeline_overlap(compute, load, false);
    CHECK(over <= serial);
    CHECK(over >= std::max(sum_c, sum_l));
    CHECK(over <= sum_c + sum_l);
  }
  for (Cycles c : {0, 3, 9}) {
    for (Cycles l : {0, 5, 9}) {
      for (std::uint64_t tiles : {1, 2, 7}) {
        std::vector<Cycles> cs(tiles, c), ls(tiles, l);
        CHECK(pipeline_overlap_uniform(c, l, tiles, true) == pipeline_overlap(cs, ls, true));
        CHECK(pipeline_overlap_uniform(c, l, tiles, false) == pipeline_overlap(cs, ls, false));
      }
    }
  }
}

TEST_CASE("coalesced_bytes") {
  CHECK(coalesced_bytes(10, 64, 4096) == 640);   // burst-aligned rows, no penalty
  CHECK(coalesced_bytes(10, 16, 4096) == 640);   // 16 B rows pad to 64 B: 4x inflation
  CHECK(coalesced_bytes(10, 100, 4096) == 10 * 128);
  // a tile spanning the whole underlying row is one contiguous block
  CHECK(coalesced_bytes(10, 100, 100) == round_up(1000, 64));
  // decode K-cache tile: 128 head rows of 48 bytes strided across the cache
  CHECK(coalesced_bytes(128, 48, 1280) == 128 * 64);
}

TEST_CASE("capacity rule halves the streamed share under double buffering") {
  CHECK(capacity_ok(100, 50, 250, true));
  CHECK_FALSE(capacity_ok(101, 50, 250, true));
  CHECK(capacity_ok(200, 50, 250, false));
  CHECK_FALSE(capacity_ok(201, 50, 250, false));
}
