// Copyright 2026 The LSAT Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <sstream>

#include "lsat/bench.hpp"

using namespace lsat;

namespace {

const BenchRow& row(const BenchResult& r, std::size_t b, std::size_t t) {
  for (const auto& x : r.rows)
    if (x.patches == b && x.variants == t) return x;
  throw std::runtime_error("no row");
}

std::string without_wall_time(const std::string& csv) {
  std::istringstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + '\n';
  return out;
}

}  // namespace

TEST_SUITE("bench") {
  TEST_CASE("quadrupling B scales global cost by 16 and local cost by 4") {
    std::vector<std::size_t> bs{16, 64}, ts{3};
    BenchResult r = bench_scaling(bs, ts, 12, 3);
    const BenchRow& small = row(r, 16, 3);
    const BenchRow& big = row(r, 64, 3);
    CHECK(big.global_muladds == 16 * small.global_muladds);
    CHECK(big.local_muladds == 4 * small.local_muladds);
    CHECK(small.local_muladds == 2 * 16 * 3 * 12);
    CHECK(small.global_muladds == 2 * 16 * 16 * 12);
    CHECK(small.local_total_muladds > small.local_muladds);
    CHECK(small.global_total_muladds > small.global_muladds);
  }

  TEST_CASE("rows are sorted by B then T and counts are positive") {
    std::vector<std::size_t> bs{36, 4}, ts{3, 1, 2};
    BenchResult r = bench_scaling(bs, ts, 6, 2);
    REQUIRE(r.rows.size() == 6);
    for (std::size_t i = 1; i < r.rows.size(); ++i) {
      const auto& a = r.rows[i - 1];
      const auto& b = r.rows[i];
      CHECK((a.patches < b.patches || (a.patches == b.patches && a.variants < b.variants)));
    }
    for (const auto& x : r.rows) {
      CHECK(x.local_muladds > 0);
      CHECK(x.global_muladds > 0);
    }
  }

  TEST_CASE("local scores undercut global scores when T is at most sqrt(B)") {
    std::vector<std::size_t> bs{16, 64, 256}, ts{2, 4, 9, 18};
    BenchResult r = bench_scaling(bs, ts, 6, 2);
    for (const auto& x : r.rows) {
      if (x.variants * x.variants <= x.patches) CHECK(x.local_muladds <= x.global_muladds);
    }
  }

  TEST_CASE("log-log slopes recover the exponents") {
    std::vector<double> x{1, 2, 4, 8}, y{3, 12, 48, 192};
    CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
    std::vector<std::size_t> bs{16, 64, 256}, ts{2, 4};
    BenchResult r = bench_scaling(bs, ts, 6, 2);
    CHECK(slope_vs_patches(r, 2, BenchMetric::kGlobal) == doctest::Approx(2.0));
    CHECK(slope_vs_patches(r, 4, BenchMetric::kLocal) == doctest::Approx(1.0));
    CHECK(slope_vs_variants(r, 64, BenchMetric::kLocal) == doctest::Approx(1.0));
    CHECK(slope_vs_variants(r, 64, BenchMetric::kGlobal) == doctest::Approx(0.0));
  }

  TEST_CASE("CSV is stable apart from wall time") {
    std::vector<std::size_t> bs{4, 16}, ts{2};
    std::ostringstream a, b;
    write_bench_csv(a, bench_scaling(bs, ts, 6, 2));
    write_bench_csv(b, bench_scaling(bs, ts, 6, 2));
    CHECK(a.str().starts_with("B,T,D,local_muladds,global_muladds,local_total_muladds,global_total_muladds,wall_ns\n"));
    CHECK(a.str().find('\r') == std::string::npos);
    CHECK(without_wall_time(a.str()) == without_wall_time(b.str()));
  }
}
