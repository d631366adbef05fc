#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "cgmc/cg.hpp"
#include "cgmc/oracle.hpp"
#include "support.hpp"

using namespace cgmc;
using cgmc::testing::mixed_model;
using cgmc::testing::short_model;

TEST_CASE("cell partition function reduces to 1 at zero coupling") {
  const auto model = short_model(0.0);
  for (int eta : {-3, -1, 1, 3}) {
    for (const auto& bc : {oracle::BoundarySpec::free_free(), oracle::BoundarySpec::fixed(1, -1)}) {
      CHECK(oracle::cell_partition_function(eta, bc, model, 3) ==
            doctest::Approx(1.0).epsilon(1e-15));
    }
  }
}

TEST_CASE("free-boundary two-site slice at zero block sum") {
  for (double coupling : {0.2, 0.9, -1.3}) {
    const auto model = short_model(coupling);
    CHECK(oracle::cell_partition_function(0, {}, model, 2) ==
          doctest::Approx(std::exp(model.beta * coupling)).epsilon(1e-14));
  }
}

TEST_CASE("pinned three-site slice matches a hand-coded loop") {
  const double coupling = 0.4, beta = 1.0;
  const auto model = short_model(coupling, beta);
  // q=3, eta=1: slice members (+,+,-), (+,-,+), (-,+,+); left edge pinned to +1
  double expected = 0.0;
  const int slice[3][3] = {{-1, 1, 1}, {1, -1, 1}, {1, 1, -1}};
  for (const auto& c : slice) {
    const double e = coupling * (c[0] * c[1] + c[1] * c[2]) + coupling * (+1) * c[0];
    expected += std::exp(-beta * e);
  }
  expected /= 3.0;
  CHECK(oracle::cell_partition_function(1, oracle::BoundarySpec::fixed_left(+1), model, 3) ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("three-cell partition function on the printed examples") {
  CHECK(oracle::three_cell_partition_function(1, -1, 3, short_model(0.0), 3) ==
        doctest::Approx(1.0).epsilon(1e-15));
  // saturated q=2 triple: one configuration, three internal bonds + two crossings
  const double coupling = 0.7;
  CHECK(oracle::three_cell_partition_function(2, 2, 2, short_model(coupling), 2) ==
        doctest::Approx(std::exp(-5.0 * coupling)).epsilon(1e-13));
}

TEST_CASE("three-cell partition function matches an independent triple loop") {
  const double coupling = 0.3, beta = 1.0;
  const auto model = short_model(coupling, beta);
  const int q = 3;
  const auto slice_for = [&](int eta) { return enumerate_cell_configs(q, eta); };
  double sum = 0.0;
  std::uint64_t count = 0;
  for (const auto& a : slice_for(1)) {
    for (const auto& b : slice_for(-1)) {
      for (const auto& c : slice_for(1)) {
        double e = 0.0;
        for (int i = 0; i + 1 < q; ++i) {
          e += coupling * (a[i] * a[i + 1] + b[i] * b[i + 1] + c[i] * c[i + 1]);
        }
        e += coupling * a[q - 1] * b[0] + coupling * b[q - 1] * c[0];
        sum += std::exp(-beta * e);
        ++count;
      }
    }
  }
  CHECK(oracle::three_cell_partition_function(1, -1, 1, model, q) ==
        doctest::Approx(sum / count).epsilon(1e-13));
}

TEST_CASE("f_short vanishes at zero coupling and follows the q=2 closed form") {
  const auto zero = short_model(0.0);
  CHECK(oracle::f_short(0, +1, -1, zero, 2) == doctest::Approx(0.0).epsilon(1e-15));

  const double coupling = 0.6;
  const auto model = short_model(coupling);
  const double lambda = std::tanh(coupling);
  for (int sl : {-1, +1}) {
    for (int sr : {-1, +1}) {
      CHECK(oracle::f_short(0, sl, sr, model, 2) ==
            doctest::Approx(-lambda * lambda * sl * sr).epsilon(1e-13));
    }
  }
}

TEST_CASE("the four-partition-function telescoping identity holds") {
  for (int q : {2, 3, 4}) {
    for (double coupling : {0.25, 1.0}) {
      const auto model = short_model(coupling);
      for (int eta = -q; eta <= q; eta += 2) {
        for (int sl : {-1, +1}) {
          for (int sr : {-1, +1}) {
            const double lhs =
                oracle::cell_partition_function(eta, oracle::BoundarySpec::fixed(sl, sr), model, q);
            const double rhs =
                (1.0 + oracle::f_short(eta, sl, sr, model, q)) *
                oracle::cell_partition_function(eta, oracle::BoundarySpec::fixed_right(sr), model, q) *
                oracle::cell_partition_function(eta, oracle::BoundarySpec::fixed_left(sl), model, q) /
                oracle::cell_partition_function(eta, {}, model, q);
            CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
          }
        }
      }
    }
  }
}

TEST_CASE("exact coarse Hamiltonian vanishes for the trivial model") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto model = short_model(0.0);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CHECK(oracle::exact_cg_hamiltonian(eta, model, geo) == doctest::Approx(0.0).epsilon(1e-14));
  });
}

TEST_CASE("per-configuration and full-sweep coarse Hamiltonians agree") {
  const auto geo = LatticeGeometry::create(12, 3);
  const auto model = mixed_model(0.3, 1.0, KernelShape::Triangular, 4);
  const auto table = oracle::exact_cg_table(model, geo);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CHECK(oracle::exact_cg_hamiltonian(eta, model, geo) ==
          doctest::Approx(table[coarse_index(eta, geo)]).epsilon(1e-12));
  });
}

TEST_CASE("the exact coarse Hamiltonian is spin-flip symmetric") {
  const auto geo = LatticeGeometry::create(10, 5);  // M = 2
  const auto model = short_model(0.45);
  for_each_coarse_config(geo, [&](const CoarseConfiguration& eta) {
    CoarseConfiguration flipped = eta;
    for (auto& e : flipped.blocks) e = -e;
    CHECK(oracle::exact_cg_hamiltonian(eta, model, geo) ==
          doctest::Approx(oracle::exact_cg_hamiltonian(flipped, model, geo)).epsilon(1e-12));
  });
}

TEST_CASE("partition identity at desk scale") {
  SUBCASE("trivial model") {
    const auto check = oracle::exact_partition_identity_check(short_model(0.0),
                                                              LatticeGeometry::create(8, 2));
    CHECK(check.z_micro == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(check.z_coarse == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("short-range only") {
    const auto check = oracle::exact_partition_identity_check(short_model(0.5),
                                                              LatticeGeometry::create(8, 2));
    CHECK(check.relative_gap <= 1e-12);
  }
  SUBCASE("mixed model") {
    const auto check = oracle::exact_partition_identity_check(
        mixed_model(0.3, 1.0, KernelShape::Triangular, 4), LatticeGeometry::create(12, 3));
    CHECK(check.relative_gap <= 1e-10);
  }
}

TEST_CASE("f_long vanishes identically for the flat full-range kernel") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Constant, 4);
  const auto kernel = build_coarse_kernel(model, geo);
  for (int eta_j : {-2, 0, 2}) {
    for (int eta_k : {-2, 0, 2}) {
      for (const auto& sj : enumerate_cell_configs(2, eta_j)) {
        for (const auto& sk : enumerate_cell_configs(2, eta_k)) {
          for (const auto& [j, k] : std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 1}}) {
            CHECK(std::abs(oracle::f_long(sj, j == k ? sj : sk, j, k, model, kernel, geo)) <=
                  1e-14);
          }
        }
      }
    }
  }
}

TEST_CASE("the diagonal f_long matches the pair-deviation route") {
  const auto geo = LatticeGeometry::create(16, 4);
  const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, 6);
  const auto kernel = build_coarse_kernel(model, geo);
  const std::vector<Spin> saturated(4, Spin{+1});
  // deviation sum over distinct unordered pairs of the cell
  double deviation = 0.0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      deviation += model.long_range->kernel_value(geo.micro_distance(a, b)) - kernel.diag();
    }
  }
  CHECK(oracle::f_long(saturated, saturated, 0, 0, model, kernel, geo) ==
        doctest::Approx(std::expm1(model.beta * deviation)).epsilon(1e-13));
}

TEST_CASE("f_long magnitudes contract by about 4x per range doubling") {
  const int n = 128, q = 4;
  const auto geo = LatticeGeometry::create(n, q);
  const auto sup_at = [&](int range) {
    const auto model = mixed_model(0.0, 1.0, KernelShape::Triangular, range);
    const auto kernel = build_coarse_kernel(model, geo);
    double worst = 0.0;
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto sj = cgmc::testing::random_spins(q, seed).spins;
      const auto sk = cgmc::testing::random_spins(q, seed + 1000).spins;
      for (int d : {0, 1, 2}) {
        worst = std::max(worst, std::abs(oracle::f_long(sj, d == 0 ? sj : sk, 0, d, model,
                                                        kernel, geo)));
      }
    }
    return worst;
  };
  const double r8 = sup_at(8), r16 = sup_at(16), r32 = sup_at(32);
  CHECK(r8 / r16 > 2.5);
  CHECK(r8 / r16 < 6.0);
  CHECK(r16 / r32 > 2.5);
  CHECK(r16 / r32 < 6.0);
}

TEST_CASE("exact Gibbs expectations") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto magnetization = [](const SpinConfiguration& s) {
    double m = 0.0;
    for (int i = 0; i < s.size(); ++i) m += s[i];
    return m / s.size();
  };
  SUBCASE("magnetization vanishes by symmetry") {
    CHECK(std::abs(oracle::exact_gibbs_expectation(magnetization, short_model(0.8), geo)) <=
          1e-14);
  }
  SUBCASE("the infinite-temperature limit recovers the prior mean") {
    const auto model = short_model(0.7, 1e-8);
    const auto energy = [&](const SpinConfiguration& s) { return h_total(s, model, geo); };
    CHECK(std::abs(oracle::exact_gibbs_expectation(energy, model, geo)) <= 1e-6);
  }
  SUBCASE("the nearest-neighbor energy matches the transfer matrix") {
    const auto geo10 = LatticeGeometry::create(10, 5);
    const auto model = short_model(0.3);
    const auto energy = [&](const SpinConfiguration& s) { return h_total(s, model, geo10); };
    CHECK(oracle::exact_gibbs_expectation(energy, model, geo10) ==
          doctest::Approx(cgmc::testing::transfer_matrix_energy(10, 0.3, 1.0)).epsilon(1e-10));
  }
}

TEST_CASE("gibbs probabilities are normalized and consistent with state indexing") {
  const auto geo = LatticeGeometry::create(8, 2);
  const auto model = mixed_model(0.4, 1.0, KernelShape::Triangular, 3);
  const auto probs = oracle::exact_gibbs_probabilities(model, geo);
  double total = 0.0;
  for (double p : probs) total += p;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  std::size_t i = 0;
  for_each_spin_config(8, [&](const SpinConfiguration& s) {
    CHECK(oracle::spin_state_index(s) == i);
    ++i;
  });
}

TEST_CASE("full-state enumeration respects the capacity cap") {
  const auto geo = LatticeGeometry::create(24, 2);
  CHECK_THROWS_AS(oracle::exact_cg_table(short_model(0.1), geo), CapacityError);
}
